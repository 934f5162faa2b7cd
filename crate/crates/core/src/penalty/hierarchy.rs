//! Expert class hierarchies and the HC penalty construction.
//!
//! Trees are written as nested parenthesized lists of class names, e.g.
//! `(BG Eyes (WM GM CSF) (CaB CoB))`. The outermost list is the root.

use serde::{Deserialize, Serialize};

use super::{ClassSet, PenaltyMatrix, Provenance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum HierarchyNode {
    Leaf(String),
    Group(Vec<HierarchyNode>),
}

impl HierarchyNode {
    /// Parses the parenthesized tree notation.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let node = parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Config(format!(
                "trailing input after hierarchy root: {:?}",
                tokens[pos..].join(" ")
            )));
        }
        match node {
            HierarchyNode::Group(_) => Ok(node),
            HierarchyNode::Leaf(name) => Err(Error::Config(format!(
                "hierarchy root must be a group, found leaf {name:?}"
            ))),
        }
    }

    fn render(&self, out: &mut String) {
        match self {
            HierarchyNode::Leaf(n) => out.push_str(n),
            HierarchyNode::Group(children) => {
                out.push('(');
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    c.render(out);
                }
                out.push(')');
            }
        }
    }

    /// Depth of the deepest group below and including this node (a lone group
    /// has height 1).
    fn group_height(&self) -> usize {
        match self {
            HierarchyNode::Leaf(_) => 0,
            HierarchyNode::Group(children) => 1 + children.iter().map(Self::group_height).max().unwrap_or(0),
        }
    }

    fn collect_paths(&self, prefix: &mut Vec<usize>, out: &mut Vec<(String, Vec<usize>)>) {
        match self {
            HierarchyNode::Leaf(n) => out.push((n.clone(), prefix.clone())),
            HierarchyNode::Group(children) => {
                for (i, c) in children.iter().enumerate() {
                    prefix.push(i);
                    c.collect_paths(prefix, out);
                    prefix.pop();
                }
            }
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() || c == ',' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

fn parse_node(tokens: &[String], pos: &mut usize) -> Result<HierarchyNode> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Config("unexpected end of hierarchy".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut children = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    None => return Err(Error::Config("unbalanced '(' in hierarchy".into())),
                    Some(")") => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => children.push(parse_node(tokens, pos)?),
                }
            }
            if children.is_empty() {
                return Err(Error::Config("empty group in hierarchy".into()));
            }
            Ok(HierarchyNode::Group(children))
        }
        ")" => Err(Error::Config("unbalanced ')' in hierarchy".into())),
        name => Ok(HierarchyNode::Leaf(name.to_string())),
    }
}

/// A rooted class tree plus one penalty per group level.
///
/// `level_penalties[0]` applies to classes that split inside the deepest
/// groups; the last entry applies to classes that split at the root and must
/// be 1.0. Values are strictly increasing and lie in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHierarchy", into = "RawHierarchy")]
pub struct ClassHierarchy {
    root: HierarchyNode,
    level_penalties: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawHierarchy {
    tree: String,
    level_penalties: Vec<f64>,
}

impl TryFrom<RawHierarchy> for ClassHierarchy {
    type Error = Error;

    fn try_from(raw: RawHierarchy) -> Result<Self> {
        ClassHierarchy::new(HierarchyNode::parse(&raw.tree)?, raw.level_penalties)
    }
}

impl From<ClassHierarchy> for RawHierarchy {
    fn from(h: ClassHierarchy) -> Self {
        RawHierarchy {
            tree: h.tree_string(),
            level_penalties: h.level_penalties,
        }
    }
}

impl ClassHierarchy {
    pub fn new(root: HierarchyNode, level_penalties: Vec<f64>) -> Result<Self> {
        let levels = root.group_height();
        if level_penalties.len() != levels {
            return Err(Error::Config(format!(
                "hierarchy has {levels} group levels but {} penalties were given",
                level_penalties.len()
            )));
        }
        for w in level_penalties.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Config(format!(
                    "level penalties must strictly increase toward the root: {level_penalties:?}"
                )));
            }
        }
        if level_penalties.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Config(format!("level penalties must lie in (0, 1]: {level_penalties:?}")));
        }
        if level_penalties.last() != Some(&1.0) {
            return Err(Error::Config("the root-level penalty must be 1.0".into()));
        }
        Ok(Self { root, level_penalties })
    }

    pub fn parse(tree: &str, level_penalties: Vec<f64>) -> Result<Self> {
        Self::new(HierarchyNode::parse(tree)?, level_penalties)
    }

    /// Every class a direct child of the root.
    pub fn flat(classes: &ClassSet) -> Self {
        let root = HierarchyNode::Group(classes.names().iter().cloned().map(HierarchyNode::Leaf).collect());
        Self {
            root,
            level_penalties: vec![1.0],
        }
    }

    /// Brain, bone and soft-tissue groups over the 12 fixture classes;
    /// everything else hangs off the root. Intra-group penalty 0.5.
    pub fn default_head() -> Self {
        Self::parse("(BG Eyes Air Blood (WM GM CSF) (CaB CoB) (Skin Fat Muscle))", vec![0.5, 1.0])
            .expect("built-in hierarchy is valid")
    }

    pub fn tree_string(&self) -> String {
        let mut s = String::new();
        self.root.render(&mut s);
        s
    }

    pub fn level_penalties(&self) -> &[f64] {
        &self.level_penalties
    }

    /// Class name to its path of child indices from the root.
    fn leaf_paths(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.root.collect_paths(&mut Vec::new(), &mut out);
        out
    }

    /// Penalty for a pair of leaf paths: the value of the level at which
    /// they diverge (depth 0 = root).
    fn divergence_penalty(&self, a: &[usize], b: &[usize]) -> f64 {
        let depth = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        let levels = self.level_penalties.len();
        self.level_penalties[levels - 1 - depth]
    }
}

/// Builds the HC penalty: `W[i][j]` is the penalty of the shallowest group
/// in which classes `i` and `j` part ways.
pub fn build_hc_matrix(hierarchy: &ClassHierarchy, classes: &ClassSet) -> Result<PenaltyMatrix> {
    let paths = hierarchy.leaf_paths();
    for (i, (name, _)) in paths.iter().enumerate() {
        if classes.index_of(name).is_none() {
            return Err(Error::Config(format!("hierarchy leaf {name:?} is not a known class")));
        }
        if paths[..i].iter().any(|(n, _)| n == name) {
            return Err(Error::Config(format!("class {name:?} appears more than once in the hierarchy")));
        }
    }
    let by_class: Vec<&[usize]> = classes
        .names()
        .iter()
        .map(|name| {
            paths
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, p)| p.as_slice())
                .ok_or_else(|| Error::Config(format!("class {name:?} is missing from the hierarchy")))
        })
        .collect::<Result<_>>()?;

    let n = classes.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = hierarchy.divergence_penalty(by_class[i], by_class[j]);
            }
        }
    }
    PenaltyMatrix::from_clamped(classes.clone(), values, Provenance::Hc)
}
