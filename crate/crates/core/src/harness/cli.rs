//! Command-line front end. Exit codes: 0 success, 1 usage or validation
//! error, 2 runtime failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{ExperimentConfig, PenaltySource};
use super::evaluate::{evaluate, named};
use super::pipeline::resolve_penalty;
use super::run::{ablate, create_dir, dataset_for, run_experiment, save_reports, write_metadata, ABLATION_HEADER, BEST_CKPT};
use crate::data::save_dataset;
use crate::error::{Error, Result};
use crate::metrics::{parse_report_csv, render_table, render_table_labeled, REPORT_HEADER};
use crate::model::load_checkpoint;
use crate::penalty::save_penalty_csv;

#[derive(Parser, Debug)]
#[command(name = "penreg", version, about = "Penalty-matrix loss regularization workbench")]
struct Cli {
    /// TOML experiment config (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (for build-penalty, a `.csv` path names the file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate phantoms and write them with a manifest.
    GenData,
    /// Build a penalty matrix and write it as CSV.
    BuildPenalty {
        #[arg(value_enum)]
        kind: PenaltyKind,
    },
    /// Build the penalty, train, evaluate and write all artifacts.
    Train,
    /// Evaluate a checkpoint on the four test variants.
    Eval {
        /// Defaults to `<out>/best.ckpt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the four-arm ablation.
    Ablate,
    /// Render report CSVs in a directory as aligned tables.
    Report {
        /// Defaults to the output directory.
        dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PenaltyKind {
    Hc,
    Cm,
    Hccm,
    Fixture,
}

impl From<PenaltyKind> for PenaltySource {
    fn from(k: PenaltyKind) -> Self {
        match k {
            PenaltyKind::Hc => PenaltySource::Hierarchy,
            PenaltyKind::Cm => PenaltySource::Cm,
            PenaltyKind::Hccm => PenaltySource::Hccm,
            PenaltyKind::Fixture => PenaltySource::Fixture,
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    if let Command::Report { dir } = &cli.command {
        let dir = match (dir, &cli.out) {
            (Some(d), _) | (None, Some(d)) => d.clone(),
            (None, None) => load_config(&cli)?.out_dir,
        };
        print!("{}", render_reports(&dir)?);
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::GenData => {
            let ds = dataset_for(&cfg)?;
            save_dataset(&ds, &cfg.out_dir)?;
            let [a, b, c, d] = ds.splits.sizes();
            println!(
                "wrote {} samples to {} (train {a}, validation {b}, holdout {c}, test {d})",
                ds.samples.len(),
                cfg.out_dir.display()
            );
        }
        Command::BuildPenalty { kind } => {
            let source = PenaltySource::from(kind);
            let ds = match source {
                PenaltySource::Cm | PenaltySource::Hccm => Some(dataset_for(&cfg)?),
                _ => None,
            };
            let (w, _) = match &ds {
                Some(ds) => resolve_penalty(&cfg, ds, source)?,
                None => resolve_penalty(&cfg, &empty_dataset(), source)?,
            };
            let path = if cfg.out_dir.extension().is_some_and(|e| e == "csv") {
                if let Some(parent) = cfg.out_dir.parent().filter(|p| !p.as_os_str().is_empty()) {
                    create_dir(parent)?;
                }
                cfg.out_dir.clone()
            } else {
                create_dir(&cfg.out_dir)?;
                cfg.out_dir.join(format!("penalty_{}.csv", source.name()))
            };
            save_penalty_csv(&w, &path)?;
            println!("wrote {} penalty to {}", w.provenance(), path.display());
        }
        Command::Train => {
            let art = run_experiment(&cfg)?;
            println!(
                "trained {} steps; best validation dice {:.4} at step {}; artifacts in {}",
                art.outcome.log.len(),
                art.outcome.best_validation_dice,
                art.outcome.best_step,
                art.dir.display()
            );
            print!("{}", render_reports(&art.dir)?);
        }
        Command::Eval { checkpoint } => {
            let ckpt = checkpoint.unwrap_or_else(|| cfg.out_dir.join(BEST_CKPT));
            let params = load_checkpoint(&ckpt)?;
            let ds = dataset_for(&cfg)?;
            let reports = named(evaluate(&params, &ds, &cfg)?);
            create_dir(&cfg.out_dir)?;
            write_metadata(&cfg.out_dir, &cfg, "eval")?;
            save_reports(&cfg.out_dir, &reports)?;
            print!("{}", render_reports(&cfg.out_dir)?);
        }
        Command::Ablate => {
            ablate(&cfg)?;
            print!("{}", render_reports(&cfg.out_dir)?);
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
    Ok(())
}

/// Stand-in for penalty sources that need no data.
fn empty_dataset() -> crate::data::Dataset {
    crate::data::Dataset {
        samples: Vec::new(),
        splits: Default::default(),
    }
}

/// Renders every report or ablation CSV directly inside `dir`.
pub fn render_reports(dir: &Path) -> Result<String> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let mut out = String::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let origin = p.display().to_string();
        let first = text.lines().next().unwrap_or("").trim();
        let body = if first == REPORT_HEADER {
            render_table(&parse_report_csv(&text, &origin)?)
        } else if first == ABLATION_HEADER {
            let swapped = text.replacen(ABLATION_HEADER, REPORT_HEADER, 1);
            render_table_labeled(&parse_report_csv(&swapped, &origin)?, "ablation")
        } else {
            continue;
        };
        out.push_str(&format!("== {} ==\n{body}", p.file_name().unwrap().to_string_lossy()));
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("no report or ablation CSV files in {}", dir.display())));
    }
    Ok(out)
}
