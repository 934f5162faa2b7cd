//! Synthetic head phantoms: nested elliptical tissue layers plus small blobs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Provenance, SegmentationSample};
use crate::error::{Error, Result};
use crate::grid::{LabelMap, Tensor3};
use crate::penalty::{ClassSet, FIXTURE_CLASSES};

/// Layer classes from the outside in, paired with their radius field.
pub const LAYER_ORDER: [&str; 8] = ["Skin", "Fat", "Muscle", "CoB", "CaB", "CSF", "GM", "WM"];

/// Outer radius of each layer as a fraction of half the image size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerRadii {
    pub skin: f64,
    pub fat: f64,
    pub muscle: f64,
    pub cortical_bone: f64,
    pub cancellous_bone: f64,
    pub csf: f64,
    pub grey_matter: f64,
    pub white_matter: f64,
}

impl Default for LayerRadii {
    fn default() -> Self {
        Self {
            skin: 0.84,
            fat: 0.77,
            muscle: 0.70,
            cortical_bone: 0.63,
            cancellous_bone: 0.565,
            csf: 0.495,
            grey_matter: 0.43,
            white_matter: 0.30,
        }
    }
}

impl LayerRadii {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.skin,
            self.fat,
            self.muscle,
            self.cortical_bone,
            self.cancellous_bone,
            self.csf,
            self.grey_matter,
            self.white_matter,
        ]
    }
}

/// Count and radius range (pixels) of a blob class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub min_count: usize,
    pub max_count: usize,
    pub min_radius: f64,
    pub max_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub height: usize,
    pub width: usize,
    pub classes: ClassSet,
    pub radii: LayerRadii,
    /// Whole-head scale is drawn from `[1 - head_scale_jitter, 1]`.
    pub head_scale_jitter: f64,
    /// Relative per-layer radius jitter.
    pub layer_jitter: f64,
    /// Center offset bound as a fraction of half the image size.
    pub center_jitter: f64,
    /// Bound on the ellipse aspect perturbation.
    pub aspect_jitter: f64,
    pub eyes: BlobSpec,
    pub air: BlobSpec,
    pub blood: BlobSpec,
    /// Mean intensity per class, in class-set order.
    pub intensity: Vec<f64>,
    /// Standard deviation of the per-pixel texture.
    pub texture_sigma: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        let classes = ClassSet::new(FIXTURE_CLASSES).expect("fixture classes are valid");
        let mut intensity = vec![0.0; classes.len()];
        for (name, v) in [
            ("BG", 0.0),
            ("WM", 0.70),
            ("GM", 0.52),
            ("Eyes", 0.36),
            ("CSF", 0.20),
            ("Air", 0.05),
            ("Blood", 0.80),
            ("CaB", 0.30),
            ("CoB", 0.12),
            ("Skin", 0.60),
            ("Fat", 0.90),
            ("Muscle", 0.44),
        ] {
            intensity[classes.index_of(name).unwrap()] = v;
        }
        Self {
            height: 64,
            width: 64,
            classes,
            radii: LayerRadii::default(),
            head_scale_jitter: 0.06,
            layer_jitter: 0.02,
            center_jitter: 0.04,
            aspect_jitter: 0.06,
            eyes: BlobSpec {
                min_count: 2,
                max_count: 2,
                min_radius: 2.5,
                max_radius: 3.5,
            },
            air: BlobSpec {
                min_count: 1,
                max_count: 2,
                min_radius: 2.5,
                max_radius: 3.5,
            },
            blood: BlobSpec {
                min_count: 1,
                max_count: 3,
                min_radius: 2.0,
                max_radius: 3.0,
            },
            intensity,
            texture_sigma: 0.02,
        }
    }
}

/// Class ids the generator paints, resolved by name.
struct ClassIds {
    bg: u8,
    layers: [u8; 8],
    eyes: u8,
    air: u8,
    blood: u8,
}

impl PhantomSpec {
    /// Systematic shift standing in for a different scanner: brighter means,
    /// stronger texture.
    pub fn shifted(&self, intensity_shift: f64, texture_factor: f64) -> Self {
        let mut s = self.clone();
        for v in &mut s.intensity {
            *v = (*v + intensity_shift).clamp(0.0, 1.0);
        }
        s.texture_sigma *= texture_factor;
        s
    }

    fn class_ids(&self) -> Result<ClassIds> {
        let id = |name: &str| {
            self.classes
                .index_of(name)
                .map(|i| i as u8)
                .ok_or_else(|| Error::Config(format!("phantom classes must include {name:?}")))
        };
        let mut layers = [0u8; 8];
        for (slot, name) in layers.iter_mut().zip(LAYER_ORDER) {
            *slot = id(name)?;
        }
        Ok(ClassIds {
            bg: id("BG")?,
            layers,
            eyes: id("Eyes")?,
            air: id("Air")?,
            blood: id("Blood")?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.class_ids()?;
        if self.intensity.len() != self.classes.len() {
            return Err(Error::Config(format!(
                "{} intensity means for {} classes",
                self.intensity.len(),
                self.classes.len()
            )));
        }
        if self.intensity.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("intensity means must lie in [0, 1]".into()));
        }
        if !(self.texture_sigma >= 0.0 && self.texture_sigma.is_finite()) {
            return Err(Error::Config("texture_sigma must be finite and >= 0".into()));
        }
        for (name, j) in [
            ("head_scale_jitter", self.head_scale_jitter),
            ("layer_jitter", self.layer_jitter),
            ("center_jitter", self.center_jitter),
            ("aspect_jitter", self.aspect_jitter),
        ] {
            if !(0.0..0.5).contains(&j) {
                return Err(Error::Config(format!("{name} must lie in [0, 0.5)")));
            }
        }
        let r = self.radii.as_array();
        if r[0] > 1.0 || r[7] <= 0.0 {
            return Err(Error::Config("layer radii must lie in (0, 1]".into()));
        }
        let j = self.layer_jitter;
        for k in 0..7 {
            if r[k] * (1.0 - j) <= r[k + 1] * (1.0 + j) {
                return Err(Error::Config(format!(
                    "radius of {} must exceed that of {} by more than the layer jitter",
                    LAYER_ORDER[k],
                    LAYER_ORDER[k + 1]
                )));
            }
        }
        for (name, b) in [("eyes", self.eyes), ("air", self.air), ("blood", self.blood)] {
            if b.min_count > b.max_count || !(b.min_radius >= 1.0 && b.min_radius <= b.max_radius) {
                return Err(Error::Config(format!("invalid blob spec for {name}")));
            }
        }
        if self.height < 8 || self.width < 8 {
            return Err(Error::Config("phantoms must be at least 8x8".into()));
        }
        Ok(())
    }
}

impl PhantomSpec {
    /// Worst case over all jitter draws: the head stays inside the frame,
    /// every ring is at least a pixel thick and the core is at least a pixel
    /// in radius. Checked before drawing, so generation never fails for a
    /// spec that passes.
    pub fn check_geometry(&self) -> Result<()> {
        let half = self.height.min(self.width) as f64 / 2.0;
        let r = self.radii.as_array();
        let j = self.layer_jitter;
        let smallest = 1.0 - self.head_scale_jitter;
        let extent = r[0] * half * (1.0 + j) * (1.0 + self.aspect_jitter) + self.center_jitter * half;
        if extent > half - 0.5 {
            return Err(Error::Geometry(format!(
                "head extent up to {extent:.2} px does not fit a {}x{} frame",
                self.height, self.width
            )));
        }
        for k in 0..7 {
            let gap = (r[k] * (1.0 - j) - r[k + 1] * (1.0 + j)) * half * smallest;
            if gap < 1.0 {
                return Err(Error::Geometry(format!(
                    "{} ring can shrink to {gap:.2} px, below one pixel",
                    LAYER_ORDER[k]
                )));
            }
        }
        if r[7] * (1.0 - j) * half * smallest < 1.0 {
            return Err(Error::Geometry("innermost layer can collapse below a pixel".into()));
        }
        Ok(())
    }
}

/// The realized geometry of one phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomGeometry {
    pub center: (f64, f64),
    /// Per-axis stretch of the normalized radius, `(y, x)`.
    pub aspect: (f64, f64),
    /// Realized outer radius of each layer in pixels, outermost first.
    pub layer_radii: [f64; 8],
}

impl PhantomGeometry {
    /// Elliptical radius of a pixel center in pixel units.
    pub fn normalized_radius(&self, y: usize, x: usize) -> f64 {
        let dy = (y as f64 - self.center.0) / self.aspect.0;
        let dx = (x as f64 - self.center.1) / self.aspect.1;
        (dy * dy + dx * dx).sqrt()
    }

    /// Index into [`LAYER_ORDER`] of the innermost layer containing the
    /// pixel, or `None` outside the head.
    pub fn ring_index(&self, y: usize, x: usize) -> Option<usize> {
        let rho = self.normalized_radius(y, x);
        self.layer_radii.iter().rposition(|&r| rho <= r)
    }

    /// Pixel position at elliptical radius `rho` and angle `theta`
    /// (0 = straight up, clockwise positive).
    fn point_at(&self, rho: f64, theta: f64) -> (f64, f64) {
        (
            self.center.0 - rho * theta.cos() * self.aspect.0,
            self.center.1 + rho * theta.sin() * self.aspect.1,
        )
    }
}

fn paint_disk(labels: &mut LabelMap, center: (f64, f64), radius: f64, class: u8) {
    let y0 = (center.0 - radius).floor().max(0.0) as usize;
    let x0 = (center.1 - radius).floor().max(0.0) as usize;
    let y1 = ((center.0 + radius).ceil() as usize).min(labels.height - 1);
    let x1 = ((center.1 + radius).ceil() as usize).min(labels.width - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dy, dx) = (y as f64 - center.0, x as f64 - center.1);
            if dy * dy + dx * dx <= radius * radius {
                labels.set(y, x, class);
            }
        }
    }
}

/// Draws one phantom. Deterministic in `(spec, seed)`.
pub fn generate_phantom(spec: &PhantomSpec, seed: u64) -> Result<SegmentationSample> {
    generate_phantom_with_geometry(spec, seed).map(|(s, _)| s)
}

pub fn generate_phantom_with_geometry(spec: &PhantomSpec, seed: u64) -> Result<(SegmentationSample, PhantomGeometry)> {
    spec.validate()?;
    spec.check_geometry()?;
    let ids = spec.class_ids()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (spec.height, spec.width);
    let half = h.min(w) as f64 / 2.0;

    let head_scale = 1.0 - rng.random_range(0.0..=spec.head_scale_jitter);
    let cj = spec.center_jitter * half;
    let center = (
        (h as f64 - 1.0) / 2.0 + rng.random_range(-cj..=cj),
        (w as f64 - 1.0) / 2.0 + rng.random_range(-cj..=cj),
    );
    let a = rng.random_range(-spec.aspect_jitter..=spec.aspect_jitter);
    let aspect = (1.0 + a, 1.0 - a);
    let mut layer_radii = [0.0; 8];
    for (r, frac) in layer_radii.iter_mut().zip(spec.radii.as_array()) {
        let j = rng.random_range(-spec.layer_jitter..=spec.layer_jitter);
        *r = frac * half * head_scale * (1.0 + j);
    }
    let geom = PhantomGeometry {
        center,
        aspect,
        layer_radii,
    };

    let mut labels = LabelMap::filled(h, w, ids.bg);
    for y in 0..h {
        for x in 0..w {
            if let Some(k) = geom.ring_index(y, x) {
                labels.set(y, x, ids.layers[k]);
            }
        }
    }

    // Air: sinus-like pockets at the front midline within the bone layers.
    let r = &geom.layer_radii;
    let n_air = rng.random_range(spec.air.min_count..=spec.air.max_count);
    for _ in 0..n_air {
        let rho = rng.random_range(r[4]..=r[3]);
        let theta = rng.random_range(-0.25..=0.25);
        let radius = rng.random_range(spec.air.min_radius..=spec.air.max_radius);
        paint_disk(&mut labels, geom.point_at(rho, theta), radius, ids.air);
    }
    // Eyes: a pair straddling the midline, between muscle and CSF.
    let n_eyes = rng.random_range(spec.eyes.min_count..=spec.eyes.max_count);
    for e in 0..n_eyes {
        let rho = 0.5 * (r[2] + r[5]);
        let side = if e % 2 == 0 { -1.0 } else { 1.0 };
        let theta = side * rng.random_range(0.45..=0.65);
        let radius = rng.random_range(spec.eyes.min_radius..=spec.eyes.max_radius);
        paint_disk(&mut labels, geom.point_at(rho, theta), radius, ids.eyes);
    }
    // Blood: small vessels in the brain.
    let n_blood = rng.random_range(spec.blood.min_count..=spec.blood.max_count);
    for _ in 0..n_blood {
        let rho = rng.random_range(0.3 * r[7]..=r[6]);
        let theta = rng.random_range(1.2..=std::f64::consts::TAU - 1.2);
        let radius = rng.random_range(spec.blood.min_radius..=spec.blood.max_radius);
        paint_disk(&mut labels, geom.point_at(rho, theta), radius, ids.blood);
    }

    let noise = Normal::new(0.0, spec.texture_sigma.max(f64::MIN_POSITIVE)).expect("sigma is finite and positive");
    let data = labels
        .labels
        .iter()
        .map(|&l| {
            let jitter = if spec.texture_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            (spec.intensity[l as usize] + jitter).clamp(0.0, 1.0)
        })
        .collect();
    let image = Tensor3::from_vec(h, w, 1, data)?;
    let sample = SegmentationSample {
        id: format!("phantom-{seed:016x}"),
        image,
        labels,
        provenance: Provenance::Clean,
    };
    Ok((sample, geom))
}
