//! Seeded synthetic mask corpora.
//!
//! Every family has a distinct number of arms or petals, so the pruned
//! skeletons of different classes differ in endpoint count. Each sample
//! gets its own rotation, a scale jitter of up to 20% either way, and a
//! smooth radial boundary perturbation whose amplitude is the noise level
//! (as a fraction of the local radius).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{ingest, Corpus};
use super::io::write_pgm;
use super::HarnessError;
use crate::skeleton::{largest_component, BinaryRaster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ShapeFamily {
    /// Star polygon with `k` pointed arms.
    Star(u32),
    /// `k` elliptical petals around a disc.
    Rosette(u32),
    /// Four thin rectangular arms.
    Cross,
    /// Ellipse pierced by `k` thin spokes.
    Spokes(u32),
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeFamily::Star(k) => write!(f, "star{k}"),
            ShapeFamily::Rosette(k) => write!(f, "rosette{k}"),
            ShapeFamily::Cross => f.write_str("cross"),
            ShapeFamily::Spokes(k) => write!(f, "spokes{k}"),
        }
    }
}

impl FromStr for ShapeFamily {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let bad = || HarnessError::BadSpec(format!("unknown shape family {s:?}"));
        if s == "cross" {
            return Ok(ShapeFamily::Cross);
        }
        let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let k: u32 = s[split..].parse().map_err(|_| bad())?;
        let family = match &s[..split] {
            "star" => ShapeFamily::Star(k),
            "rosette" => ShapeFamily::Rosette(k),
            "spokes" => ShapeFamily::Spokes(k),
            _ => return Err(bad()),
        };
        if !(3..=12).contains(&k) {
            return Err(HarnessError::BadSpec(format!("{s}: count must be in 3..=12")));
        }
        Ok(family)
    }
}

impl TryFrom<String> for ShapeFamily {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, HarnessError> {
        s.parse()
    }
}

impl From<ShapeFamily> for String {
    fn from(f: ShapeFamily) -> Self {
        f.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub family: ShapeFamily,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: Vec<ClassSpec>,
    /// Relative amplitude of the boundary perturbation, 0 for clean shapes.
    pub noise: f64,
    pub seed: u64,
    /// Side of the square canvas, pixels.
    pub size: usize,
}

pub const STANDARD_NOISE: f64 = 0.03;
pub const DEFAULT_SIZE: usize = 128;

impl SynthSpec {
    pub fn new(families: &[ShapeFamily], count: usize, noise: f64, seed: u64) -> Self {
        Self {
            classes: families
                .iter()
                .map(|&family| ClassSpec { family, count })
                .collect(),
            noise,
            seed,
            size: DEFAULT_SIZE,
        }
    }

    /// Three topologically distinct classes of 30 samples each.
    pub fn standard() -> Self {
        Self::new(
            &[ShapeFamily::Star(3), ShapeFamily::Cross, ShapeFamily::Star(5)],
            30,
            STANDARD_NOISE,
            42,
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::BadSpec(m));
        if self.classes.len() < 2 {
            return bad(format!(
                "need at least 2 shape families, got {}",
                self.classes.len()
            ));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.count < 4 {
                return bad(format!("{}: need at least 4 samples, got {}", c.family, c.count));
            }
            if self.classes[..i].iter().any(|o| o.family == c.family) {
                return bad(format!("{} listed twice", c.family));
            }
        }
        if !(0.0..=0.2).contains(&self.noise) {
            return bad(format!("noise must be in [0, 0.2], got {}", self.noise));
        }
        if !(32..=4096).contains(&self.size) {
            return bad(format!("size must be in 32..=4096, got {}", self.size));
        }
        Ok(())
    }
}

/// Per-sample random draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleParams {
    pub rotation: f64,
    pub scale: f64,
    /// `(harmonic, amplitude, phase)` of the radial perturbation; the
    /// amplitudes sum to 1.
    pub harmonics: Vec<(f64, f64, f64)>,
}

impl SampleParams {
    pub fn draw(rng: &mut impl Rng) -> Self {
        let rotation = rng.random_range(0.0..TAU);
        let scale = rng.random_range(0.8..=1.2);
        let mut harmonics: Vec<(f64, f64, f64)> = (5..=13)
            .map(|h| (h as f64, rng.random::<f64>(), rng.random_range(0.0..TAU)))
            .collect();
        let total: f64 = harmonics.iter().map(|h| h.1).sum();
        for h in &mut harmonics {
            h.1 /= total;
        }
        Self {
            rotation,
            scale,
            harmonics,
        }
    }

    /// Unrotated, unscaled, noise-free.
    pub fn identity() -> Self {
        Self {
            rotation: 0.0,
            scale: 1.0,
            harmonics: Vec::new(),
        }
    }

    fn perturbation(&self, phi: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|&(h, a, ph)| a * (h * phi + ph).sin())
            .sum()
    }
}

/// Inside test in shape-local coordinates with outer radius 1.
fn inside(family: ShapeFamily, u: f64, v: f64) -> bool {
    match family {
        ShapeFamily::Star(k) => {
            let sector = TAU / k as f64;
            let mut a = v.atan2(u).rem_euclid(sector);
            if a > sector / 2.0 {
                a = sector - a;
            }
            let rho = u.hypot(v);
            let (pu, pv) = (rho * a.cos(), rho * a.sin());
            let inner = 1.05 / k as f64;
            let (vu, vv) = (inner * (sector / 2.0).cos(), inner * (sector / 2.0).sin());
            // same side of the tip-valley edge as the center
            let side = (vu - 1.0) * pv - vv * (pu - 1.0);
            side >= 0.0
        }
        ShapeFamily::Rosette(k) => {
            if u.hypot(v) <= 0.3 {
                return true;
            }
            (0..k).any(|i| {
                let t = TAU * i as f64 / k as f64;
                let (c, s) = (t.cos(), t.sin());
                let (ru, rv) = (u * c + v * s - 0.55, -u * s + v * c);
                (ru / 0.45).powi(2) + (rv / 0.2).powi(2) <= 1.0
            })
        }
        ShapeFamily::Cross => {
            let w = 0.06;
            (u.abs() <= 1.0 && v.abs() <= w) || (v.abs() <= 1.0 && u.abs() <= w)
        }
        ShapeFamily::Spokes(k) => {
            if (u / 0.5).powi(2) + (v / 0.32).powi(2) <= 1.0 {
                return true;
            }
            (0..k).any(|i| {
                let t = PI / 4.0 + TAU * i as f64 / k as f64;
                let (c, s) = (t.cos(), t.sin());
                let (ru, rv) = (u * c + v * s, -u * s + v * c);
                (0.0..=1.0).contains(&ru) && rv.abs() <= 0.05
            })
        }
    }
}

/// Rasterize one sample on a `size` x `size` canvas. Pixel-thin tips can
/// come loose from their arm; only the largest component is kept.
pub fn render(
    family: ShapeFamily,
    params: &SampleParams,
    noise: f64,
    size: usize,
) -> Result<BinaryRaster, HarnessError> {
    let mut out = BinaryRaster::new(size, size).map_err(|e| HarnessError::BadSpec(e.to_string()))?;
    let c = (size as f64 - 1.0) / 2.0;
    let radius = 0.36 * size as f64 * params.scale;
    let (cr, sr) = (params.rotation.cos(), params.rotation.sin());
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            let phi = dy.atan2(dx);
            let r = dx.hypot(dy) / (radius * (1.0 + noise * params.perturbation(phi)));
            let (ex, ey) = (r * phi.cos(), r * phi.sin());
            let (u, v) = (ex * cr + ey * sr, -ex * sr + ey * cr);
            if inside(family, u, v) {
                out.set(x, y, true);
            }
        }
    }
    largest_component(&out).map_err(|e| HarnessError::BadSpec(e.to_string()))
}

/// RNG for sample `index` of class `class_index`: one ChaCha stream each.
pub fn sample_rng(seed: u64, class_index: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((class_index as u64) << 32) | index as u64);
    rng
}

/// Write `<out>/<family>/<family>_<nnn>.pgm` for every sample and return
/// the ingested corpus.
pub fn synth_corpus(spec: &SynthSpec, out: &Path) -> Result<Corpus, HarnessError> {
    spec.validate()?;
    for (ci, class) in spec.classes.iter().enumerate() {
        let name = class.family.to_string();
        for i in 0..class.count {
            let params = SampleParams::draw(&mut sample_rng(spec.seed, ci, i));
            let mask = render(class.family, &params, spec.noise, spec.size)?;
            write_pgm(&mask, &out.join(&name).join(format!("{name}_{i:03}.pgm")))?;
        }
    }
    ingest(out)
}
