//! Pipeline configuration, loaded from a flat TOML key-value file.
//!
//! ```toml
//! dce_target_vertices = 12     # DCE stops at this many boundary vertices
//! # dce_min_relevance = 50.0   # optional: stop by relevance instead
//! prune_radius = 5.0           # branch tip to convex DCE vertex radius, pixels
//! threshold = 127              # gray level above which a pixel is foreground
//! eps_area = 1e-12             # degenerate-triangle area, squared pixels
//! eps_incircle = 1e-10         # "on the circle" band of the in-circle test
//! eps_dup = 1e-9               # duplicate-point merge radius
//! normalize_by_refs = false    # compare AC_j / n_j instead of raw AC_j
//! seed = 42                    # RNG seed for synthesis and splits
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::classifier::Scoring;
use crate::geometry::Tolerances;
use crate::skeleton::DceStop;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dce_target_vertices: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dce_min_relevance: Option<f64>,
    pub prune_radius: f64,
    pub threshold: u8,
    pub eps_area: f64,
    pub eps_incircle: f64,
    pub eps_dup: f64,
    pub normalize_by_refs: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let tol = Tolerances::default();
        Self {
            dce_target_vertices: 12,
            dce_min_relevance: None,
            prune_radius: 5.0,
            threshold: 127,
            eps_area: tol.area,
            eps_incircle: tol.incircle,
            eps_dup: tol.duplicate,
            normalize_by_refs: false,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.dce_target_vertices < 3 {
            return bad(format!(
                "dce_target_vertices must be >= 3, got {}",
                self.dce_target_vertices
            ));
        }
        if let Some(r) = self.dce_min_relevance {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("dce_min_relevance must be finite and >= 0, got {r}"));
            }
        }
        if !(self.prune_radius.is_finite() && self.prune_radius >= 0.0) {
            return bad(format!(
                "prune_radius must be finite and >= 0, got {}",
                self.prune_radius
            ));
        }
        for (name, v) in [
            ("eps_area", self.eps_area),
            ("eps_incircle", self.eps_incircle),
            ("eps_dup", self.eps_dup),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            area: self.eps_area,
            incircle: self.eps_incircle,
            duplicate: self.eps_dup,
        }
    }

    pub fn dce_stop(&self) -> DceStop {
        match self.dce_min_relevance {
            Some(r) => DceStop::Relevance(r),
            None => DceStop::VertexCount(self.dce_target_vertices),
        }
    }

    pub fn scoring(&self) -> Scoring {
        if self.normalize_by_refs {
            Scoring::PerReference
        } else {
            Scoring::Raw
        }
    }

    /// SHA-256 over every setting that changes extracted features; the
    /// seed and the scoring mode are excluded.
    pub fn fingerprint(&self) -> String {
        let key = serde_json::json!({
            "dce_target_vertices": self.dce_target_vertices,
            "dce_min_relevance": self.dce_min_relevance,
            "prune_radius": self.prune_radius,
            "threshold": self.threshold,
            "eps_area": self.eps_area,
            "eps_incircle": self.eps_incircle,
            "eps_dup": self.eps_dup,
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_files() {
        let cfg = PipelineConfig::from_toml("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        let cfg = PipelineConfig::from_toml("dce_target_vertices = 20\nnormalize_by_refs = true").unwrap();
        assert_eq!(cfg.dce_target_vertices, 20);
        assert_eq!(cfg.scoring(), Scoring::PerReference);
        assert_eq!(cfg.dce_stop(), DceStop::VertexCount(20));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("dce_target_vertices = 2").is_err());
        assert!(PipelineConfig::from_toml("eps_area = 0.0").is_err());
        assert!(PipelineConfig::from_toml("eps_dup = -1.0").is_err());
        assert!(PipelineConfig::from_toml("prune_radiuss = 3.0").is_err());
        assert!(PipelineConfig::from_toml("threshold = 300").is_err());
    }

    #[test]
    fn toml_roundtrip_and_fingerprint() {
        let mut cfg = PipelineConfig {
            dce_min_relevance: Some(10.0),
            ..Default::default()
        };
        let back = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let f = cfg.fingerprint();
        cfg.seed = 7;
        cfg.normalize_by_refs = true;
        assert_eq!(cfg.fingerprint(), f);
        cfg.prune_radius = 4.0;
        assert_ne!(cfg.fingerprint(), f);
        assert_eq!(f.len(), 64);
    }
}
