//! Robust fundamental-matrix estimation.
//!
//! A locally optimized RANSAC over the 7-point solver with confidence-based
//! termination and an iteration cap, plus an optional DEGENSAC-style check
//! that detects plane-dominated samples and repairs them by plane-and-parallax.

mod bound;
mod degensac;
mod estimator;
mod pose;

pub use bound::{adaptive_iteration_bound, IterationBound};
pub use degensac::{homography_degeneracy_check, Degeneracy, DEGENSAC_TRIPLETS};
pub use estimator::{estimate_fundamental, EpipolarModel, Score};
pub use pose::{estimate_pose_from_matches, PoseEstimate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Residual};

/// Name of the pseudo-random generator behind every seeded sampler.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seeded with seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// LO-RANSAC without the degeneracy check.
    #[default]
    Plain,
    /// LO-RANSAC with homography-degeneracy detection and plane-and-parallax repair.
    Degensac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct RansacConfig {
    /// Confidence `tau` in (0, 1).
    pub confidence: f64,
    /// Inlier threshold `eta`, pixels.
    pub threshold: f64,
    /// Iteration cap `Gamma`.
    pub max_iterations: u64,
    pub seed: u64,
    pub variant: Variant,
    pub residual: Residual,
    pub lo_enabled: bool,
    /// Maximum local-optimization refits per new best model.
    pub lo_rounds: usize,
    /// Sample correspondences a homography must explain to flag a sample degenerate.
    pub degeneracy_min_plane: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            confidence: 0.999999,
            threshold: 1.0,
            max_iterations: 250_000,
            seed: 0,
            variant: Variant::Plain,
            residual: Residual::SymmetricEpipolar,
            lo_enabled: true,
            lo_rounds: 4,
            degeneracy_min_plane: 5,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(EstimationError::InvalidConfig(format!("confidence {} outside (0, 1)", self.confidence)));
        }
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(EstimationError::InvalidConfig(format!("threshold {} must be positive", self.threshold)));
        }
        if self.max_iterations == 0 {
            return Err(EstimationError::InvalidConfig("max-iterations must be at least 1".into()));
        }
        if !(3..=7).contains(&self.degeneracy_min_plane) {
            return Err(EstimationError::InvalidConfig(format!(
                "degeneracy-min-plane {} outside 3..=7",
                self.degeneracy_min_plane
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("insufficient correspondences ({0}, need at least 7)")]
    InsufficientCorrespondences(usize),
    #[error("estimation failed")]
    EstimationFailed,
    #[error("invalid RANSAC configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
