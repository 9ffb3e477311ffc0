//! Evaluation orchestration: per-pair stereo runs over scenes, hyperparameter
//! sweeps, budget calibration, multiview scoring of ingested reconstructions
//! and report emission.
//!
//! Pairs run on a bounded rayon pool. Every pair and repeat derives its RANSAC
//! seed from the run seed and the pair identity, so results do not depend on
//! scheduling or on the number of workers.

mod budget;
mod config;
mod multiview;
mod report;
mod stereo;
mod sweep;

pub use budget::{calibrate_budget, calibrate_from_config, suggest_budget, BudgetCalibration, CALIBRATION_ITERATIONS, MAX_BUDGET, MIN_BUDGET};
pub use config::{MatchingMode, RunConfig};
pub use multiview::{reconstruction_path, run_multiview_metrics, BagReport, MultiviewReport};
pub use report::{
    curves_csv, emit_multiview, emit_report, emit_sweep, stereo_csv, to_json, ReportFormat, CURVES_CSV, STEREO_CSV,
    STEREO_JSON,
};
pub use stereo::{
    load_inputs, pair_seed, run_stereo, scene_report, PairRecord, RepeatRecord, RunMetadata, SceneReport, StageTimes,
    StereoReport, SCHEMA_VERSION,
};
pub use sweep::{sweep, SweepEntry, SweepGrid, SweepPoint, SweepReport};

use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::DatasetError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing input files:\n{}", .0.iter().map(|p| format!("  {}", p.display())).collect::<Vec<_>>().join("\n"))]
    Missing(Vec<PathBuf>),
    #[error("scene {0}: no pairs")]
    NoPairs(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Problems with the configuration or the inputs, as opposed to failures
    /// while running.
    pub fn is_validation(&self) -> bool {
        match self {
            HarnessError::Config(_) | HarnessError::Missing(_) | HarnessError::NoPairs(_) => true,
            HarnessError::Dataset(e) => !matches!(e, DatasetError::Io { .. }),
            _ => false,
        }
    }
}
