//! Evaluation metrics: angular pose errors, mean average accuracy (mAA),
//! multiview registration accuracy, trajectory error, co-visibility,
//! repeatability and matching score.

mod accuracy;
mod alignment;
mod covis;
mod multiview;
mod pose;
mod repeatability;

pub use accuracy::{maa, AccuracyCurve, MAA_THRESHOLDS, THRESHOLD_GUARD};
pub use alignment::{align_similarity, ate, TrajectoryAlignment};
pub use covis::{covisibility, directed_visibility, CoVisibility};
pub use multiview::{aggregate_bags, multiview_maa, BagEvaluation, MultiviewAggregate};
pub use pose::{pair_pose_error, rotation_error, translation_error, ErrorCombination, PairPoseError};
pub use repeatability::{matching_score, repeatability, FeatureView};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("pure rotation pair: ground-truth baseline is zero")]
    PureRotationPair,
    #[error("estimated translation is zero")]
    ZeroTranslation,
    #[error("no pairs")]
    NoPairs,
    #[error("bag of size {0} has no camera pairs")]
    BagTooSmall(usize),
    #[error("image {0} has no ground-truth pose")]
    UnknownImage(String),
    #[error("alignment underdetermined")]
    AlignmentUnderdetermined,
    #[error("ATE undefined: {0} registered cameras, at least 3 needed")]
    AteUndefined(usize),
    #[error("point counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
