//! Tentative matching: brute-force nearest neighbours, ratio tests, symmetrization
//! and distance filtering over precomputed descriptors.

mod descriptors;
mod filters;
mod keypoints;
mod list;
mod nn;

pub use descriptors::{DescriptorKind, DescriptorSet};
pub use filters::{distance_filter, fginn_filter, passes_ratio, ratio_filter, symmetrize, truncate_topk};
pub use keypoints::{Keypoint, KeypointList};
pub use list::{Direction, FilterStep, Match, MatchList, SymmetrizeMode};
pub use nn::{nn_match, nn_match_reverse};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("descriptor dimensions differ ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("descriptor metrics differ")]
    MetricMismatch,
    #[error("target set holds {0} descriptors; at least 2 are needed")]
    TooFewTargets(usize),
    #[error("match ({0}, {1}) has no second-neighbour distance")]
    MissingSecondDistance(usize, usize),
    #[error("ratio {0} outside [0, 1]")]
    InvalidRatio(f64),
    #[error("match lists are not opposite directed lists")]
    DirectionMismatch,
    #[error("feature budget must be at least 1")]
    InvalidBudget,
    #[error("{keypoints} keypoints but {descriptors} descriptors")]
    CountMismatch { keypoints: usize, descriptors: usize },
    #[error("invalid descriptors: {0}")]
    InvalidDescriptors(String),
    #[error("invalid keypoint {index}: {reason}")]
    InvalidKeypoint { index: usize, reason: String },
    #[error("match index {0} out of range")]
    IndexOutOfRange(usize),
}
