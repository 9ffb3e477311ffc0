//! Synthetic ground truth: multi-camera scenes with analytic geometry and
//! controllable noise, outliers and planar dominance, plus a lightweight
//! two-view correspondence generator.

mod pair;
mod scene;

pub use pair::{synthetic_pair, PairSpec, SyntheticPair};
pub use scene::{generate_scene, look_at, true_pair_geometry, PairGeometry, SynthSpec};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("no point is visible from any camera")]
    NoVisiblePoints,
    #[error("pure rotation pair: the cameras share a centre")]
    PureRotationPair,
    #[error("could only place {placed} of {wanted} points visible in both views")]
    PlacementFailed { placed: usize, wanted: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
