//! Two-view matching and robust epipolar estimation, pose-accuracy metrics,
//! scene file formats, a synthetic ground-truth generator and the evaluation
//! harness that ties them together.

pub mod dataset;
pub mod geometry;
pub mod harness;
pub mod matching;
pub mod metrics;
pub mod ransac;
pub mod synthetic;

mod serde_float;

pub use dataset::{BagSpec, SceneBundle};
pub use geometry::{CameraModel, CameraPose, Correspondence, DepthMap, EssentialMatrix, FundamentalMatrix, RelativePose};
pub use harness::{RunConfig, StereoReport};
pub use matching::{DescriptorSet, KeypointList, MatchList};
pub use metrics::{AccuracyCurve, CoVisibility, PairPoseError, TrajectoryAlignment};
pub use ransac::{EpipolarModel, RansacConfig};
pub use synthetic::SynthSpec;
