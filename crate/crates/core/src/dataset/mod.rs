//! On-disk formats, scene loading and validation, pair enumeration and bag
//! sampling.
//!
//! Scene layout:
//!
//! ```text
//! <root>/<scene>/
//!     calib/<image>.txt
//!     keypoints/<method>/<image>.txt
//!     descriptors/<method>/<image>.desc
//!     depth/<image>.dpth            (optional)
//!     observations.txt
//!     pairs.txt                     (optional cache of co-visibilities)
//! ```

mod bags;
mod formats;
mod scene;

pub use bags::{format_bags, parse_bags, sample_bags, Bag, BagSpec, MAX_BAG_ATTEMPTS};
pub use formats::{
    format_calibration, format_depth, format_descriptors, format_keypoints, format_matches, format_observations,
    format_pairs, format_reconstruction, parse_calibration, parse_depth, parse_descriptors, parse_keypoints,
    parse_matches, parse_observations, parse_pairs, parse_reconstruction, Location, Observation, ParseError,
    Reconstruction, DESCRIPTOR_VERSION,
};
pub use scene::{
    compute_pairs, enumerate_pairs, load_cameras, load_scene, missing_scene_files, save_scene, ImageData, PairEntry, SceneBundle,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {error}", file.display())]
    Format { file: PathBuf, error: ParseError },
    #[error("missing input files:\n{}", list_paths(.0))]
    Missing(Vec<PathBuf>),
    #[error("{message} ({})", list_inline(files))]
    Invariant { files: Vec<PathBuf>, message: String },
    #[error("bag size {size} exceeds the {images} images of the scene")]
    BagTooLarge { size: usize, images: usize },
    #[error("no acceptable bag of size {size} found in {attempts} attempts")]
    BagSampling { size: usize, attempts: usize },
    #[error("invalid bag spec: {0}")]
    InvalidBagSpec(String),
}

fn list_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| format!("  {}", p.display())).collect::<Vec<_>>().join("\n")
}

fn list_inline(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io { path: path.into(), source }
    }

    pub(crate) fn format(file: impl Into<PathBuf>, error: ParseError) -> Self {
        DatasetError::Format { file: file.into(), error }
    }
}
