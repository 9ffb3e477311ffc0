use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::ErrorCombination;
use crate::ransac::RansacConfig;

/// How the two directed nearest-neighbour lists of a pair are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingMode {
    /// Single direction, from the image with the lower id to the higher one.
    Uni,
    #[default]
    Both,
    Either,
}

/// Everything that defines a stereo run.
///
/// The RANSAC parameters are flattened so that config files and command-line
/// flags address them directly (`threshold`, `max-iterations`, `variant`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct RunConfig {
    /// Directory holding one subdirectory per scene.
    pub data_root: PathBuf,
    pub scenes: Vec<String>,
    /// Named scene sets, e.g. a validation and a test split.
    pub scene_sets: BTreeMap<String, Vec<String>>,
    /// Selects `scene_sets[split]` instead of `scenes`.
    pub split: Option<String>,
    /// Feature method name under `keypoints/` and `descriptors/`.
    pub method: String,
    /// Keep only the highest-scoring keypoints per image.
    pub num_features: Option<usize>,
    pub matching: MatchingMode,
    /// Ratio-test threshold; 1 disables the test.
    pub ratio: f64,
    /// Use FGINN instead of the plain ratio test.
    pub fginn: bool,
    pub min_geom_dist: f64,
    /// Drop matches whose descriptor distance exceeds this.
    pub max_distance: Option<f64>,
    /// Read pre-filtered matches from `<matches-dir>/<scene>/<a>__<b>.txt`
    /// instead of matching descriptors.
    pub matches_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub ransac: RansacConfig,
    pub error_combination: ErrorCombination,
    /// Co-visibility threshold `v` for pair enumeration.
    pub min_covis: f64,
    pub repeats: usize,
    /// Worker threads; 0 uses every core. Does not affect results.
    #[serde(skip_serializing)]
    pub jobs: usize,
    /// Where reports are written. Does not affect results.
    #[serde(skip_serializing)]
    pub output: PathBuf,
    /// Record per-stage wall times in the report. Off by default because
    /// timings make reports differ between otherwise identical runs.
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_root: PathBuf::from("."),
            scenes: Vec::new(),
            scene_sets: BTreeMap::new(),
            split: None,
            method: "default".into(),
            num_features: None,
            matching: MatchingMode::Both,
            ratio: 0.8,
            fginn: false,
            min_geom_dist: 10.0,
            max_distance: None,
            matches_dir: None,
            ransac: RansacConfig::default(),
            error_combination: ErrorCombination::Max,
            min_covis: 0.1,
            repeats: 1,
            jobs: 0,
            output: PathBuf::from("out"),
            timings: false,
        }
    }
}

impl RunConfig {
    /// Checks value ranges. Does not touch the file system.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(0.0..=1.0).contains(&self.ratio) {
            return bad(format!("ratio {} outside [0, 1]", self.ratio));
        }
        if !(0.0..=1.0).contains(&self.min_covis) {
            return bad(format!("min-covis {} outside [0, 1]", self.min_covis));
        }
        if !(self.min_geom_dist >= 0.0) {
            return bad(format!("min-geom-dist {} must be non-negative", self.min_geom_dist));
        }
        if self.num_features == Some(0) {
            return bad("num-features must be at least 1".into());
        }
        if let Some(d) = self.max_distance {
            if !(d >= 0.0) {
                return bad(format!("max-distance {d} must be non-negative"));
            }
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.method.is_empty() {
            return bad("method is empty".into());
        }
        self.ransac.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.resolved_scenes().map(|_| ())
    }

    /// Scene names selected by `split`, or `scenes` when no split is set.
    pub fn resolved_scenes(&self) -> Result<Vec<String>, HarnessError> {
        let scenes = match &self.split {
            Some(name) => self
                .scene_sets
                .get(name)
                .cloned()
                .ok_or_else(|| HarnessError::Config(format!("unknown split {name:?}")))?,
            None => self.scenes.clone(),
        };
        if scenes.is_empty() {
            return Err(HarnessError::Config("no scenes selected".into()));
        }
        Ok(scenes)
    }

    pub fn scene_dir(&self, scene: &str) -> PathBuf {
        self.data_root.join(scene)
    }

    /// Pre-filtered match file of pair `(a, b)`, if matches are ingested.
    pub fn match_file(&self, scene: &str, a: &str, b: &str) -> Option<PathBuf> {
        let dir = self.matches_dir.as_ref()?;
        Some(dir.join(scene).join(format!("{a}__{b}.txt")))
    }

    pub(crate) fn matching_settings(&self) -> MatchingSettings {
        MatchingSettings {
            method: self.method.clone(),
            num_features: self.num_features,
            matching: self.matching,
            ratio: self.ratio,
            fginn: self.fginn,
            min_geom_dist: self.min_geom_dist,
            max_distance: self.max_distance,
            matches_dir: self.matches_dir.clone(),
            min_covis: self.min_covis,
        }
    }
}

/// The part of a [`RunConfig`] that determines tentative matches. Two
/// configurations with equal settings share matching results.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MatchingSettings {
    method: String,
    num_features: Option<usize>,
    matching: MatchingMode,
    ratio: f64,
    fginn: bool,
    min_geom_dist: f64,
    max_distance: Option<f64>,
    matches_dir: Option<PathBuf>,
    min_covis: f64,
}
