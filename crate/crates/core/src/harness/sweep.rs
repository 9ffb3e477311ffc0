use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::MatchingSettings;
use super::stereo::{assemble, evaluate_scene, load_inputs, prepare_scene, thread_pool, PreparedPair, SCHEMA_VERSION};
use super::{HarnessError, MatchingMode, RunConfig, StereoReport};
use crate::dataset::SceneBundle;
use crate::metrics::AccuracyCurve;

/// Values to try per axis. An empty axis keeps the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SweepGrid {
    pub ratio: Vec<f64>,
    pub threshold: Vec<f64>,
    pub max_iterations: Vec<u64>,
    pub matching: Vec<MatchingMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepPoint {
    pub ratio: f64,
    pub threshold: f64,
    pub max_iterations: u64,
    pub matching: MatchingMode,
}

impl SweepPoint {
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.matching
            .cmp(&other.matching)
            .then(self.ratio.total_cmp(&other.ratio))
            .then(self.threshold.total_cmp(&other.threshold))
            .then(self.max_iterations.cmp(&other.max_iterations))
    }

    pub fn apply(&self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        cfg.ratio = self.ratio;
        cfg.ransac.threshold = self.threshold;
        cfg.ransac.max_iterations = self.max_iterations;
        cfg.matching = self.matching;
        cfg
    }
}

impl SweepGrid {
    /// Every grid point in canonical order, duplicates removed.
    pub fn points(&self, base: &RunConfig) -> Vec<SweepPoint> {
        fn axis<T: Copy>(values: &[T], fallback: T) -> Vec<T> {
            if values.is_empty() {
                vec![fallback]
            } else {
                values.to_vec()
            }
        }
        let mut out = Vec::new();
        for &matching in &axis(&self.matching, base.matching) {
            for &ratio in &axis(&self.ratio, base.ratio) {
                for &threshold in &axis(&self.threshold, base.ransac.threshold) {
                    for &max_iterations in &axis(&self.max_iterations, base.ransac.max_iterations) {
                        out.push(SweepPoint { ratio, threshold, max_iterations, matching });
                    }
                }
            }
        }
        out.sort_by(SweepPoint::canonical_cmp);
        out.dedup_by(|a, b| a.canonical_cmp(b) == Ordering::Equal);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepEntry {
    pub rank: usize,
    pub point: SweepPoint,
    pub maa: f64,
    pub curve: AccuracyCurve,
    pub scene_maa: BTreeMap<String, f64>,
    /// Mean RANSAC plus pose-recovery seconds per pair and repeat.
    pub mean_estimation_seconds: f64,
    /// Set when the point could not be evaluated; its mAA is then 0.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
    /// Full report of the point, kept in memory only.
    #[serde(skip)]
    pub report: Option<StereoReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepReport {
    pub schema_version: u32,
    /// Ranked best first: higher mAA, then lower time, then canonical point order.
    pub entries: Vec<SweepEntry>,
    pub best: SweepPoint,
}

fn evaluate_all(
    cfg: &RunConfig,
    scenes: &[SceneBundle],
    prepared: &[Vec<PreparedPair>],
) -> Result<(StereoReport, f64), HarnessError> {
    let mut reports = Vec::with_capacity(scenes.len());
    let mut seconds = 0.0;
    for (scene, pairs) in scenes.iter().zip(prepared) {
        let (report, s) = evaluate_scene(cfg, scene, pairs)?;
        reports.push(report);
        seconds += s;
    }
    Ok((assemble(cfg, reports), seconds))
}

/// Runs the stereo evaluation at every grid point. Points that differ only in
/// RANSAC settings reuse tentative matches unless `caching` is off; reuse has
/// no effect on the numbers.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, caching: bool) -> Result<SweepReport, HarnessError> {
    let points = grid.points(base);
    for p in &points {
        p.apply(base).validate()?;
    }
    let scenes = load_inputs(base)?;
    let pool = thread_pool(base.jobs)?;
    let mut cache: Vec<(MatchingSettings, Vec<Vec<PreparedPair>>)> = Vec::new();
    let mut entries = Vec::with_capacity(points.len());

    for point in points {
        let cfg = point.apply(base);
        let settings = cfg.matching_settings();
        let cached = cache.iter().position(|(s, _)| caching && *s == settings);
        let outcome = (|| {
            let slot = match cached {
                Some(k) => k,
                None => {
                    let prepared = pool.install(|| scenes.iter().map(|s| prepare_scene(&cfg, s)).collect::<Result<Vec<_>, _>>())?;
                    cache.push((settings, prepared));
                    cache.len() - 1
                }
            };
            let result = pool.install(|| evaluate_all(&cfg, &scenes, &cache[slot].1));
            if !caching {
                cache.clear();
            }
            result
        })();
        entries.push(match outcome {
            Ok((report, seconds)) => {
                let runs = (report.pair_count() * cfg.repeats).max(1);
                SweepEntry {
                    rank: 0,
                    point,
                    maa: report.maa,
                    curve: report.curve.clone(),
                    scene_maa: report.scenes.iter().map(|s| (s.scene.clone(), s.maa)).collect(),
                    mean_estimation_seconds: seconds / runs as f64,
                    failure: None,
                    report: Some(report),
                }
            }
            Err(e) => SweepEntry {
                rank: 0,
                point,
                maa: 0.0,
                curve: AccuracyCurve::zero(),
                scene_maa: BTreeMap::new(),
                mean_estimation_seconds: 0.0,
                failure: Some(e.to_string()),
                report: None,
            },
        });
    }

    entries.sort_by(|x, y| {
        y.maa
            .total_cmp(&x.maa)
            .then(x.failure.is_some().cmp(&y.failure.is_some()))
            .then(x.mean_estimation_seconds.total_cmp(&y.mean_estimation_seconds))
            .then(x.point.canonical_cmp(&y.point))
    });
    for (k, e) in entries.iter_mut().enumerate() {
        e.rank = k + 1;
    }
    let best = entries[0].point;
    Ok(SweepReport { schema_version: SCHEMA_VERSION, entries, best })
}
