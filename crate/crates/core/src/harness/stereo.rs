use std::fs;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HarnessError, MatchingMode, RunConfig};
use crate::dataset::{enumerate_pairs, load_scene, missing_scene_files, parse_matches, SceneBundle, DESCRIPTOR_VERSION};
use crate::geometry::Correspondence;
use crate::matching::{
    distance_filter, fginn_filter, nn_match, nn_match_reverse, ratio_filter, symmetrize, truncate_topk,
    DescriptorSet, KeypointList, MatchError, MatchList, SymmetrizeMode,
};
use crate::metrics::{maa, pair_pose_error, AccuracyCurve, PairPoseError};
use crate::ransac::{estimate_pose_from_matches, PRNG_NAME};

/// Version of the report layout; bumped on any field change.
pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock seconds spent in each stage of one pair evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub matching: f64,
    pub estimation: f64,
}

/// One estimation of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seed: u64,
    pub inliers: usize,
    pub inlier_ratio: f64,
    pub iterations: u64,
    pub error: PairPoseError,
    /// Why the pose error is infinite, when it is.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub times: Option<StageTimes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PairRecord {
    pub image_a: String,
    pub image_b: String,
    pub covis: f64,
    pub tentatives: usize,
    pub repeats: Vec<RepeatRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SceneReport {
    pub scene: String,
    pub pairs: Vec<PairRecord>,
    /// Mean of the per-repeat accuracy curves.
    pub curve: AccuracyCurve,
    pub repeat_maa: Vec<f64>,
    pub maa: f64,
    /// Mean inliers / tentatives over all pairs and repeats; failures count as 0.
    pub mean_inlier_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunMetadata {
    pub tool_version: String,
    pub prng: String,
    pub descriptor_format_version: u32,
    /// Direction of unidirectional matching.
    pub match_order: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct StereoReport {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub scenes: Vec<SceneReport>,
    /// Mean of the scene curves.
    pub curve: AccuracyCurve,
    pub maa: f64,
}

impl StereoReport {
    pub fn pair_count(&self) -> usize {
        self.scenes.iter().map(|s| s.pairs.len()).sum()
    }
}

/// Tentative correspondences of one pair, ready for estimation.
#[derive(Debug, Clone)]
pub(crate) struct PreparedPair {
    pub a: usize,
    pub b: usize,
    pub covis: f64,
    pub correspondences: Vec<Correspondence>,
    pub failure: Option<String>,
    pub seconds: f64,
}

/// Seed of one pair and repeat, independent of scheduling order.
pub fn pair_seed(run_seed: u64, scene: &str, a: &str, b: &str, repeat: usize) -> u64 {
    // FNV-1a over the fields, then the splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &x in bytes {
            h ^= u64::from(x);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(&run_seed.to_le_bytes());
    eat(scene.as_bytes());
    eat(a.as_bytes());
    eat(b.as_bytes());
    eat(&(repeat as u64).to_le_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))
}

/// Validates the configuration and every input, then loads the scenes.
/// Missing files of all scenes are reported together.
pub fn load_inputs(cfg: &RunConfig) -> Result<Vec<SceneBundle>, HarnessError> {
    cfg.validate()?;
    let names = cfg.resolved_scenes()?;
    let mut missing = Vec::new();
    for name in &names {
        let dir = cfg.scene_dir(name);
        if !dir.is_dir() {
            missing.push(dir);
        } else {
            missing.extend(missing_scene_files(&dir, &cfg.method));
        }
    }
    if !missing.is_empty() {
        return Err(HarnessError::Missing(missing));
    }
    let scenes: Vec<SceneBundle> =
        names.iter().map(|n| load_scene(&cfg.scene_dir(n), &cfg.method)).collect::<Result<_, _>>()?;
    for scene in &scenes {
        let pairs = enumerate_pairs(scene, cfg.min_covis);
        if pairs.is_empty() {
            return Err(HarnessError::NoPairs(scene.name.clone()));
        }
        for p in &pairs {
            if let Some(path) = cfg.match_file(&scene.name, &scene.images[p.a].id, &scene.images[p.b].id) {
                if !path.is_file() {
                    missing.push(path);
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(HarnessError::Missing(missing));
    }
    Ok(scenes)
}

fn to_correspondences(m: &MatchList, kp_a: &KeypointList, kp_b: &KeypointList) -> Result<Vec<Correspondence>, String> {
    m.entries
        .iter()
        .map(|e| match (kp_a.get(e.index_i), kp_b.get(e.index_j)) {
            (Some(p), Some(q)) => Ok(Correspondence::new(p.position(), q.position())),
            _ => Err(format!("match ({}, {}) refers to a missing keypoint", e.index_i, e.index_j)),
        })
        .collect()
}

type Features<'a> = (&'a KeypointList, &'a DescriptorSet);

/// Nearest neighbours, ratio or FGINN test per direction, symmetrization and
/// the optional distance filter.
fn match_features(cfg: &RunConfig, a: Features<'_>, b: Features<'_>) -> Result<MatchList, MatchError> {
    let test = |m: MatchList, queries: &DescriptorSet, targets: &DescriptorSet, target_kp: &KeypointList| {
        if cfg.fginn {
            fginn_filter(&m, queries, targets, target_kp, cfg.ratio, cfg.min_geom_dist)
        } else {
            ratio_filter(&m, cfg.ratio)
        }
    };
    let forward = test(nn_match(a.1, b.1)?, a.1, b.1, b.0)?;
    let list = match cfg.matching {
        MatchingMode::Uni => forward,
        mode => {
            let backward = test(nn_match_reverse(a.1, b.1)?, b.1, a.1, a.0)?;
            let mode = if mode == MatchingMode::Both { SymmetrizeMode::Both } else { SymmetrizeMode::Either };
            symmetrize(&forward, &backward, mode)?
        }
    };
    Ok(match cfg.max_distance {
        Some(d) => distance_filter(&list, d),
        None => list,
    })
}

/// Tentative matches of every enumerated pair of a scene. Per-pair problems
/// are recorded on the pair, never raised.
pub(crate) fn prepare_scene(cfg: &RunConfig, scene: &SceneBundle) -> Result<Vec<PreparedPair>, HarnessError> {
    let pairs = enumerate_pairs(scene, cfg.min_covis);
    if pairs.is_empty() {
        return Err(HarnessError::NoPairs(scene.name.clone()));
    }
    let truncated: Vec<Option<(KeypointList, DescriptorSet)>> = match cfg.num_features {
        Some(k) if cfg.matches_dir.is_none() => scene
            .images
            .par_iter()
            .map(|im| truncate_topk(&im.keypoints, &im.descriptors, k).map(Some))
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?,
        _ => vec![None; scene.images.len()],
    };
    let features = |k: usize| -> Features<'_> {
        match &truncated[k] {
            Some((kp, d)) => (kp, d),
            None => (&scene.images[k].keypoints, &scene.images[k].descriptors),
        }
    };
    Ok(pairs
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let (fa, fb) = (features(p.a), features(p.b));
            let (id_a, id_b) = (&scene.images[p.a].id, &scene.images[p.b].id);
            let list = match cfg.match_file(&scene.name, id_a, id_b) {
                Some(path) => fs::read(&path)
                    .map_err(|e| format!("{}: {e}", path.display()))
                    .and_then(|bytes| parse_matches(&bytes).map_err(|e| format!("{}: {e}", path.display()))),
                None => match_features(cfg, fa, fb).map_err(|e| e.to_string()),
            };
            let corrs = list.and_then(|m| to_correspondences(&m, fa.0, fb.0));
            let (correspondences, failure) = match corrs {
                Ok(c) => (c, None),
                Err(e) => (Vec::new(), Some(e)),
            };
            PreparedPair {
                a: p.a,
                b: p.b,
                covis: p.covis.value(),
                correspondences,
                failure,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect())
}

fn evaluate_pair(cfg: &RunConfig, scene: &SceneBundle, p: &PreparedPair) -> (PairRecord, f64) {
    let (im_a, im_b) = (&scene.images[p.a], &scene.images[p.b]);
    let (r_gt, t_gt) = im_a.camera.pose().relative_to(&im_b.camera.pose());
    let tentatives = p.correspondences.len();
    let mut spent = 0.0;
    let repeats = (0..cfg.repeats)
        .map(|repeat| {
            let seed = pair_seed(cfg.ransac.seed, &scene.name, &im_a.id, &im_b.id, repeat);
            let ransac = crate::ransac::RansacConfig { seed, ..cfg.ransac.clone() };
            let start = Instant::now();
            let outcome = match &p.failure {
                Some(f) => Err(f.clone()),
                None => estimate_pose_from_matches(&p.correspondences, &im_a.camera, &im_b.camera, &ransac)
                    .map_err(|e| e.to_string()),
            };
            let estimation = start.elapsed().as_secs_f64();
            spent += estimation;
            let mut record = RepeatRecord {
                repeat,
                seed,
                inliers: 0,
                inlier_ratio: 0.0,
                iterations: 0,
                error: PairPoseError::failed(),
                failure: None,
                times: cfg.timings.then_some(StageTimes { matching: p.seconds, estimation }),
            };
            match outcome {
                Ok(est) => {
                    record.inliers = est.model.inlier_count;
                    record.inlier_ratio = est.model.inlier_count as f64 / tentatives as f64;
                    record.iterations = est.model.iterations;
                    match pair_pose_error(&est.pose.rotation, &est.pose.translation, &r_gt, &t_gt, cfg.error_combination)
                    {
                        Ok(e) => record.error = e,
                        Err(e) => record.failure = Some(e.to_string()),
                    }
                }
                Err(e) => record.failure = Some(e),
            }
            record
        })
        .collect();
    let record =
        PairRecord { image_a: im_a.id.clone(), image_b: im_b.id.clone(), covis: p.covis, tentatives, repeats };
    (record, spent)
}

/// Scores every prepared pair; also returns the total estimation seconds.
pub(crate) fn evaluate_scene(
    cfg: &RunConfig,
    scene: &SceneBundle,
    prepared: &[PreparedPair],
) -> Result<(SceneReport, f64), HarnessError> {
    let evaluated: Vec<(PairRecord, f64)> = prepared.par_iter().map(|p| evaluate_pair(cfg, scene, p)).collect();
    let seconds = evaluated.iter().map(|(_, s)| s).sum();
    let pairs: Vec<PairRecord> = evaluated.into_iter().map(|(r, _)| r).collect();
    Ok((scene_report(&scene.name, pairs, cfg.repeats)?, seconds))
}

/// Aggregates pair records; exposed so reports can be re-derived from rows.
pub fn scene_report(scene: &str, pairs: Vec<PairRecord>, repeats: usize) -> Result<SceneReport, HarnessError> {
    let curves: Vec<AccuracyCurve> = (0..repeats)
        .map(|r| maa(&pairs.iter().map(|p| p.repeats[r].error.combined).collect::<Vec<_>>()))
        .collect::<Result<_, _>>()
        .map_err(|_| HarnessError::NoPairs(scene.to_string()))?;
    let curve = AccuracyCurve::mean(&curves).ok_or_else(|| HarnessError::NoPairs(scene.to_string()))?;
    let ratios: Vec<f64> = pairs.iter().flat_map(|p| p.repeats.iter().map(|r| r.inlier_ratio)).collect();
    let mean_inlier_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(SceneReport {
        scene: scene.to_string(),
        pairs,
        repeat_maa: curves.iter().map(|c| c.maa).collect(),
        maa: curve.maa,
        curve,
        mean_inlier_ratio,
    })
}

pub(crate) fn assemble(cfg: &RunConfig, scenes: Vec<SceneReport>) -> StereoReport {
    let curves: Vec<AccuracyCurve> = scenes.iter().map(|s| s.curve.clone()).collect();
    let curve = AccuracyCurve::mean(&curves).unwrap_or_else(AccuracyCurve::zero);
    StereoReport {
        schema_version: SCHEMA_VERSION,
        metadata: RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            prng: PRNG_NAME.to_string(),
            descriptor_format_version: DESCRIPTOR_VERSION,
            match_order: "lower image id to higher image id".to_string(),
            config: cfg.clone(),
        },
        scenes,
        maa: curve.maa,
        curve,
    }
}

/// Evaluates every co-visible pair of every selected scene.
pub fn run_stereo(cfg: &RunConfig) -> Result<StereoReport, HarnessError> {
    let scenes = load_inputs(cfg)?;
    let pool = thread_pool(cfg.jobs)?;
    pool.install(|| {
        let mut reports = Vec::with_capacity(scenes.len());
        for scene in &scenes {
            let prepared = prepare_scene(cfg, scene)?;
            reports.push(evaluate_scene(cfg, scene, &prepared)?.0);
        }
        Ok(assemble(cfg, reports))
    })
}
