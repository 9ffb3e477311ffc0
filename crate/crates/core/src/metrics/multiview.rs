use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ate, maa, pair_pose_error, AccuracyCurve, ErrorCombination, MetricsError, PairPoseError};
use crate::geometry::CameraPose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BagEvaluation {
    pub curve: AccuracyCurve,
    /// One entry per scored unordered pair, in bag order.
    pub pair_errors: Vec<PairPoseError>,
    pub registered: usize,
    /// Absent with fewer than three registered cameras.
    #[serde(with = "crate::serde_float::option")]
    pub ate: Option<f64>,
}

/// Scores a reconstruction of one bag: every unordered pair of bag images is
/// compared through its relative pose, and any pair with an unregistered
/// member scores an infinite error. Pairs whose ground-truth cameras coincide
/// have no translation direction and are left out.
pub fn multiview_maa(
    registered: &BTreeMap<String, CameraPose>,
    gt: &BTreeMap<String, CameraPose>,
    bag: &[String],
    combination: ErrorCombination,
) -> Result<BagEvaluation, MetricsError> {
    if bag.len() < 2 {
        return Err(MetricsError::BagTooSmall(bag.len()));
    }
    let gt_poses: Vec<&CameraPose> = bag
        .iter()
        .map(|id| gt.get(id).ok_or_else(|| MetricsError::UnknownImage(id.clone())))
        .collect::<Result<_, _>>()?;
    let est_poses: Vec<Option<&CameraPose>> = bag.iter().map(|id| registered.get(id)).collect();

    let mut pair_errors = Vec::with_capacity(bag.len() * (bag.len() - 1) / 2);
    for a in 0..bag.len() {
        for b in a + 1..bag.len() {
            let (r_gt, t_gt) = gt_poses[a].relative_to(gt_poses[b]);
            if t_gt.norm() < 1e-9 {
                continue;
            }
            let err = match (est_poses[a], est_poses[b]) {
                (Some(pa), Some(pb)) => {
                    let (r, t) = pa.relative_to(pb);
                    pair_pose_error(&r, &t, &r_gt, &t_gt, combination)?
                }
                _ => PairPoseError::failed(),
            };
            pair_errors.push(err);
        }
    }
    let curve = if pair_errors.is_empty() {
        AccuracyCurve::zero()
    } else {
        maa(&pair_errors.iter().map(|e| e.combined).collect::<Vec<_>>())?
    };

    let (est_c, gt_c): (Vec<_>, Vec<_>) = est_poses
        .iter()
        .zip(&gt_poses)
        .filter_map(|(e, g)| e.map(|e| (e.center(), g.center())))
        .unzip();
    let registered_count = est_c.len();
    Ok(BagEvaluation { curve, pair_errors, registered: registered_count, ate: ate(&est_c, &gt_c).ok() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MultiviewAggregate {
    /// Mean bag mAA for each bag size.
    pub per_size: BTreeMap<usize, f64>,
    /// Mean of `per_size`.
    pub maa: f64,
}

/// Averages bag scores within each bag size, then across sizes.
pub fn aggregate_bags(bags: &[(usize, f64)]) -> Result<MultiviewAggregate, MetricsError> {
    if bags.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let mut groups: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &(size, score) in bags {
        let g = groups.entry(size).or_default();
        g.0 += score;
        g.1 += 1;
    }
    let per_size: BTreeMap<usize, f64> = groups.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    let maa = per_size.values().sum::<f64>() / per_size.len() as f64;
    Ok(MultiviewAggregate { per_size, maa })
}
