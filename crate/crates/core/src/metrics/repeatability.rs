use std::collections::HashSet;

use crate::geometry::{depth_consistent, reproject_with_depth, CameraModel, DepthMap, OCCLUSION_TOLERANCE};
use crate::matching::{KeypointList, MatchList};

/// One image as seen by the keypoint metrics.
#[derive(Debug, Clone, Copy)]
pub struct FeatureView<'a> {
    pub camera: &'a CameraModel,
    pub keypoints: &'a KeypointList,
    pub depth: &'a DepthMap,
}

struct Directed {
    valid: usize,
    repeated: usize,
    matched: usize,
}

/// Transfers every source keypoint into the target view and counts the ones
/// that land near a target keypoint. `pairs` holds (source, target) matches.
fn directed(src: &FeatureView<'_>, dst: &FeatureView<'_>, threshold: f64, pairs: &HashSet<(usize, usize)>) -> Directed {
    let mut out = Directed { valid: 0, repeated: 0, matched: 0 };
    for (k, kp) in src.keypoints.iter().enumerate() {
        let Ok(r) = reproject_with_depth(&kp.position(), src.camera, src.depth, dst.camera) else { continue };
        if !depth_consistent(&r, dst.camera, dst.depth, OCCLUSION_TOLERANCE) {
            continue;
        }
        out.valid += 1;
        let nearest = dst
            .keypoints
            .iter()
            .enumerate()
            .map(|(m, q)| (m, (q.position() - r.pixel).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((m, d)) = nearest {
            if d <= threshold {
                out.repeated += 1;
                if pairs.contains(&(k, m)) {
                    out.matched += 1;
                }
            }
        }
    }
    out
}

fn symmetric(
    vi: &FeatureView<'_>,
    vj: &FeatureView<'_>,
    threshold: f64,
    matches: Option<&MatchList>,
    pick: fn(&Directed) -> usize,
) -> Option<f64> {
    let (ij, ji): (HashSet<_>, HashSet<_>) = match matches {
        Some(m) => (m.pairs().collect(), m.pairs().map(|(a, b)| (b, a)).collect()),
        None => (HashSet::new(), HashSet::new()),
    };
    let ratios: Vec<f64> = [directed(vi, vj, threshold, &ij), directed(vj, vi, threshold, &ji)]
        .iter()
        .filter(|d| d.valid > 0)
        .map(|d| pick(d) as f64 / d.valid as f64)
        .collect();
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

/// Fraction of depth-transferred keypoints with a target keypoint within
/// `threshold` pixels, averaged over both directions. Keypoints that land on
/// invalid or occluded depth are left out; `None` when nothing is left in
/// either direction.
pub fn repeatability(vi: &FeatureView<'_>, vj: &FeatureView<'_>, threshold: f64) -> Option<f64> {
    symmetric(vi, vj, threshold, None, |d| d.repeated)
}

/// Like [`repeatability`], but a keypoint only counts when its nearest target
/// keypoint is also its match in `matches`.
pub fn matching_score(vi: &FeatureView<'_>, vj: &FeatureView<'_>, matches: &MatchList, threshold: f64) -> Option<f64> {
    symmetric(vi, vj, threshold, Some(matches), |d| d.matched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{Direction, Keypoint, Match};
    use nalgebra::{Matrix3, Vector3};

    fn view_parts() -> (CameraModel, KeypointList, DepthMap) {
        let k = Matrix3::new(50.0, 0.0, 15.5, 0.0, 50.0, 11.5, 0.0, 0.0, 1.0);
        let cam = CameraModel::new(k, Matrix3::identity(), Vector3::zeros(), 32, 24).unwrap();
        let kps = (0..6)
            .map(|n| Keypoint {
                x: 3.0 + 4.0 * n as f64,
                y: 5.0 + 2.0 * n as f64,
                scale: 1.0,
                orientation: 0.0,
                score: 1.0,
            })
            .collect();
        (cam, KeypointList::new(kps).unwrap(), DepthMap::filled(32, 24, 3.0))
    }

    #[test]
    fn identical_views_repeat_fully() {
        let (cam, kps, depth) = view_parts();
        let v = FeatureView { camera: &cam, keypoints: &kps, depth: &depth };
        assert_eq!(repeatability(&v, &v, 3.0), Some(1.0));
        let half = MatchList::new(
            (0..3).map(|n| Match { index_i: n, index_j: n, distance: 0.0, second_distance: None }).collect(),
            Direction::Both,
            vec![],
        );
        let ms = matching_score(&v, &v, &half, 3.0).unwrap();
        assert_eq!(ms, 0.5);
        assert!(ms <= repeatability(&v, &v, 3.0).unwrap());
    }

    #[test]
    fn no_valid_depth_is_absent() {
        let (cam, kps, _) = view_parts();
        let empty = DepthMap::filled(32, 24, 0.0);
        let v = FeatureView { camera: &cam, keypoints: &kps, depth: &empty };
        assert_eq!(repeatability(&v, &v, 3.0), None);
    }
}
