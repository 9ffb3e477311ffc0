use std::collections::BTreeMap;

use super::nn::check_compatible;
use super::{
    DescriptorSet, Direction, FilterStep, KeypointList, Match, MatchError, MatchList, SymmetrizeMode,
};

/// Ratio test `distance / second <= r`, with `0 / 0` treated as ratio 0.
#[inline]
pub fn passes_ratio(distance: f64, second: f64, r: f64) -> bool {
    if second == 0.0 {
        return distance == 0.0;
    }
    distance / second <= r
}

fn check_ratio(r: f64) -> Result<(), MatchError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(MatchError::InvalidRatio(r));
    }
    Ok(())
}

pub fn ratio_filter(m: &MatchList, r: f64) -> Result<MatchList, MatchError> {
    check_ratio(r)?;
    let mut kept = Vec::with_capacity(m.len());
    for e in &m.entries {
        let second = e.second_distance.ok_or(MatchError::MissingSecondDistance(e.index_i, e.index_j))?;
        if passes_ratio(e.distance, second, r) {
            kept.push(*e);
        }
    }
    Ok(m.with_step(kept, m.direction, FilterStep::Ratio(r)))
}

/// Ratio test against the best neighbour that lies at least `min_geom_dist`
/// pixels away from the nearest neighbour's keypoint.
///
/// `queries`/`targets` are the descriptor sets on the query and target side of
/// the list's direction; `target_kp` holds the target-side keypoints. A match
/// with no geometrically distant competitor is kept.
pub fn fginn_filter(
    m: &MatchList,
    queries: &DescriptorSet,
    targets: &DescriptorSet,
    target_kp: &KeypointList,
    r: f64,
    min_geom_dist: f64,
) -> Result<MatchList, MatchError> {
    check_ratio(r)?;
    check_compatible(queries, targets)?;
    if !m.direction.is_directed() {
        return Err(MatchError::DirectionMismatch);
    }
    if target_kp.len() != targets.count() {
        return Err(MatchError::CountMismatch { keypoints: target_kp.len(), descriptors: targets.count() });
    }
    let min_sq = min_geom_dist * min_geom_dist;
    let mut kept = Vec::with_capacity(m.len());
    for e in &m.entries {
        let (q, nn) = match m.direction {
            Direction::IToJ => (e.index_i, e.index_j),
            _ => (e.index_j, e.index_i),
        };
        if q >= queries.count() || nn >= targets.count() {
            return Err(MatchError::IndexOutOfRange(q.max(nn)));
        }
        let anchor = target_kp[nn].position();
        let mut denom: Option<f64> = None;
        for t in 0..targets.count() {
            if t == nn || (target_kp[t].position() - anchor).norm_squared() < min_sq {
                continue;
            }
            let d = queries.distance(q, targets, t);
            if denom.map_or(true, |best| d < best) {
                denom = Some(d);
            }
        }
        let keep = denom.map_or(true, |s| passes_ratio(e.distance, s, r));
        if keep {
            kept.push(Match { second_distance: denom, ..*e });
        }
    }
    Ok(m.with_step(kept, m.direction, FilterStep::Fginn { ratio: r, min_geom_dist }))
}

/// Combines the two directed lists of an image pair.
///
/// `Both` keeps pairs present in each direction; `Either` keeps their union.
/// A pair found in both lists keeps the smaller distance, preferring the
/// `i -> j` entry on ties. Output is sorted by `(index_i, index_j)`.
pub fn symmetrize(m_ij: &MatchList, m_ji: &MatchList, mode: SymmetrizeMode) -> Result<MatchList, MatchError> {
    let (fwd, bwd) = match (m_ij.direction, m_ji.direction) {
        (Direction::IToJ, Direction::JToI) => (m_ij, m_ji),
        (Direction::JToI, Direction::IToJ) => (m_ji, m_ij),
        _ => return Err(MatchError::DirectionMismatch),
    };
    let backward: BTreeMap<(usize, usize), Match> = bwd.entries.iter().map(|e| (e.pair(), *e)).collect();
    let pick = |a: Match, b: Match| if b.distance < a.distance { b } else { a };
    let (entries, direction) = match mode {
        SymmetrizeMode::Both => {
            let mut out: Vec<Match> = fwd
                .entries
                .iter()
                .filter_map(|e| backward.get(&e.pair()).map(|b| pick(*e, *b)))
                .collect();
            out.sort_by_key(Match::pair);
            out.dedup_by_key(|e| e.pair());
            (out, Direction::Both)
        }
        SymmetrizeMode::Either => {
            let mut merged: BTreeMap<(usize, usize), Match> = BTreeMap::new();
            for e in &fwd.entries {
                merged.entry(e.pair()).and_modify(|cur| *cur = pick(*cur, *e)).or_insert(*e);
            }
            for e in &bwd.entries {
                merged.entry(e.pair()).and_modify(|cur| *cur = pick(*cur, *e)).or_insert(*e);
            }
            (merged.into_values().collect(), Direction::Either)
        }
    };
    Ok(fwd.with_step(entries, direction, FilterStep::Symmetrize(mode)))
}

pub fn distance_filter(m: &MatchList, max_dist: f64) -> MatchList {
    let kept = m.entries.iter().filter(|e| e.distance <= max_dist).copied().collect();
    m.with_step(kept, m.direction, FilterStep::Distance(max_dist))
}

/// Keeps the `k` highest-scoring keypoints (ties to the lower index), in original order.
pub fn truncate_topk(
    kp: &KeypointList,
    d: &DescriptorSet,
    k: usize,
) -> Result<(KeypointList, DescriptorSet), MatchError> {
    if k == 0 {
        return Err(MatchError::InvalidBudget);
    }
    if kp.len() != d.count() {
        return Err(MatchError::CountMismatch { keypoints: kp.len(), descriptors: d.count() });
    }
    if kp.len() <= k {
        return Ok((kp.clone(), d.clone()));
    }
    let mut order: Vec<usize> = (0..kp.len()).collect();
    order.sort_by(|&a, &b| kp[b].score.total_cmp(&kp[a].score).then(a.cmp(&b)));
    let mut keep = order[..k].to_vec();
    keep.sort_unstable();
    let points = keep.iter().map(|&i| kp[i]).collect();
    Ok((KeypointList::new(points)?, d.select(&keep)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{nn_match, nn_match_reverse, Keypoint};

    fn entry(i: usize, j: usize, d: f64, s: f64) -> Match {
        Match { index_i: i, index_j: j, distance: d, second_distance: Some(s) }
    }

    fn list(entries: Vec<Match>, direction: Direction) -> MatchList {
        MatchList::new(entries, direction, Vec::new())
    }

    fn kps(xy: &[(f64, f64)], scores: &[f64]) -> KeypointList {
        KeypointList::new(
            xy.iter()
                .zip(scores)
                .map(|(&(x, y), &score)| Keypoint { x, y, scale: 1.0, orientation: 0.0, score })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ratio_examples() {
        let m = list(vec![entry(0, 0, 1.0, 2.0), entry(1, 1, 1.9, 2.0), entry(2, 2, 0.0, 0.0)], Direction::IToJ);
        let out = ratio_filter(&m, 0.8).unwrap();
        assert_eq!(out.pairs().collect::<Vec<_>>(), vec![(0, 0), (2, 2)]);
        assert_eq!(out.provenance, vec![FilterStep::Ratio(0.8)]);
        let all = ratio_filter(&m, 1.0).unwrap();
        assert_eq!(all.len(), 3);
        assert!(ratio_filter(&m, 1.5).is_err());
        let missing = list(vec![Match { second_distance: None, ..entry(0, 0, 1.0, 1.0) }], Direction::IToJ);
        assert!(ratio_filter(&missing, 0.8).is_err());
    }

    #[test]
    fn ratio_sweep_on_toy_table() {
        // Ratios 0.5, 0.7, 0.75, 0.9, 1.0 -> kept at r = 0.6, 0.8, 1.0: 1, 3, 5.
        let m = list(
            vec![
                entry(0, 0, 1.0, 2.0),
                entry(1, 1, 0.7, 1.0),
                entry(2, 2, 3.0, 4.0),
                entry(3, 3, 0.9, 1.0),
                entry(4, 4, 2.0, 2.0),
            ],
            Direction::IToJ,
        );
        let counts: Vec<_> = [0.6, 0.8, 1.0].iter().map(|&r| ratio_filter(&m, r).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 3, 5]);
    }

    #[test]
    fn symmetrize_hand_example() {
        let m_ij = list(vec![entry(0, 1, 1.0, 2.0), entry(1, 2, 1.0, 2.0)], Direction::IToJ);
        // j=1 -> i=0 and j=2 -> i=0
        let m_ji = list(vec![entry(0, 1, 1.0, 2.0), entry(0, 2, 1.5, 2.0)], Direction::JToI);
        let both = symmetrize(&m_ij, &m_ji, SymmetrizeMode::Both).unwrap();
        assert_eq!(both.pairs().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(both.direction, Direction::Both);
        let either = symmetrize(&m_ij, &m_ji, SymmetrizeMode::Either).unwrap();
        assert_eq!(either.pairs().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(symmetrize(&m_ij, &m_ij, SymmetrizeMode::Both).is_err());
    }

    #[test]
    fn symmetrize_with_empty_reverse() {
        let m_ij = list(vec![entry(0, 1, 1.0, 2.0), entry(1, 2, 1.0, 2.0)], Direction::IToJ);
        let m_ji = list(Vec::new(), Direction::JToI);
        assert!(symmetrize(&m_ij, &m_ji, SymmetrizeMode::Both).unwrap().is_empty());
        let either = symmetrize(&m_ij, &m_ji, SymmetrizeMode::Either).unwrap();
        assert_eq!(either.entries, m_ij.entries);
    }

    #[test]
    fn identical_sets_symmetrize_to_identity() {
        let d = DescriptorSet::float(4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0]).unwrap();
        let both = symmetrize(&nn_match(&d, &d).unwrap(), &nn_match_reverse(&d, &d).unwrap(), SymmetrizeMode::Both)
            .unwrap();
        assert_eq!(both.pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn fginn_skips_close_second_neighbour() {
        // Target 0 is the NN, target 1 is 2 px away from it, target 2 is 50 px away.
        let q = DescriptorSet::float(1, 1, vec![0.0]).unwrap();
        let t = DescriptorSet::float(3, 1, vec![1.0, 1.1, 4.0]).unwrap();
        let kp = kps(&[(0.0, 0.0), (2.0, 0.0), (50.0, 0.0)], &[1.0; 3]);
        let raw = nn_match(&q, &t).unwrap();
        // Standard ratio 1/1.1 fails at r = 0.8; against the third neighbour 1/4 passes.
        assert!(ratio_filter(&raw, 0.8).unwrap().is_empty());
        let out = fginn_filter(&raw, &q, &t, &kp, 0.8, 10.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.entries[0].second_distance, Some(4.0));
    }

    #[test]
    fn fginn_without_far_neighbour_keeps_match() {
        let q = DescriptorSet::float(1, 1, vec![0.0]).unwrap();
        let t = DescriptorSet::float(2, 1, vec![1.0, 1.05]).unwrap();
        let kp = kps(&[(0.0, 0.0), (3.0, 0.0)], &[1.0; 2]);
        let raw = nn_match(&q, &t).unwrap();
        let out = fginn_filter(&raw, &q, &t, &kp, 0.5, 10.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.entries[0].second_distance, None);

        // A single target has no competitor at all.
        let single = DescriptorSet::float(1, 1, vec![2.0]).unwrap();
        let m = list(vec![Match { index_i: 0, index_j: 0, distance: 2.0, second_distance: None }], Direction::IToJ);
        let out = fginn_filter(&m, &q, &single, &kps(&[(0.0, 0.0)], &[1.0]), 0.1, 10.0).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn fginn_with_spread_neighbours_equals_ratio() {
        let q = DescriptorSet::float(2, 1, vec![0.0, 3.0]).unwrap();
        let t = DescriptorSet::float(3, 1, vec![1.0, 2.5, 7.0]).unwrap();
        let kp = kps(&[(0.0, 0.0), (20.0, 0.0), (40.0, 0.0)], &[1.0; 3]);
        let raw = nn_match(&q, &t).unwrap();
        for r in [0.3, 0.6, 0.9] {
            let a = ratio_filter(&raw, r).unwrap();
            let b = fginn_filter(&raw, &q, &t, &kp, r, 10.0).unwrap();
            assert_eq!(a.entries, b.entries);
        }
    }

    #[test]
    fn distance_filter_examples() {
        let m = list(vec![entry(0, 0, 0.0, 1.0), entry(1, 1, 0.5, 1.0), entry(2, 2, 2.0, 3.0)], Direction::IToJ);
        assert_eq!(distance_filter(&m, f64::INFINITY).entries, m.entries);
        assert_eq!(distance_filter(&m, 0.0).pairs().collect::<Vec<_>>(), vec![(0, 0)]);
        let mut prev = 0;
        for t in [0.0, 0.25, 0.5, 1.0, 2.0, 5.0] {
            let n = distance_filter(&m, t).len();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn topk_keeps_best_scores_in_order() {
        let kp = kps(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], &[3.0, 1.0, 2.0]);
        let d = DescriptorSet::float(3, 1, vec![10.0, 11.0, 12.0]).unwrap();
        let (k2, d2) = truncate_topk(&kp, &d, 2).unwrap();
        assert_eq!(k2.iter().map(|k| k.x).collect::<Vec<_>>(), vec![0.0, 2.0]);
        assert_eq!(d2.float_data().unwrap(), &[10.0, 12.0]);
        let (k3, _) = truncate_topk(&kp, &d, 3).unwrap();
        assert_eq!(k3, kp);
        assert_eq!(truncate_topk(&kp, &d, 0), Err(MatchError::InvalidBudget));
        let tie = kps(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], &[1.0, 1.0, 1.0]);
        let (t1, _) = truncate_topk(&tie, &d, 1).unwrap();
        assert_eq!(t1[0].x, 0.0);
    }
}
