use nalgebra::Matrix3;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::estimator::{Candidate, Scorer};
use super::adaptive_iteration_bound;
use crate::geometry::{
    homogeneous, homography_dlt, plane_induced_homography, residual, skew, transfer_error, Correspondence,
    FundamentalMatrix, Homography,
};

/// Triplets of a 7-correspondence sample used to hypothesize planes. Every
/// 5-subset of the sample contains at least one of them, so a plane through
/// five or more sample points is always found.
pub const DEGENSAC_TRIPLETS: [[usize; 3]; 5] = [[0, 1, 2], [3, 4, 5], [0, 1, 6], [3, 4, 6], [2, 5, 6]];

const MAX_PARALLAX_TRIALS: u64 = 500;
const EPIPOLE_REFITS: usize = 5;
const PLANE_REFITS: usize = 5;
/// Transfer error, in units of the inlier threshold, up to which a
/// correspondence belongs to the plane. Transfer error is a 2D distance with
/// noise from both images, so it needs more room than the epipolar residual.
const PLANE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Degeneracy {
    Ok,
    /// `plane` lists the sample positions explained by `homography`.
    Degenerate { homography: Homography, plane: Vec<usize> },
}

impl Degeneracy {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Degeneracy::Degenerate { .. })
    }
}

/// Flags a 7-point sample whose correspondences are mostly explained by one
/// plane-induced homography compatible with `f`.
pub fn homography_degeneracy_check(
    sample: &[Correspondence],
    f: &FundamentalMatrix,
    threshold: f64,
    min_plane: usize,
) -> Degeneracy {
    if sample.len() != 7 {
        return Degeneracy::Ok;
    }
    let mut best: Option<(Homography, Vec<usize>)> = None;
    for t in DEGENSAC_TRIPLETS {
        let Ok(h) = plane_induced_homography(f, [&sample[t[0]], &sample[t[1]], &sample[t[2]]]) else {
            continue;
        };
        let plane: Vec<usize> = (0..7).filter(|&k| transfer_error(&h, &sample[k]) <= threshold).collect();
        if plane.len() >= min_plane && best.as_ref().map_or(true, |(_, p)| plane.len() > p.len()) {
            best = Some((h, plane));
        }
    }
    match best {
        Some((homography, plane)) => Degeneracy::Degenerate { homography, plane },
        None => Degeneracy::Ok,
    }
}

/// Completes a plane homography to a fundamental matrix: keeps the
/// homography-consistent correspondences as the plane and searches pairs of
/// off-plane correspondences for the epipole, `F = [e']x H`.
pub(super) fn plane_and_parallax(scorer: &Scorer<'_>, h: &Homography, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    let corrs = scorer.corrs;
    let eta = scorer.cfg.threshold;
    let plane_tol = PLANE_FACTOR * eta;
    let members = |h: &Homography| -> Vec<usize> {
        (0..corrs.len()).filter(|&k| transfer_error(h, &corrs[k]) <= plane_tol).collect()
    };
    // The homography of a noisy minimal sample is rough; refit it on its
    // members for as long as the plane keeps growing.
    let mut h = *h;
    let mut on_plane = members(&h);
    for _ in 0..PLANE_REFITS {
        if on_plane.len() < 4 {
            break;
        }
        let pts: Vec<Correspondence> = on_plane.iter().map(|&k| corrs[k]).collect();
        let Ok(refit) = homography_dlt(&pts) else { break };
        let next = members(&refit);
        if next.len() < on_plane.len() {
            break;
        }
        let grew = next.len() > on_plane.len();
        h = refit;
        on_plane = next;
        if !grew {
            break;
        }
    }
    // Only correspondences with clear parallax carry the epipole; near the
    // plane the line through x_j and H x_i has a noise-driven direction.
    let parallax: Vec<f64> = corrs.iter().map(|c| transfer_error(&h, c)).collect();
    let off: Vec<usize> = (0..corrs.len()).filter(|&k| parallax[k] > plane_tol).collect();
    if off.len() < 2 {
        return None;
    }

    // Epipolar line of an off-plane correspondence: through x_j and H x_i.
    let parallax_line = |c: &Correspondence| (h.0 * homogeneous(&c.xi)).cross(&homogeneous(&c.xj));
    let mut best: Option<Candidate> = None;
    let mut limit = MAX_PARALLAX_TRIALS;
    let mut trial = 0;
    while trial < limit {
        trial += 1;
        let pick = index::sample(rng, off.len(), 2);
        let (a, b) = (&corrs[off[pick.index(0)]], &corrs[off[pick.index(1)]]);
        let e = parallax_line(a).cross(&parallax_line(b));
        if !(e.norm() > 0.0) {
            continue;
        }
        let Ok(f) = FundamentalMatrix::from_rank_two(&(skew(&e.normalize()) * h.0)) else { continue };
        let cand = scorer.candidate(f);
        if best.map_or(true, |b| cand.score.better_than(&b.score)) {
            let off_support = (cand.score.inliers.saturating_sub(on_plane.len()) as f64 / off.len() as f64).min(1.0);
            limit = adaptive_iteration_bound(off_support, 2, scorer.cfg.confidence).capped(MAX_PARALLAX_TRIALS);
            best = Some(cand);
        }
    }

    // Two noisy parallax lines pin the epipole down poorly; re-estimate it
    // from every off-plane correspondence the current model explains.
    let mut best = best?;
    for _ in 0..EPIPOLE_REFITS {
        let mut scatter = Matrix3::zeros();
        let mut used = 0;
        for &k in &off {
            let c = &corrs[k];
            if residual(scorer.cfg.residual, &best.f, &c.xi, &c.xj) > eta {
                continue;
            }
            // Unit-normal line, weighted by squared parallax: the direction
            // error of the line shrinks with the parallax.
            let l = parallax_line(c);
            let n = l.x.hypot(l.y);
            if n > 0.0 {
                scatter += (l / n) * (l / n).transpose() * (parallax[k] * parallax[k]);
                used += 1;
            }
        }
        if used < 3 {
            break;
        }
        let eig = scatter.symmetric_eigen();
        let e = eig.eigenvectors.column(eig.eigenvalues.imin()).into_owned();
        let Ok(f) = FundamentalMatrix::from_rank_two(&(skew(&e) * h.0)) else { break };
        let cand = scorer.candidate(f);
        if !cand.score.better_than(&best.score) {
            break;
        }
        best = cand;
    }
    Some(best)
}
