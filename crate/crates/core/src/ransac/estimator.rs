use std::cmp::Ordering;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::degensac::{homography_degeneracy_check, plane_and_parallax, Degeneracy};
use super::{adaptive_iteration_bound, EstimationError, RansacConfig, Variant};
use crate::geometry::{
    eight_point, eight_point_weighted, homogeneous, residual, seven_point, Correspondence, FundamentalMatrix,
    Residual,
};

const SAMPLE_SIZE: usize = 7;
const MIN_INLIERS: usize = 8;

/// Inlier count, ties broken by the lower sum of residuals truncated at the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub inliers: usize,
    pub truncated_sum: f64,
}

impl Score {
    const WORST: Score = Score { inliers: 0, truncated_sum: f64::INFINITY };

    pub fn cmp_quality(&self, other: &Score) -> Ordering {
        self.inliers
            .cmp(&other.inliers)
            .then_with(|| other.truncated_sum.total_cmp(&self.truncated_sum))
    }

    pub fn better_than(&self, other: &Score) -> bool {
        self.cmp_quality(other) == Ordering::Greater
    }
}

/// Result of a robust fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EpipolarModel {
    pub f: FundamentalMatrix,
    /// One flag per input correspondence.
    pub inlier_mask: Vec<bool>,
    pub inlier_count: usize,
    pub score: Score,
    pub iterations: u64,
    pub degenerate_rejections: u64,
    /// Score of the best model found from a raw minimal sample, before LO or repair.
    pub minimal_sample_score: Score,
    /// Plane-dominated samples replaced by a plane-and-parallax model.
    pub degeneracy_repairs: u64,
}

impl EpipolarModel {
    pub fn inliers(&self) -> impl Iterator<Item = usize> + '_ {
        self.inlier_mask.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| k)
    }
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Candidate {
    pub f: FundamentalMatrix,
    pub score: Score,
}

pub(super) struct Scorer<'a> {
    pub corrs: &'a [Correspondence],
    pub cfg: &'a RansacConfig,
    /// Coordinates split per axis so the prefilter vectorizes.
    x: Vec<f64>,
    y: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Scorer<'a> {
    pub fn new(corrs: &'a [Correspondence], cfg: &'a RansacConfig) -> Self {
        Self {
            corrs,
            cfg,
            x: corrs.iter().map(|c| c.xi.x).collect(),
            y: corrs.iter().map(|c| c.xi.y).collect(),
            u: corrs.iter().map(|c| c.xj.x).collect(),
            v: corrs.iter().map(|c| c.xj.y).collect(),
        }
    }

    pub fn score(&self, f: &FundamentalMatrix) -> Score {
        let eta = self.cfg.threshold;
        // Division-free prefilter with a little slack; the exact residual
        // decides every correspondence that passes it.
        let gate = eta * eta * (1.0 + 1e-6);
        let m = f.matrix();
        let (f00, f01, f02, f10, f11, f12, f20, f21, f22) =
            (m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]);
        let symmetric = self.cfg.residual == Residual::SymmetricEpipolar;
        let mut inliers = 0;
        let mut truncated_sum = 0.0;
        let mut flags = [false; 64];
        for (start, chunk) in (0..self.corrs.len()).step_by(64).zip(self.corrs.chunks(64)) {
            let end = start + chunk.len();
            let (xs, ys, us, vs) = (&self.x[start..end], &self.y[start..end], &self.u[start..end], &self.v[start..end]);
            // Branch-free first pass so the arithmetic vectorizes.
            let coords = xs.iter().zip(ys).zip(us.iter().zip(vs));
            let terms = coords.map(|((&x, &y), (&u, &v))| {
                let lx = f00 * x + f01 * y + f02;
                let ly = f10 * x + f11 * y + f12;
                let lz = f20 * x + f21 * y + f22;
                let r = u * lx + v * ly + lz;
                let gx = f00 * u + f10 * v + f20;
                let gy = f01 * u + f11 * v + f21;
                (r * r, lx * lx + ly * ly, gx * gx + gy * gy)
            });
            if symmetric {
                for (flag, (r2, a, b)) in flags.iter_mut().zip(terms) {
                    *flag = 0.5 * r2 * (a + b) <= gate * a * b;
                }
            } else {
                for (flag, (r2, a, b)) in flags.iter_mut().zip(terms) {
                    *flag = r2 <= gate * (a + b);
                }
            }
            for (&flag, c) in flags.iter().zip(chunk) {
                if flag {
                    let d = residual(self.cfg.residual, f, &c.xi, &c.xj);
                    if d <= eta {
                        inliers += 1;
                        truncated_sum += d;
                        continue;
                    }
                }
                truncated_sum += eta;
            }
        }
        Score { inliers, truncated_sum }
    }

    pub fn inlier_indices(&self, f: &FundamentalMatrix) -> Vec<usize> {
        let eta = self.cfg.threshold;
        (0..self.corrs.len())
            .filter(|&k| {
                let c = &self.corrs[k];
                residual(self.cfg.residual, f, &c.xi, &c.xj) <= eta
            })
            .collect()
    }

    pub fn candidate(&self, f: FundamentalMatrix) -> Candidate {
        Candidate { score: self.score(&f), f }
    }

    /// Iterated least-squares refit on the current inliers, with each equation
    /// weighted by the inverse norm of its epipolar gradient (Sampson weighting).
    fn local_optimize(&self, start: Candidate) -> Candidate {
        let mut current = start;
        let mut inliers = self.inlier_indices(&current.f);
        for _ in 0..self.cfg.lo_rounds {
            if inliers.len() < MIN_INLIERS {
                break;
            }
            let subset: Vec<Correspondence> = inliers.iter().map(|&k| self.corrs[k]).collect();
            let weights: Vec<f64> = subset.iter().map(|c| sampson_weight(&current.f, c)).collect();
            let Ok(f) = eight_point_weighted(&subset, Some(&weights)) else { break };
            let next = self.candidate(f);
            if !next.score.better_than(&current.score) {
                break;
            }
            let next_inliers = self.inlier_indices(&next.f);
            current = next;
            if next_inliers == inliers {
                break;
            }
            inliers = next_inliers;
        }
        current
    }
}

fn sampson_weight(f: &FundamentalMatrix, c: &Correspondence) -> f64 {
    let m = f.matrix();
    let lj = m * homogeneous(&c.xi);
    let li = m.transpose() * homogeneous(&c.xj);
    let g = lj.x * lj.x + lj.y * lj.y + li.x * li.x + li.y * li.y;
    if g > 0.0 && g.is_finite() {
        1.0 / g.sqrt()
    } else {
        1.0
    }
}

/// Robustly fits a fundamental matrix to pixel correspondences.
pub fn estimate_fundamental(corrs: &[Correspondence], cfg: &RansacConfig) -> Result<EpipolarModel, EstimationError> {
    cfg.validate()?;
    let n = corrs.len();
    if n < SAMPLE_SIZE {
        return Err(EstimationError::InsufficientCorrespondences(n));
    }
    let scorer = Scorer::new(corrs, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<Candidate> = None;
    let mut minimal_best = Score::WORST;
    let mut limit = cfg.max_iterations;
    let mut iterations = 0u64;
    let mut rejections = 0u64;
    let mut repairs = 0u64;
    let mut sample = [corrs[0]; SAMPLE_SIZE];

    while iterations < limit {
        iterations += 1;
        for (slot, k) in sample.iter_mut().zip(index::sample(&mut rng, n, SAMPLE_SIZE)) {
            *slot = corrs[k];
        }
        let roots = match seven_point(&sample) {
            Ok(r) => r,
            Err(_) => {
                rejections += 1;
                continue;
            }
        };
        for f in roots {
            let mut cand = scorer.candidate(f);
            // A sample is worth refining when it beats either the best raw
            // sample or the best refined model.
            let new_minimal = cand.score.better_than(&minimal_best);
            if new_minimal {
                minimal_best = cand.score;
            }
            if !new_minimal && best.is_some_and(|b| !cand.score.better_than(&b.score)) {
                continue;
            }
            if cfg.variant == Variant::Degensac {
                if let Degeneracy::Degenerate { homography, .. } =
                    homography_degeneracy_check(&sample, &cand.f, cfg.threshold, cfg.degeneracy_min_plane)
                {
                    if let Some(repaired) = plane_and_parallax(&scorer, &homography, &mut rng) {
                        if repaired.score.better_than(&cand.score) {
                            cand = repaired;
                            repairs += 1;
                        }
                    }
                }
            }
            if cfg.lo_enabled {
                cand = scorer.local_optimize(cand);
            }
            if best.is_some_and(|b| !cand.score.better_than(&b.score)) {
                continue;
            }
            best = Some(cand);
            let w = cand.score.inliers as f64 / n as f64;
            limit = adaptive_iteration_bound(w, SAMPLE_SIZE as u32, cfg.confidence).capped(cfg.max_iterations);
        }
    }

    let mut best = match best {
        Some(b) if b.score.inliers >= MIN_INLIERS => b,
        _ => return Err(EstimationError::EstimationFailed),
    };
    let inliers: Vec<Correspondence> = scorer.inlier_indices(&best.f).iter().map(|&k| corrs[k]).collect();
    if let Ok(f) = eight_point(&inliers) {
        let refit = scorer.candidate(f);
        if refit.score.cmp_quality(&best.score) != Ordering::Less {
            best = refit;
        }
    }
    let inlier_mask: Vec<bool> = corrs
        .iter()
        .map(|c| residual(cfg.residual, &best.f, &c.xi, &c.xj) <= cfg.threshold)
        .collect();
    let inlier_count = inlier_mask.iter().filter(|&&m| m).count();
    Ok(EpipolarModel {
        f: best.f,
        inlier_mask,
        inlier_count,
        score: best.score,
        iterations,
        degenerate_rejections: rejections,
        minimal_sample_score: minimal_best,
        degeneracy_repairs: repairs,
    })
}
