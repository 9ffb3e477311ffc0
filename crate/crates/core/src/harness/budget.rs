use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stereo::{load_inputs, prepare_scene, thread_pool};
use super::{HarnessError, RunConfig};
use crate::geometry::Correspondence;
use crate::ransac::{estimate_fundamental, RansacConfig};

/// Iteration cap used while measuring.
pub const CALIBRATION_ITERATIONS: u64 = 1000;
pub const MIN_BUDGET: u64 = 1000;
pub const MAX_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BudgetCalibration {
    pub target_seconds: f64,
    pub sample_pairs: usize,
    pub measured_iterations: u64,
    pub seconds_per_iteration: f64,
    pub suggested_max_iterations: u64,
}

/// `target / cost` rounded to the nearest thousand and clamped to
/// `[MIN_BUDGET, MAX_BUDGET]`.
pub fn suggest_budget(target_seconds: f64, seconds_per_iteration: f64) -> u64 {
    let raw = target_seconds / seconds_per_iteration;
    if raw.is_nan() {
        return MIN_BUDGET;
    }
    let rounded = (raw / 1000.0).round() * 1000.0;
    rounded.clamp(MIN_BUDGET as f64, MAX_BUDGET as f64) as u64
}

/// Measures the host's cost per RANSAC iteration on `samples` with the cap
/// fixed at [`CALIBRATION_ITERATIONS`] and suggests a cap for `target_seconds`.
///
/// Only iterations actually executed count, so early termination does not bias
/// the estimate. Samples on which estimation fails are skipped.
pub fn calibrate_budget(
    target_seconds: f64,
    samples: &[Vec<Correspondence>],
    ransac: &RansacConfig,
) -> Result<BudgetCalibration, HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::Config("budget calibration needs at least one sample pair".into()));
    }
    if !(target_seconds > 0.0) || !target_seconds.is_finite() {
        return Err(HarnessError::Config(format!("target seconds {target_seconds} must be positive")));
    }
    let cfg = RansacConfig { max_iterations: CALIBRATION_ITERATIONS, ..ransac.clone() };
    let mut iterations = 0u64;
    let mut seconds = 0.0;
    for corrs in samples {
        let start = Instant::now();
        let result = estimate_fundamental(corrs, &cfg);
        let elapsed = start.elapsed().as_secs_f64();
        if let Ok(model) = result {
            iterations += model.iterations;
            seconds += elapsed;
        }
    }
    if iterations == 0 {
        return Err(HarnessError::Runtime("estimation failed on every calibration sample".into()));
    }
    let per_iteration = seconds / iterations as f64;
    Ok(BudgetCalibration {
        target_seconds,
        sample_pairs: samples.len(),
        measured_iterations: iterations,
        seconds_per_iteration: per_iteration,
        suggested_max_iterations: suggest_budget(target_seconds, per_iteration),
    })
}

/// Calibrates on the tentative matches of the configured scenes, taking the
/// first `max_pairs` pairs (in enumeration order) that can be estimated at all.
pub fn calibrate_from_config(
    cfg: &RunConfig,
    target_seconds: f64,
    max_pairs: usize,
) -> Result<BudgetCalibration, HarnessError> {
    let scenes = load_inputs(cfg)?;
    let pool = thread_pool(cfg.jobs)?;
    let mut samples = Vec::new();
    for scene in &scenes {
        let prepared = pool.install(|| prepare_scene(cfg, scene))?;
        samples.extend(prepared.into_iter().map(|p| p.correspondences).filter(|c| c.len() >= 7));
        if samples.len() >= max_pairs {
            break;
        }
    }
    samples.truncate(max_pairs);
    calibrate_budget(target_seconds, &samples, &cfg.ransac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suggestion_rounds_and_clamps() {
        let cost = 2e-6;
        assert_eq!(suggest_budget(1000.0 * cost, cost), 1000);
        assert_eq!(suggest_budget(0.5, 1e-5), 50_000);
        assert_eq!(suggest_budget(0.5, 3e-6), 167_000);
        assert_eq!(suggest_budget(1e-9, cost), MIN_BUDGET);
        assert_eq!(suggest_budget(1e6, cost), MAX_BUDGET);
        assert_eq!(suggest_budget(1.0, 0.0), MAX_BUDGET);
    }

    #[test]
    fn doubling_the_target_doubles_the_budget() {
        for cost in [1.3e-6, 4.7e-6, 2.2e-5] {
            for target in [0.05, 0.5, 1.0] {
                let one = suggest_budget(target, cost) as i64;
                let two = suggest_budget(2.0 * target, cost) as i64;
                if two < MAX_BUDGET as i64 && one > MIN_BUDGET as i64 {
                    assert!((two - 2 * one).abs() <= 1000, "{cost} {target}: {one} {two}");
                }
            }
        }
    }
}
