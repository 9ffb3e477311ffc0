use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Angular thresholds of the accuracy curve, degrees.
pub const MAA_THRESHOLDS: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub thresholds: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub maa: f64,
}

impl AccuracyCurve {
    /// Curve of a set where nothing was registered.
    pub fn zero() -> Self {
        Self { thresholds: MAA_THRESHOLDS.to_vec(), accuracy: vec![0.0; MAA_THRESHOLDS.len()], maa: 0.0 }
    }

    /// Pointwise mean of several curves.
    pub fn mean(curves: &[AccuracyCurve]) -> Option<Self> {
        if curves.is_empty() {
            return None;
        }
        let n = curves.len() as f64;
        let accuracy: Vec<f64> = (0..MAA_THRESHOLDS.len())
            .map(|k| curves.iter().map(|c| c.accuracy[k]).sum::<f64>() / n)
            .collect();
        let maa = curves.iter().map(|c| c.maa).sum::<f64>() / n;
        Some(Self { thresholds: MAA_THRESHOLDS.to_vec(), accuracy, maa })
    }
}

/// Errors closer than this to a threshold, in degrees, count as equal to it.
/// Angles computed from poses carry rounding noise around 1e-13 degrees, so
/// an error that is 5 degrees by construction must not flip to "below 5".
pub const THRESHOLD_GUARD: f64 = 1e-9;

/// Accuracy at each threshold `t` is the fraction of errors strictly below `t`
/// (below `t - THRESHOLD_GUARD` in floating point); mAA is their mean.
/// Infinite and NaN errors never count.
pub fn maa(errors: &[f64]) -> Result<AccuracyCurve, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let n = errors.len() as f64;
    let accuracy: Vec<f64> = MAA_THRESHOLDS
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e < t - THRESHOLD_GUARD).count() as f64 / n)
        .collect();
    let maa = accuracy.iter().sum::<f64>() / accuracy.len() as f64;
    Ok(AccuracyCurve { thresholds: MAA_THRESHOLDS.to_vec(), accuracy, maa })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(maa(&[0.0, 0.0]).unwrap().maa, 1.0);
        let c = maa(&[0.5, 3.5, 20.0]).unwrap();
        assert!((c.maa - 17.0 / 30.0).abs() < 1e-12);
        assert_eq!(c.accuracy[2], 1.0 / 3.0);
        assert_eq!(c.accuracy[3], 2.0 / 3.0);
        assert_eq!(maa(&[f64::INFINITY; 4]).unwrap().maa, 0.0);
        assert_eq!(maa(&[]), Err(MetricsError::NoPairs));
    }

    #[test]
    fn error_on_a_threshold_does_not_count_there() {
        let c = maa(&[5.0]).unwrap();
        assert_eq!(c.accuracy, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(c.maa, 0.5);
    }

    #[test]
    fn rounding_noise_at_a_threshold_does_not_count() {
        let c = maa(&[5.0 - 1e-13, 5.0 + 1e-13]).unwrap();
        assert_eq!(c.maa, 0.5);
        assert_eq!(maa(&[5.0 - 1e-6]).unwrap().maa, 0.6);
    }

    #[test]
    fn nan_never_counts() {
        assert_eq!(maa(&[f64::NAN, 0.0]).unwrap().maa, 0.5);
    }
}
