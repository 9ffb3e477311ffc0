use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Angle of `R_est^T R_gt`, degrees in [0, 180].
///
/// Equals `arccos((trace - 1) / 2)`; evaluated through the quaternion as
/// `2 atan2(|v|, |w|)`, which keeps full precision near 0 and 180 degrees.
pub fn rotation_error(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> f64 {
    let d = Rotation3::from_matrix_unchecked(r_est.transpose() * r_gt);
    let q = UnitQuaternion::from_rotation_matrix(&d);
    (2.0 * q.imag().norm().atan2(q.w.abs())).to_degrees().clamp(0.0, 180.0)
}

/// Angle between two translation directions, degrees in [0, 180]. The sign is
/// kept: `t_est = -t_gt` scores 180.
pub fn translation_error(t_est: &Vector3<f64>, t_gt: &Vector3<f64>) -> Result<f64, MetricsError> {
    if t_gt.norm() < 1e-9 {
        return Err(MetricsError::PureRotationPair);
    }
    if !(t_est.norm() > 0.0) {
        return Err(MetricsError::ZeroTranslation);
    }
    let (a, b) = (t_est.normalize(), t_gt.normalize());
    Ok(a.cross(&b).norm().atan2(a.dot(&b)).to_degrees())
}

/// How the rotation and translation errors collapse into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCombination {
    #[default]
    Max,
    RotationOnly,
    TranslationOnly,
}

impl ErrorCombination {
    pub fn combine(self, rotation: f64, translation: f64) -> f64 {
        match self {
            ErrorCombination::Max => rotation.max(translation),
            ErrorCombination::RotationOnly => rotation,
            ErrorCombination::TranslationOnly => translation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPoseError {
    #[serde(with = "crate::serde_float")]
    pub rotation: f64,
    #[serde(with = "crate::serde_float")]
    pub translation: f64,
    #[serde(with = "crate::serde_float")]
    pub combined: f64,
}

impl PairPoseError {
    /// Failed estimation or an unregistered pair.
    pub fn failed() -> Self {
        Self { rotation: f64::INFINITY, translation: f64::INFINITY, combined: f64::INFINITY }
    }

    pub fn is_failed(&self) -> bool {
        !self.combined.is_finite()
    }
}

/// Compares an estimated relative motion against the ground truth. The
/// estimated translation only needs the right direction.
pub fn pair_pose_error(
    r_est: &Matrix3<f64>,
    t_est: &Vector3<f64>,
    r_gt: &Matrix3<f64>,
    t_gt: &Vector3<f64>,
    combination: ErrorCombination,
) -> Result<PairPoseError, MetricsError> {
    let rotation = rotation_error(r_est, r_gt);
    let translation = match translation_error(t_est, t_gt) {
        Ok(e) => e,
        Err(MetricsError::ZeroTranslation) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(PairPoseError { rotation, translation, combined: combination.combine(rotation, translation) })
}
