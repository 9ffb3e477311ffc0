use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::Svd3;

/// Similarity `x -> s R x + t` mapping estimated points onto ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAlignment {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Root-mean-square residual after alignment.
    pub rmse: f64,
}

impl TrajectoryAlignment {
    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * x) + self.translation
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Closed-form least-squares similarity (Umeyama 1991).
pub fn align_similarity(est: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<TrajectoryAlignment, MetricsError> {
    if est.len() != gt.len() {
        return Err(MetricsError::LengthMismatch(est.len(), gt.len()));
    }
    if est.len() < 3 {
        return Err(MetricsError::AlignmentUnderdetermined);
    }
    let n = est.len() as f64;
    let (mu_x, mu_y) = (centroid(est), centroid(gt));
    let mut cov = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (x, y) in est.iter().zip(gt) {
        let (xc, yc) = (x - mu_x, y - mu_y);
        cov += yc * xc.transpose();
        spread += xc * xc.transpose();
    }
    cov /= n;
    spread /= n;

    // The source must span at least a plane.
    let s = spread.symmetric_eigenvalues();
    let mut ev = [s[0], s[1], s[2]];
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
        return Err(MetricsError::AlignmentUnderdetermined);
    }
    let var_x = spread.trace();

    let Svd3 { u, s: singular, v_t } = Svd3::new(&cov);
    let mut sign = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        sign[(2, 2)] = -1.0;
    }
    let rotation = u * sign * v_t;
    let scale = (Matrix3::from_diagonal(&singular) * sign).trace() / var_x;
    if !(scale > 0.0) {
        return Err(MetricsError::AlignmentUnderdetermined);
    }
    let translation = mu_y - scale * rotation * mu_x;
    let mut al = TrajectoryAlignment { scale, rotation, translation, rmse: 0.0 };
    let sq: f64 = est.iter().zip(gt).map(|(x, y)| (al.apply(x) - y).norm_squared()).sum();
    al.rmse = (sq / n).sqrt();
    Ok(al)
}

/// Absolute trajectory error: camera-centre RMSE after similarity alignment.
pub fn ate(centers_est: &[Vector3<f64>], centers_gt: &[Vector3<f64>]) -> Result<f64, MetricsError> {
    if centers_est.len() < 3 {
        return Err(MetricsError::AteUndefined(centers_est.len()));
    }
    Ok(align_similarity(centers_est, centers_gt)?.rmse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn cloud() -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.2, -0.3),
            Vector3::new(-0.5, 1.4, 0.1),
            Vector3::new(0.3, -0.7, 2.0),
            Vector3::new(2.2, 1.1, 0.9),
        ]
    }

    #[test]
    fn recovers_constructed_similarity() {
        let r0 = *Rotation3::from_euler_angles(0.4, -1.1, 2.5).matrix();
        let c = Vector3::new(3.0, -2.0, 0.5);
        let est = cloud();
        let gt: Vec<_> = est.iter().map(|x| 2.0 * (r0 * x) + c).collect();
        let al = align_similarity(&est, &gt).unwrap();
        assert!((al.scale - 2.0).abs() < 1e-9);
        assert!((al.rotation - r0).amax() < 1e-9);
        assert!((al.translation - c).amax() < 1e-9);
        assert!(al.rmse < 1e-9);
    }

    #[test]
    fn identity_and_underdetermined() {
        let p = cloud();
        let al = align_similarity(&p, &p).unwrap();
        assert!((al.scale - 1.0).abs() < 1e-12);
        assert!((al.rotation - Matrix3::identity()).amax() < 1e-12);
        assert!(al.rmse < 1e-12);
        assert_eq!(align_similarity(&p[..2], &p[..2]), Err(MetricsError::AlignmentUnderdetermined));
        let line: Vec<_> = (0..5).map(|k| Vector3::new(k as f64, 2.0 * k as f64, 0.0)).collect();
        assert_eq!(align_similarity(&line, &line), Err(MetricsError::AlignmentUnderdetermined));
    }

    #[test]
    fn planar_points_are_enough() {
        let est: Vec<_> = cloud().iter().map(|p| Vector3::new(p.x, p.y, 0.0)).collect();
        let r0 = *Rotation3::from_euler_angles(0.1, 0.7, -0.3).matrix();
        let gt: Vec<_> = est.iter().map(|x| 0.5 * (r0 * x)).collect();
        let al = align_similarity(&est, &gt).unwrap();
        assert!((al.rotation - r0).amax() < 1e-9);
    }

    #[test]
    fn ate_perturbed_camera_bounded_by_delta() {
        let gt = cloud()[..4].to_vec();
        let delta = 0.3;
        let mut est = gt.clone();
        est[2] += Vector3::new(0.0, delta, 0.0);
        let e = ate(&est, &gt).unwrap();
        assert!(e > 0.0 && e <= delta, "{e}");
        // Doing nothing is one candidate alignment, so the optimum is no worse.
        let naive = (delta * delta / 4.0).sqrt();
        assert!(e <= naive + 1e-12);
        assert_eq!(ate(&gt[..2], &gt[..2]), Err(MetricsError::AteUndefined(2)));
    }
}
