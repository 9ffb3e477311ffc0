//! Two-view epipolar geometry.
//!
//! Everything here is a pure function of its inputs. Poses follow the
//! world-to-camera convention `x_cam = R * x_world + t` throughout, and
//! relative poses map camera `i` coordinates into camera `j` coordinates.

mod camera;
mod depth;
mod epipolar;
mod homography;
mod residual;
mod solvers;
mod triangulate;

pub use camera::{CameraModel, CameraPose};
pub use depth::{
    depth_consistent, reproject_with_depth, DepthMap, ReprojectionFailure, Reprojected, OCCLUSION_TOLERANCE,
};
pub use epipolar::{
    compose_essential, decompose_essential, relative_pose_between, select_cheirality,
    EssentialMatrix, FundamentalMatrix, RelativePose,
};
pub use homography::{
    homography_dlt, plane_induced_homography, transfer_error, Homography,
};
pub use residual::{residual, sampson_distance, symmetric_epipolar_distance, Residual};
pub use solvers::{eight_point, eight_point_weighted, hartley_normalization, seven_point};
pub use triangulate::triangulate;

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

/// A tentative point correspondence between image `i` and image `j`, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub xi: Vector2<f64>,
    pub xj: Vector2<f64>,
}

impl Correspondence {
    pub fn new(xi: Vector2<f64>, xj: Vector2<f64>) -> Self {
        Self { xi, xj }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid calibration")]
    InvalidCalibration,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("matrix is not rank 2 (smallest singular value {0:e} after normalization)")]
    NotRankTwo(f64),
    #[error("matrix is not a valid essential matrix")]
    InvalidEssential,
    #[error("matrix has zero norm or non-finite entries")]
    NonFinite,
    #[error("cheirality undecidable")]
    CheiralityUndecidable,
    #[error("no intersection")]
    NoIntersection,
    #[error("degenerate sample")]
    DegenerateSample,
    #[error("expected {expected} correspondences, got {got}")]
    SampleSize { expected: usize, got: usize },
    #[error("depth map holds {got} values, expected {expected}")]
    DepthSize { expected: usize, got: usize },
}

/// Cross-product matrix `[v]x`, so that `skew(a) * b == a.cross(&b)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// SVD of a 3x3 matrix, singular values descending, by one-sided Jacobi
/// rotations.
///
/// nalgebra's fixed-size 3x3 path goes through an eigendecomposition of
/// `M^T M`, squaring the condition number, and its general path returns
/// inaccurate left vectors for exactly rank-deficient input. Rank-2 matrices
/// are the norm here, and Jacobi keeps full relative accuracy on them.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Svd3 {
    pub u: Matrix3<f64>,
    pub s: Vector3<f64>,
    pub v_t: Matrix3<f64>,
}

impl Svd3 {
    pub fn new(m: &Matrix3<f64>) -> Self {
        let mut a = *m;
        let mut v = Matrix3::identity();
        for _ in 0..60 {
            let mut rotated = false;
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for w in [&mut a, &mut v] {
                    for r in 0..3 {
                        let (x, y) = (w[(r, p)], w[(r, q)]);
                        w[(r, p)] = c * x - s * y;
                        w[(r, q)] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order = [0, 1, 2];
        let norms = [a.column(0).norm(), a.column(1).norm(), a.column(2).norm()];
        order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
        let s = Vector3::new(norms[order[0]], norms[order[1]], norms[order[2]]);
        let v = Matrix3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);

        // Columns with a negligible norm carry no direction; complete the
        // basis from the reliable ones instead.
        let tiny = 64.0 * f64::EPSILON * s[0];
        let unit = |k: usize| a.column(order[k]) / s[k];
        let u0 = if s[0] > 0.0 { unit(0) } else { Vector3::x() };
        let u1 = if s[1] > tiny {
            unit(1)
        } else {
            let helper = if u0.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            u0.cross(&helper).normalize()
        };
        let u2 = if s[2] > tiny { unit(2) } else { u0.cross(&u1) };
        Self { u: Matrix3::from_columns(&[u0, u1, u2]), s, v_t: v.transpose() }
    }

    pub fn recompose(&self) -> Matrix3<f64> {
        self.u * Matrix3::from_diagonal(&self.s) * self.v_t
    }
}

pub(crate) fn homogeneous(p: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(p.x, p.y, 1.0)
}
