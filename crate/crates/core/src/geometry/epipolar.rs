use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};

use super::{skew, triangulate, CameraModel, GeometryError, Svd3};

const RANK_TOL: f64 = 1e-9;
const ESSENTIAL_TOL: f64 = 1e-6;

fn frobenius_normalized(m: &Matrix3<f64>) -> Result<Matrix3<f64>, GeometryError> {
    let norm = m.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(GeometryError::NonFinite);
    }
    Ok(m / norm)
}

fn singular_values(m: &Matrix3<f64>) -> Vector3<f64> {
    Svd3::new(m).s
}

/// Rank-2 fundamental matrix with unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(Matrix3<f64>);

impl FundamentalMatrix {
    /// Validates an existing matrix; fails unless it is already rank 2.
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let m = frobenius_normalized(&m)?;
        let smallest = singular_values(&m).min();
        if smallest >= RANK_TOL {
            return Err(GeometryError::NotRankTwo(smallest));
        }
        Ok(Self(m))
    }

    /// Projects an arbitrary matrix onto the closest rank-2 matrix and normalizes it.
    pub fn project(m: &Matrix3<f64>) -> Result<Self, GeometryError> {
        let m = frobenius_normalized(m)?;
        let mut svd = Svd3::new(&m);
        svd.s[2] = 0.0;
        if svd.s[1] <= 0.0 {
            return Err(GeometryError::DegenerateSample);
        }
        Ok(Self(frobenius_normalized(&svd.recompose())?))
    }

    /// Normalizes a matrix that is rank 2 by construction, such as
    /// `T_j^T F T_i` or `[e]x H`.
    ///
    /// No SVD is involved: pixel-space fundamental matrices have entries
    /// spanning several orders of magnitude, and a projection there adds
    /// absolute error to the small entries that pixel coordinates amplify.
    pub(crate) fn from_rank_two(m: &Matrix3<f64>) -> Result<Self, GeometryError> {
        Ok(Self(frobenius_normalized(m)?))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Epipole in image `j`: the left null vector, `F^T e_j = 0`.
    pub fn epipole_j(&self) -> Vector3<f64> {
        Svd3::new(&self.0).u.column(2).into_owned()
    }

    /// Epipole in image `i`: the right null vector, `F e_i = 0`.
    pub fn epipole_i(&self) -> Vector3<f64> {
        Svd3::new(&self.0).v_t.row(2).transpose()
    }
}

/// Essential matrix with two equal singular values and a zero third, unit norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialMatrix(Matrix3<f64>);

impl EssentialMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let m = frobenius_normalized(&m)?;
        let s = singular_values(&m);
        if (s[0] - s[1]).abs() >= ESSENTIAL_TOL || s[2] >= ESSENTIAL_TOL {
            return Err(GeometryError::InvalidEssential);
        }
        Ok(Self(m))
    }

    /// Builds `[t]x R`.
    pub fn from_pose(pose: &RelativePose) -> Result<Self, GeometryError> {
        Self::new(skew(&pose.translation) * pose.rotation)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Motion from camera `i` to camera `j`: `x_j = R x_i + t`, with `|t| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RelativePose {
    /// Normalizes the translation to unit length; fails for a zero baseline.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let norm = translation.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(GeometryError::InvalidCamera("zero baseline".into()));
        }
        if rotation.determinant() <= 0.0 {
            return Err(GeometryError::InvalidCamera("rotation has negative determinant".into()));
        }
        Ok(Self { rotation, translation: translation / norm })
    }

    fn projection(&self) -> Matrix3x4<f64> {
        let mut p = Matrix3x4::zeros();
        p.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        p.set_column(3, &self.translation);
        p
    }
}

/// Ground-truth motion between two cameras, with the translation left unnormalized.
pub fn relative_pose_between(cam_i: &CameraModel, cam_j: &CameraModel) -> (Matrix3<f64>, Vector3<f64>) {
    cam_i.pose().relative_to(&cam_j.pose())
}

/// `E = Kj^T F Ki`, projected onto the essential manifold.
pub fn compose_essential(
    f: &FundamentalMatrix,
    cam_i: &CameraModel,
    cam_j: &CameraModel,
) -> Result<EssentialMatrix, GeometryError> {
    let (ki, kj) = (cam_i.intrinsics(), cam_j.intrinsics());
    for k in [ki, kj] {
        let scale = k[(0, 0)].abs().max(k[(1, 1)].abs()).max(1.0);
        if !(k.determinant().abs() > 1e-12 * scale * scale) {
            return Err(GeometryError::InvalidCalibration);
        }
    }
    let e = kj.transpose() * f.matrix() * ki;
    let mut svd = Svd3::new(&frobenius_normalized(&e)?);
    let mean = 0.5 * (svd.s[0] + svd.s[1]);
    if mean <= 0.0 {
        return Err(GeometryError::InvalidEssential);
    }
    svd.s = Vector3::new(mean, mean, 0.0);
    EssentialMatrix::new(svd.recompose())
}

/// The four `(R, ±t)` motions consistent with an essential matrix.
///
/// Order: `(Ra, t)`, `(Ra, -t)`, `(Rb, t)`, `(Rb, -t)` with `Ra = U W V^T`
/// and `Rb = U W^T V^T`.
pub fn decompose_essential(e: &EssentialMatrix) -> [RelativePose; 4] {
    let Svd3 { mut u, mut v_t, .. } = Svd3::new(e.matrix());
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v_t.determinant() < 0.0 {
        v_t = -v_t;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let ra = u * w * v_t;
    let rb = u * w.transpose() * v_t;
    let t: Vector3<f64> = u.column(2).normalize();
    [
        RelativePose { rotation: ra, translation: t },
        RelativePose { rotation: ra, translation: -t },
        RelativePose { rotation: rb, translation: t },
        RelativePose { rotation: rb, translation: -t },
    ]
}

/// Outcome of the cheirality vote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheiralityChoice {
    pub pose: RelativePose,
    pub index: usize,
    pub passing: usize,
}

/// Picks the candidate that places the most points in front of both cameras.
///
/// Points are in normalized camera coordinates. Ties go to the lowest index.
pub fn select_cheirality(
    candidates: &[RelativePose],
    points: &[(Vector2<f64>, Vector2<f64>)],
) -> Result<CheiralityChoice, GeometryError> {
    if points.is_empty() || candidates.is_empty() {
        return Err(GeometryError::CheiralityUndecidable);
    }
    let p_i = Matrix3x4::identity();
    let mut best: Option<CheiralityChoice> = None;
    for (index, pose) in candidates.iter().enumerate() {
        let p_j = pose.projection();
        let passing = points
            .iter()
            .filter(|(xi, xj)| match triangulate(xi, xj, &p_i, &p_j) {
                Ok(x) => x.z > 0.0 && (pose.rotation * x + pose.translation).z > 0.0,
                Err(_) => false,
            })
            .count();
        if best.map_or(true, |b| passing > b.passing) {
            best = Some(CheiralityChoice { pose: *pose, index, passing });
        }
    }
    match best {
        Some(b) if b.passing > 0 => Ok(b),
        _ => Err(GeometryError::CheiralityUndecidable),
    }
}
