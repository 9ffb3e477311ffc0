use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};

use super::{homogeneous, hartley_normalization, skew, Correspondence, FundamentalMatrix, GeometryError};

/// Plane-induced mapping `x_j ~ H x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn transfer(&self, x_i: &Vector2<f64>) -> Option<Vector2<f64>> {
        let p = self.0 * homogeneous(x_i);
        if p.z == 0.0 || !p.z.is_finite() {
            return None;
        }
        Some(Vector2::new(p.x / p.z, p.y / p.z))
    }
}

/// One-way transfer error `|x_j - H x_i|` in image `j`, pixels.
pub fn transfer_error(h: &Homography, c: &Correspondence) -> f64 {
    match h.transfer(&c.xi) {
        Some(p) => (p - c.xj).norm(),
        None => f64::INFINITY,
    }
}

/// Homography induced by the plane through three correspondences, compatible with `F`.
///
/// `H = A - e' (M^-1 b)^T`, `A = [e']x F`, where `M` stacks the three points of
/// image `i` and `b` holds the per-point plane offsets.
pub fn plane_induced_homography(
    f: &FundamentalMatrix,
    triplet: [&Correspondence; 3],
) -> Result<Homography, GeometryError> {
    let e = f.epipole_j();
    let a = skew(&e) * f.matrix();
    let mut m = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for (k, c) in triplet.iter().enumerate() {
        let xi = homogeneous(&c.xi);
        let xj = homogeneous(&c.xj);
        m.set_row(k, &xi.transpose());
        let xe = xj.cross(&e);
        let den = xe.norm_squared();
        if den == 0.0 {
            return Err(GeometryError::DegenerateSample);
        }
        b[k] = xj.cross(&(a * xi)).dot(&xe) / den;
    }
    let m_inv = m.try_inverse().ok_or(GeometryError::DegenerateSample)?;
    let v = m_inv * b;
    let h = a - e * v.transpose();
    let norm = h.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(GeometryError::DegenerateSample);
    }
    Ok(Homography(h / norm))
}

/// Normalized DLT homography over four or more correspondences.
pub fn homography_dlt(corrs: &[Correspondence]) -> Result<Homography, GeometryError> {
    if corrs.len() < 4 {
        return Err(GeometryError::SampleSize { expected: 4, got: corrs.len() });
    }
    let ti = hartley_normalization(corrs.iter().map(|c| &c.xi))?;
    let tj = hartley_normalization(corrs.iter().map(|c| &c.xj))?;
    let rows = (2 * corrs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (k, c) in corrs.iter().enumerate() {
        let p = ti * homogeneous(&c.xi);
        let q = tj * homogeneous(&c.xj);
        let (x, y) = (p.x / p.z, p.y / p.z);
        let (u, v) = (q.x / q.z, q.y / q.z);
        let r0 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        let r1 = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u];
        for col in 0..9 {
            a[(2 * k, col)] = r0[col];
            a[(2 * k + 1, col)] = r1[col];
        }
    }
    let svd = a.svd(false, true);
    let s = &svd.singular_values;
    if !(s[7] > 1e-10 * s[0]) {
        return Err(GeometryError::DegenerateSample);
    }
    let h = svd.v_t.expect("requested V^T").row(8).transpose();
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let tj_inv = tj.try_inverse().ok_or(GeometryError::DegenerateSample)?;
    let full = tj_inv * hn * ti;
    let norm = full.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(GeometryError::DegenerateSample);
    }
    Ok(Homography(full / norm))
}
