use nalgebra::{Matrix3x4, Matrix4, RowVector4, Vector2, Vector3};

use super::GeometryError;

const PARALLEL_TOL: f64 = 1e-12;

/// Linear (DLT) triangulation of one correspondence.
///
/// Each of the four equations is scaled to unit norm before the SVD so the
/// result does not depend on the pixel scale of the projection matrices.
pub fn triangulate(
    x_i: &Vector2<f64>,
    x_j: &Vector2<f64>,
    p_i: &Matrix3x4<f64>,
    p_j: &Matrix3x4<f64>,
) -> Result<Vector3<f64>, GeometryError> {
    let rows = [
        x_i.x * p_i.row(2) - p_i.row(0),
        x_i.y * p_i.row(2) - p_i.row(1),
        x_j.x * p_j.row(2) - p_j.row(0),
        x_j.y * p_j.row(2) - p_j.row(1),
    ];
    let mut a = Matrix4::zeros();
    for (k, row) in rows.iter().enumerate() {
        let n = row.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(GeometryError::NoIntersection);
        }
        a.set_row(k, &(RowVector4::from(*row) / n));
    }
    let svd = a.svd(false, true);
    let s = &svd.singular_values;
    // Sorted descending: a second near-zero value means the rays do not pin down a point.
    if s[2] < PARALLEL_TOL * s[0] {
        return Err(GeometryError::NoIntersection);
    }
    let v_t = svd.v_t.expect("requested V^T");
    let x = v_t.row(3);
    let w = x[3];
    let scale = x.fixed_columns::<3>(0).norm();
    if w.abs() <= PARALLEL_TOL * scale {
        return Err(GeometryError::NoIntersection);
    }
    Ok(Vector3::new(x[0] / w, x[1] / w, x[2] / w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn camera(k: &Matrix3<f64>, c: Vector3<f64>) -> Matrix3x4<f64> {
        let mut rt = Matrix3x4::identity();
        rt.set_column(3, &(-c));
        k * rt
    }

    fn project(p: &Matrix3x4<f64>, x: &Vector3<f64>) -> Vector2<f64> {
        let h = p * x.push(1.0);
        Vector2::new(h.x / h.z, h.y / h.z)
    }

    #[test]
    fn recovers_point_from_unit_baseline() {
        let k = Matrix3::identity();
        let p_i = camera(&k, Vector3::zeros());
        let p_j = camera(&k, Vector3::new(1.0, 0.0, 0.0));
        let x = Vector3::new(0.0, 0.0, 5.0);
        // By hand: (0, 0) in the first image and (-1/5, 0) in the second.
        let got = triangulate(&Vector2::new(0.0, 0.0), &Vector2::new(-0.2, 0.0), &p_i, &p_j).unwrap();
        assert!((got - x).norm() < 1e-9, "{got}");
    }

    #[test]
    fn pixel_scale_reprojection_is_exact() {
        let k = Matrix3::new(1200.0, 0.0, 512.0, 0.0, 1200.0, 384.0, 0.0, 0.0, 1.0);
        let p_i = camera(&k, Vector3::new(-0.5, 0.1, -4.0));
        let p_j = camera(&k, Vector3::new(0.7, -0.2, -4.5));
        for x in [Vector3::new(0.3, 0.2, 0.1), Vector3::new(-1.0, 0.5, 2.0)] {
            let (a, b) = (project(&p_i, &x), project(&p_j, &x));
            let got = triangulate(&a, &b, &p_i, &p_j).unwrap();
            assert!((project(&p_i, &got) - a).norm() < 1e-8);
            assert!((project(&p_j, &got) - b).norm() < 1e-8);
        }
    }

    #[test]
    fn identical_cameras_have_no_intersection() {
        let p = camera(&Matrix3::identity(), Vector3::zeros());
        let x = Vector2::new(0.1, 0.2);
        assert_eq!(triangulate(&x, &x, &p, &p), Err(GeometryError::NoIntersection));
    }
}
