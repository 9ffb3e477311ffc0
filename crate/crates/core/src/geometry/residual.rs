use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{homogeneous, FundamentalMatrix};

/// Epipolar residual used for inlier classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Residual {
    #[default]
    SymmetricEpipolar,
    Sampson,
}

/// Algebraic error and the squared gradient norms of the two epipolar lines.
#[inline]
fn epipolar_terms(f: &FundamentalMatrix, x_i: &Vector2<f64>, x_j: &Vector2<f64>) -> (f64, f64, f64) {
    let m = f.matrix();
    let xi = homogeneous(x_i);
    let xj = homogeneous(x_j);
    let line_j = m * xi;
    let line_i = m.transpose() * xj;
    let algebraic = xj.dot(&line_j);
    (
        algebraic,
        line_j.x * line_j.x + line_j.y * line_j.y,
        line_i.x * line_i.x + line_i.y * line_i.y,
    )
}

/// First-order geometric error, in pixels.
pub fn sampson_distance(f: &FundamentalMatrix, x_i: &Vector2<f64>, x_j: &Vector2<f64>) -> f64 {
    let (r, a, b) = epipolar_terms(f, x_i, x_j);
    let den = a + b;
    if den == 0.0 {
        return if r == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (r * r / den).sqrt()
}

/// Root mean square of the point-to-epipolar-line distances in both images, in pixels.
pub fn symmetric_epipolar_distance(f: &FundamentalMatrix, x_i: &Vector2<f64>, x_j: &Vector2<f64>) -> f64 {
    let (r, a, b) = epipolar_terms(f, x_i, x_j);
    if r == 0.0 {
        return 0.0;
    }
    if a == 0.0 || b == 0.0 {
        return f64::INFINITY;
    }
    (0.5 * r * r * (1.0 / a + 1.0 / b)).sqrt()
}

pub fn residual(kind: Residual, f: &FundamentalMatrix, x_i: &Vector2<f64>, x_j: &Vector2<f64>) -> f64 {
    match kind {
        Residual::SymmetricEpipolar => symmetric_epipolar_distance(f, x_i, x_j),
        Residual::Sampson => sampson_distance(f, x_i, x_j),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::skew;
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn horizontal_stereo() -> FundamentalMatrix {
        FundamentalMatrix::new(skew(&Vector3::x())).unwrap()
    }

    #[test]
    fn horizontal_stereo_one_pixel_off() {
        // F = [e1]x; x_i = (0,0) has epipolar line y = 0 in image j, and
        // x_j = (0,1) has line y = 1 in image i: one pixel in each image.
        let f = horizontal_stereo();
        let d = symmetric_epipolar_distance(&f, &Vector2::new(0.0, 0.0), &Vector2::new(0.0, 1.0));
        assert!((d - 1.0).abs() < 1e-12, "{d}");
        let s = sampson_distance(&f, &Vector2::new(0.0, 0.0), &Vector2::new(0.0, 1.0));
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12, "{s}");
    }

    #[test]
    fn zero_on_epipolar_lines() {
        let f = horizontal_stereo();
        let a = Vector2::new(10.0, 5.0);
        let b = Vector2::new(-3.0, 5.0);
        assert_eq!(symmetric_epipolar_distance(&f, &a, &b), 0.0);
        assert_eq!(sampson_distance(&f, &a, &b), 0.0);
    }

    #[test]
    fn degenerate_gradient() {
        let f = FundamentalMatrix::new(Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)).unwrap();
        let p = Vector2::new(1.0, 2.0);
        assert_eq!(sampson_distance(&f, &p, &p), f64::INFINITY);
        assert_eq!(symmetric_epipolar_distance(&f, &p, &p), f64::INFINITY);
    }

    #[test]
    fn scale_invariant_and_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let k = Matrix3::new(500.0, 0.0, 320.0, 0.0, 500.0, 240.0, 0.0, 0.0, 1.0);
            let k_inv = k.try_inverse().unwrap();
            let raw = k_inv.transpose() * skew(&t) * k_inv;
            let f1 = FundamentalMatrix::new(raw).unwrap();
            let f5 = FundamentalMatrix::new(raw * 5.0).unwrap();
            let a = Vector2::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            let b = Vector2::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            let (s1, s5) = (sampson_distance(&f1, &a, &b), sampson_distance(&f5, &a, &b));
            let (d1, d5) = (symmetric_epipolar_distance(&f1, &a, &b), symmetric_epipolar_distance(&f5, &a, &b));
            assert!((s1 - s5).abs() <= 1e-9 * s1.max(1.0));
            assert!((d1 - d5).abs() <= 1e-9 * d1.max(1.0));
            assert!(s1 <= d1 / 2f64.sqrt() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn grows_monotonically_off_the_line() {
        let f = horizontal_stereo();
        let a = Vector2::new(3.0, 2.0);
        let mut prev = (0.0, 0.0);
        for k in 0..50 {
            let b = Vector2::new(-1.0, 2.0 + k as f64 * 0.25);
            let cur = (sampson_distance(&f, &a, &b), symmetric_epipolar_distance(&f, &a, &b));
            if k == 0 {
                assert_eq!(cur, (0.0, 0.0));
            } else {
                assert!(cur.0 > prev.0 && cur.1 > prev.1);
            }
            prev = cur;
        }
    }
}
