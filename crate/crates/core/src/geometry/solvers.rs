use nalgebra::{DMatrix, Matrix3, SMatrix, Vector2};

use super::{Correspondence, FundamentalMatrix, GeometryError};

/// Relative singular-value threshold separating a numerical null space from noise.
const NULL_TOL: f64 = 1e-10;

/// Similarity moving the centroid to the origin with RMS distance `sqrt(2)`.
pub fn hartley_normalization<'a, I>(points: I) -> Result<Matrix3<f64>, GeometryError>
where
    I: IntoIterator<Item = &'a Vector2<f64>>,
    I::IntoIter: Clone,
{
    let it = points.into_iter();
    let n = it.clone().count();
    if n == 0 {
        return Err(GeometryError::DegenerateSample);
    }
    let centroid = it.clone().fold(Vector2::zeros(), |acc, p| acc + p) / n as f64;
    let mean_sq = it.map(|p| (p - centroid).norm_squared()).sum::<f64>() / n as f64;
    if !(mean_sq > 0.0) || !mean_sq.is_finite() {
        return Err(GeometryError::DegenerateSample);
    }
    let s = (2.0 / mean_sq).sqrt();
    Ok(Matrix3::new(s, 0.0, -s * centroid.x, 0.0, s, -s * centroid.y, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(t[(0, 0)] * p.x + t[(0, 2)], t[(1, 1)] * p.y + t[(1, 2)])
}

fn epipolar_row(a: &Vector2<f64>, b: &Vector2<f64>) -> [f64; 9] {
    [b.x * a.x, b.x * a.y, b.x, b.y * a.x, b.y * a.y, b.y, a.x, a.y, 1.0]
}

fn to_matrix(v: &[f64]) -> Matrix3<f64> {
    Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

struct Normalized {
    ti: Matrix3<f64>,
    tj: Matrix3<f64>,
    pairs: Vec<(Vector2<f64>, Vector2<f64>)>,
}

fn normalize(corrs: &[Correspondence]) -> Result<Normalized, GeometryError> {
    let ti = hartley_normalization(corrs.iter().map(|c| &c.xi))?;
    let tj = hartley_normalization(corrs.iter().map(|c| &c.xj))?;
    let pairs = corrs.iter().map(|c| (apply(&ti, &c.xi), apply(&tj, &c.xj))).collect();
    Ok(Normalized { ti, tj, pairs })
}

/// Rank 2 is enforced in normalized coordinates; the transforms preserve it.
fn denormalize(n: &Normalized, f: &Matrix3<f64>) -> Result<FundamentalMatrix, GeometryError> {
    FundamentalMatrix::from_rank_two(&(n.tj.transpose() * f * n.ti))
}

/// Two vectors spanning the null space of a full-rank 7x9 system, by
/// Gauss-Jordan elimination with full pivoting. `None` when a pivot is too
/// small to trust, in which case the SVD path takes over.
fn null_pencil_fast(rows: &[[f64; 9]; 7]) -> Option<(Matrix3<f64>, Matrix3<f64>)> {
    let mut a = *rows;
    let mut cols: [usize; 9] = [0, 1, 2, 3, 4, 5, 6, 7, 8];
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for k in 0..7 {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (r, row) in a.iter().enumerate().skip(k) {
            for (c, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    (pr, pc, best) = (r, c, v.abs());
                }
            }
        }
        if best <= 1e-8 * scale {
            return None;
        }
        a.swap(k, pr);
        if pc != k {
            for row in a.iter_mut() {
                row.swap(k, pc);
            }
            cols.swap(k, pc);
        }
        let inv = 1.0 / a[k][k];
        for v in a[k].iter_mut() {
            *v *= inv;
        }
        let pivot_row = a[k];
        for (r, row) in a.iter_mut().enumerate() {
            if r != k && row[k] != 0.0 {
                let factor = row[k];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
            }
        }
    }
    // Reduced form [I | B]: each free column gives one null vector.
    let null = |free: usize| {
        let mut x = [0.0; 9];
        x[cols[free]] = 1.0;
        for (r, row) in a.iter().enumerate() {
            x[cols[r]] = -row[free];
        }
        to_matrix(&x)
    };
    Some((null(7), null(8)))
}

fn null_pencil_svd(rows: &[[f64; 9]; 7]) -> Result<(Matrix3<f64>, Matrix3<f64>), GeometryError> {
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }
    let svd = a.svd(false, true);
    let s = &svd.singular_values;
    // Coplanar samples leave a three-dimensional null space and are still
    // solved; anything larger cannot pin down a pencil of solutions.
    if !(s[5] > NULL_TOL * s[0]) {
        return Err(GeometryError::DegenerateSample);
    }
    let v_t = svd.v_t.expect("requested V^T");
    Ok((to_matrix(v_t.row(7).transpose().as_slice()), to_matrix(v_t.row(8).transpose().as_slice())))
}

/// Minimal solver: up to three fundamental matrices through 7 correspondences.
pub fn seven_point(sample: &[Correspondence]) -> Result<Vec<FundamentalMatrix>, GeometryError> {
    if sample.len() != 7 {
        return Err(GeometryError::SampleSize { expected: 7, got: sample.len() });
    }
    for (k, a) in sample.iter().enumerate() {
        for b in &sample[k + 1..] {
            if a.xi == b.xi || a.xj == b.xj {
                return Err(GeometryError::DegenerateSample);
            }
        }
    }
    let norm = normalize(sample)?;
    let mut rows = [[0.0; 9]; 7];
    for (row, (xi, xj)) in rows.iter_mut().zip(&norm.pairs) {
        *row = epipolar_row(xi, xj);
    }
    let (f1, f2) = match null_pencil_fast(&rows) {
        Some(pencil) => pencil,
        None => null_pencil_svd(&rows)?,
    };

    // det(alpha F1 + (1 - alpha) F2) is cubic in alpha; recover it from four samples.
    let det_at = |alpha: f64| (f1 * alpha + f2 * (1.0 - alpha)).determinant();
    let d0 = det_at(0.0);
    let d1 = det_at(1.0) - d0;
    let dm = det_at(-1.0) - d0;
    let d2 = det_at(2.0) - d0;
    let c2 = 0.5 * (d1 + dm);
    let odd = 0.5 * (d1 - dm);
    let c3 = (d2 - 4.0 * c2 - 2.0 * odd) / 6.0;
    let c1 = odd - c3;
    let roots = real_cubic_roots(c3, c2, c1, d0);

    let mut out = Vec::with_capacity(roots.len());
    for alpha in roots {
        let f = f1 * alpha + f2 * (1.0 - alpha);
        if let Ok(f) = denormalize(&norm, &f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(GeometryError::DegenerateSample);
    }
    Ok(out)
}

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, each refined with Newton steps.
pub(crate) fn real_cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let (c3, c2, c1, c0) = (c3 / scale, c2 / scale, c1 / scale, c0 / scale);
    let mut roots = if c3.abs() < 1e-12 {
        real_quadratic_roots(c2, c1, c0)
    } else {
        let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
        // Depressed cubic t^3 + p t + q with x = t - a/3.
        let p = b - a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        let shift = -a / 3.0;
        let disc = q * q / 4.0 + p * p * p / 27.0;
        if disc > 0.0 {
            let sq = disc.sqrt();
            let u = (-q / 2.0 + sq).cbrt();
            let v = (-q / 2.0 - sq).cbrt();
            vec![u + v + shift]
        } else if p == 0.0 {
            vec![shift]
        } else {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            (0..3)
                .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
                .collect()
        }
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((c3 * *r + c2) * *r + c1) * *r + c0;
            let df = (3.0 * c3 * *r + 2.0 * c2) * *r + c1;
            if df == 0.0 || !f.is_finite() {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.retain(|r| r.is_finite());
    roots
}

fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-12 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a];
    if q != 0.0 {
        r.push(c / q);
    }
    r
}

/// Least-squares linear solve over eight or more correspondences.
pub fn eight_point(corrs: &[Correspondence]) -> Result<FundamentalMatrix, GeometryError> {
    eight_point_weighted(corrs, None)
}

/// [`eight_point`] with per-equation weights (e.g. inverse Sampson gradient norms).
pub fn eight_point_weighted(
    corrs: &[Correspondence],
    weights: Option<&[f64]>,
) -> Result<FundamentalMatrix, GeometryError> {
    if corrs.len() < 8 {
        return Err(GeometryError::SampleSize { expected: 8, got: corrs.len() });
    }
    if let Some(w) = weights {
        if w.len() != corrs.len() {
            return Err(GeometryError::SampleSize { expected: corrs.len(), got: w.len() });
        }
    }
    let norm = normalize(corrs)?;
    let rows = corrs.len().max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (r, (xi, xj)) in norm.pairs.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[r]);
        for (c, v) in epipolar_row(xi, xj).into_iter().enumerate() {
            a[(r, c)] = w * v;
        }
    }
    let svd = a.svd(false, true);
    let s = &svd.singular_values;
    if !(s[7] > NULL_TOL * s[0]) {
        return Err(GeometryError::DegenerateSample);
    }
    let v_t = svd.v_t.expect("requested V^T");
    let f = to_matrix(v_t.row(8).transpose().as_slice());
    let f = FundamentalMatrix::project(&f)?;
    denormalize(&norm, f.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{skew, symmetric_epipolar_distance};
    use nalgebra::{Rotation3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_scene(rng: &mut ChaCha8Rng, n: usize) -> (Matrix3<f64>, Vec<Correspondence>) {
        let k = Matrix3::new(700.0, 0.0, 320.0, 0.0, 700.0, 240.0, 0.0, 0.0, 1.0);
        let r = *Rotation3::from_euler_angles(0.05, -0.2, 0.03).matrix();
        let t = Vector3::new(1.0, 0.1, 0.2);
        let mut out = Vec::new();
        while out.len() < n {
            let x = Vector3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0), rng.gen_range(4.0..8.0));
            let pi = k * x;
            let pj = k * (r * x + t);
            out.push(Correspondence::new(
                Vector2::new(pi.x / pi.z, pi.y / pi.z),
                Vector2::new(pj.x / pj.z, pj.y / pj.z),
            ));
        }
        let k_inv = k.try_inverse().unwrap();
        (k_inv.transpose() * skew(&t) * r * k_inv, out)
    }

    #[test]
    fn hartley_moves_to_unit_rms() {
        let pts = [Vector2::new(0.0, 0.0), Vector2::new(10.0, 0.0), Vector2::new(0.0, 10.0)];
        let t = hartley_normalization(pts.iter()).unwrap();
        let moved: Vec<_> = pts.iter().map(|p| apply(&t, p)).collect();
        let c = moved.iter().fold(Vector2::zeros(), |a, p| a + p) / 3.0;
        let rms = (moved.iter().map(|p| p.norm_squared()).sum::<f64>() / 3.0).sqrt();
        assert!(c.norm() < 1e-12);
        assert!((rms - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cubic_roots() {
        // (x - 1)(x - 2)(x + 3) = x^3 - 7x + 6
        let mut r = real_cubic_roots(1.0, 0.0, -7.0, 6.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // x^3 + x + 1 has a single real root near -0.6823
        let r = real_cubic_roots(1.0, 0.0, 1.0, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] + 0.682_327_803_828_019_3).abs() < 1e-12);
    }

    #[test]
    fn seven_point_contains_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (truth, pts) = toy_scene(&mut rng, 7);
        let truth = FundamentalMatrix::new(truth).unwrap();
        let roots = seven_point(&pts).unwrap();
        assert!(roots.len() == 1 || roots.len() == 3);
        let best = roots
            .iter()
            .map(|f| (f.matrix() - truth.matrix()).norm().min((f.matrix() + truth.matrix()).norm()))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "{best}");
    }

    #[test]
    fn seven_point_rejects_duplicates_and_wrong_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (_, mut pts) = toy_scene(&mut rng, 7);
        assert!(matches!(seven_point(&pts[..6]), Err(GeometryError::SampleSize { .. })));
        pts[3] = pts[1];
        assert_eq!(seven_point(&pts), Err(GeometryError::DegenerateSample));
    }

    #[test]
    fn eight_point_noise_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, pts) = toy_scene(&mut rng, 200);
        let f = eight_point(&pts).unwrap();
        let worst = pts
            .iter()
            .map(|c| symmetric_epipolar_distance(&f, &c.xi, &c.xj))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn eight_point_collinear_is_degenerate() {
        let pts: Vec<_> = (0..8)
            .map(|k| {
                let s = k as f64;
                Correspondence::new(Vector2::new(s, 2.0 * s + 1.0), Vector2::new(3.0 * s, -s + 4.0))
            })
            .collect();
        assert_eq!(eight_point(&pts), Err(GeometryError::DegenerateSample));
        assert!(matches!(eight_point(&pts[..7]), Err(GeometryError::SampleSize { .. })));
    }
}
