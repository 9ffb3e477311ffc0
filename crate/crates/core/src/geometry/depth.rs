use nalgebra::{Vector2, Vector3};

use super::{CameraModel, GeometryError};

/// Relative depth disagreement accepted by the occlusion check.
pub const OCCLUSION_TOLERANCE: f64 = 0.05;

/// Dense per-pixel depth (camera z), row-major. Values `<= 0` mark unknown or occluded pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self, GeometryError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(GeometryError::DepthSize { expected, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self { width, height, values: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, col: u32, row: u32) -> f32 {
        self.values[row as usize * self.width as usize + col as usize]
    }

    pub fn set(&mut self, col: u32, row: u32, value: f32) {
        self.values[row as usize * self.width as usize + col as usize] = value;
    }

    /// Bilinear depth at a sub-pixel location (pixel centres on integers).
    ///
    /// Returns `None` outside the image, next to invalid samples, or across a
    /// depth discontinuity larger than the occlusion tolerance.
    pub fn sample(&self, pixel: &Vector2<f64>) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(pixel.x >= -0.5 && pixel.y >= -0.5 && pixel.x < w - 0.5 && pixel.y < h - 0.5) {
            return None;
        }
        let x = pixel.x.clamp(0.0, w - 1.0);
        let y = pixel.y.clamp(0.0, h - 1.0);
        let (x0, y0) = (x.floor() as u32, y.floor() as u32);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let d = [
            self.get(x0, y0) as f64,
            self.get(x1, y0) as f64,
            self.get(x0, y1) as f64,
            self.get(x1, y1) as f64,
        ];
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo <= 0.0 || (hi - lo) / lo >= OCCLUSION_TOLERANCE {
            return None;
        }
        let top = d[0] * (1.0 - fx) + d[1] * fx;
        let bottom = d[2] * (1.0 - fx) + d[3] * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }
}

/// A pixel transferred into the target image, with its predicted depth there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reprojected {
    pub pixel: Vector2<f64>,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReprojectionFailure {
    OutsideSource,
    InvalidDepth,
    BehindCamera,
    DimensionMismatch,
}

/// Back-projects `pixel` with the source depth and projects it into camera `j`.
pub fn reproject_with_depth(
    pixel: &Vector2<f64>,
    cam_i: &CameraModel,
    depth_i: &DepthMap,
    cam_j: &CameraModel,
) -> Result<Reprojected, ReprojectionFailure> {
    if depth_i.width() != cam_i.width() || depth_i.height() != cam_i.height() {
        return Err(ReprojectionFailure::DimensionMismatch);
    }
    if !cam_i.contains(pixel) {
        return Err(ReprojectionFailure::OutsideSource);
    }
    let d = depth_i.sample(pixel).ok_or(ReprojectionFailure::InvalidDepth)?;
    let ray = cam_i.normalize(pixel).ok_or(ReprojectionFailure::InvalidDepth)?;
    let x_cam = Vector3::new(ray.x * d, ray.y * d, d);
    let world = cam_i.rotation().transpose() * (x_cam - cam_i.translation());
    let (pixel, depth) = cam_j.project(&world).ok_or(ReprojectionFailure::BehindCamera)?;
    Ok(Reprojected { pixel, depth })
}

/// Occlusion check: the target pixel's depth agrees with the prediction to within `tolerance`.
pub fn depth_consistent(r: &Reprojected, cam_j: &CameraModel, depth_j: &DepthMap, tolerance: f64) -> bool {
    if !cam_j.contains(&r.pixel) {
        return false;
    }
    match depth_j.sample(&r.pixel) {
        Some(d) => ((r.depth - d) / d).abs() < tolerance,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn camera(c: Vector3<f64>) -> CameraModel {
        let k = Matrix3::new(100.0, 0.0, 31.5, 0.0, 100.0, 23.5, 0.0, 0.0, 1.0);
        CameraModel::new(k, Matrix3::identity(), -c, 64, 48).unwrap()
    }

    /// Depth of the fronto-parallel plane z = 4 seen from a camera at height `c`.
    fn plane_depth(cam: &CameraModel) -> DepthMap {
        let z = 4.0 - cam.center().z;
        DepthMap::filled(cam.width(), cam.height(), z as f32)
    }

    #[test]
    fn identity_transfer() {
        let cam = camera(Vector3::zeros());
        let mut depth = plane_depth(&cam);
        depth.set(10, 10, 0.0);
        for (x, y) in [(3.0, 4.0), (20.25, 30.5), (63.0, 47.0)] {
            let p = Vector2::new(x, y);
            let r = reproject_with_depth(&p, &cam, &depth, &cam).unwrap();
            assert!((r.pixel - p).norm() < 1e-9);
            assert!((r.depth - 4.0).abs() < 1e-9);
        }
        assert_eq!(
            reproject_with_depth(&Vector2::new(10.0, 10.0), &cam, &depth, &cam),
            Err(ReprojectionFailure::InvalidDepth)
        );
    }

    #[test]
    fn analytic_plane_transfer() {
        let ci = camera(Vector3::zeros());
        let cj = camera(Vector3::new(0.3, -0.1, 0.5));
        let (di, dj) = (plane_depth(&ci), plane_depth(&cj));
        for (x, y) in [(5.0, 5.0), (30.0, 20.0), (50.0, 40.0)] {
            let p = Vector2::new(x, y);
            let r = reproject_with_depth(&p, &ci, &di, &cj).unwrap();
            let world = Vector3::new((x - 31.5) / 100.0 * 4.0, (y - 23.5) / 100.0 * 4.0, 4.0);
            let (expect, z) = cj.project(&world).unwrap();
            assert!((r.pixel - expect).norm() < 1e-6);
            assert!((r.depth - z).abs() < 1e-9);
            if cj.contains(&r.pixel) {
                assert!(depth_consistent(&r, &cj, &dj, OCCLUSION_TOLERANCE));
                let back = reproject_with_depth(&r.pixel, &cj, &dj, &ci).unwrap();
                assert!((back.pixel - p).norm() < 1e-3);
            }
        }
    }

    #[test]
    fn behind_target_camera() {
        let ci = camera(Vector3::zeros());
        let cj = camera(Vector3::new(0.0, 0.0, 10.0));
        let di = plane_depth(&ci);
        assert_eq!(
            reproject_with_depth(&Vector2::new(30.0, 20.0), &ci, &di, &cj),
            Err(ReprojectionFailure::BehindCamera)
        );
    }

    #[test]
    fn discontinuity_is_invalid() {
        let mut d = DepthMap::filled(4, 4, 2.0);
        d.set(2, 1, 3.0);
        assert!(d.sample(&Vector2::new(1.5, 1.5)).is_none());
        assert_eq!(d.sample(&Vector2::new(0.5, 2.5)), Some(2.0));
        assert!(DepthMap::new(2, 2, vec![1.0; 3]).is_err());
    }
}
