use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};

use super::GeometryError;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// World-to-camera rigid pose, `x_cam = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Motion from this camera into `other`: `(R_o R^T, t_o - R_o R^T t)`.
    pub fn relative_to(&self, other: &CameraPose) -> (Matrix3<f64>, Vector3<f64>) {
        let r = other.rotation * self.rotation.transpose();
        (r, other.translation - r * self.translation)
    }
}

/// Pinhole camera: intrinsics, world-to-camera pose and image size.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    intrinsics: Matrix3<f64>,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    width: u32,
    height: u32,
}

impl CameraModel {
    pub fn new(
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidCamera(format!(
                "image size {width}x{height} must be at least 1x1"
            )));
        }
        if intrinsics.iter().chain(rotation.iter()).chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidCamera("non-finite entry".into()));
        }
        let k = &intrinsics;
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 || k[(2, 2)] != 1.0 {
            return Err(GeometryError::InvalidCamera(
                "intrinsics must be upper triangular with bottom row (0, 0, 1)".into(),
            ));
        }
        if k[(0, 0)] <= 0.0 || k[(1, 1)] <= 0.0 {
            return Err(GeometryError::InvalidCamera("focal lengths must be positive".into()));
        }
        let err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if err >= ORTHONORMAL_TOL {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation is not orthonormal (|R^T R - I| = {err:e})"
            )));
        }
        if rotation.determinant() <= 0.0 {
            return Err(GeometryError::InvalidCamera("rotation has negative determinant".into()));
        }
        Ok(Self { intrinsics, rotation, translation, width, height })
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn pose(&self) -> CameraPose {
        CameraPose::new(self.rotation, self.translation)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Camera centre in world coordinates, `-R^T t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// `K [R | t]`.
    pub fn projection_matrix(&self) -> Matrix3x4<f64> {
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        rt.set_column(3, &self.translation);
        self.intrinsics * rt
    }

    pub fn to_camera(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * world + self.translation
    }

    /// Projects a world point; `None` when it lies on or behind the image plane.
    pub fn project(&self, world: &Vector3<f64>) -> Option<(Vector2<f64>, f64)> {
        let cam = self.to_camera(world);
        if cam.z <= 0.0 {
            return None;
        }
        let p = self.intrinsics * cam;
        Some((Vector2::new(p.x / p.z, p.y / p.z), cam.z))
    }

    /// Whether a pixel lies inside the image, with pixel centres at integer
    /// coordinates `0..width` and `0..height`.
    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        pixel.x >= -0.5
            && pixel.y >= -0.5
            && pixel.x < self.width as f64 - 0.5
            && pixel.y < self.height as f64 - 0.5
    }

    /// Pixel to normalized camera coordinates (intrinsics removed).
    pub fn normalize(&self, pixel: &Vector2<f64>) -> Option<Vector2<f64>> {
        let k_inv = self.intrinsics.try_inverse()?;
        let v = k_inv * Vector3::new(pixel.x, pixel.y, 1.0);
        Some(Vector2::new(v.x / v.z, v.y / v.z))
    }
}
