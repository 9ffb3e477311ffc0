use std::f64::consts::TAU;

use nalgebra::{DVector, Matrix3, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::dataset::{ImageData, Observation, SceneBundle};
use crate::geometry::{relative_pose_between, skew, CameraModel, DepthMap, FundamentalMatrix, RelativePose};
use crate::matching::{DescriptorSet, Keypoint, KeypointList};
use crate::metrics::CoVisibility;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SynthSpec {
    pub name: String,
    /// Feature method name the keypoints and descriptors are stored under.
    pub method: String,
    pub cameras: usize,
    pub points: usize,
    /// Share of points on the ground plane `z = 0`.
    pub planar_fraction: f64,
    /// Keypoint position noise, pixels.
    pub keypoint_noise: f64,
    pub descriptor_dim: usize,
    /// Per-component Gaussian noise added to the unit descriptor of a point.
    pub descriptor_noise: f64,
    /// Share of keypoints per image whose descriptor is replaced by an unrelated one.
    pub outlier_fraction: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Focal length in pixels; defaults to the image width.
    pub focal_length: Option<f64>,
    /// Radius of the camera ring.
    pub radius: f64,
    /// Height of the camera ring above the ground plane.
    pub ring_height: f64,
    /// Standard deviation of the camera position and look-at jitter.
    pub jitter: f64,
    /// Radius of the point cloud and of the ground-plane disc.
    pub extent: f64,
    pub render_depth: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            method: "synthetic".into(),
            cameras: 20,
            points: 1000,
            planar_fraction: 0.0,
            keypoint_noise: 0.0,
            descriptor_dim: 32,
            descriptor_noise: 0.05,
            outlier_fraction: 0.0,
            image_width: 640,
            image_height: 480,
            focal_length: None,
            radius: 8.0,
            ring_height: 3.0,
            jitter: 0.2,
            extent: 2.5,
            render_depth: true,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.into()));
        if self.cameras == 0 || self.points == 0 || self.descriptor_dim == 0 {
            return bad("cameras, points and descriptor-dim must be positive");
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image size must be positive");
        }
        if !(0.0..=1.0).contains(&self.planar_fraction) {
            return bad("planar-fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return bad("outlier-fraction must lie in [0, 1)");
        }
        for (name, v) in [
            ("keypoint-noise", self.keypoint_noise),
            ("descriptor-noise", self.descriptor_noise),
            ("jitter", self.jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be a non-negative number"));
            }
        }
        if !(self.radius > 0.0 && self.extent > 0.0 && self.ring_height.is_finite()) {
            return bad("radius and extent must be positive");
        }
        if self.focal_length.is_some_and(|f| !(f > 0.0 && f.is_finite())) {
            return bad("focal-length must be positive");
        }
        if self.name.is_empty() || self.method.is_empty() || self.method.contains(['/', '\\']) {
            return bad("name and method must be non-empty path components");
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Matrix3<f64> {
        let f = self.focal_length.unwrap_or(self.image_width as f64);
        let (cx, cy) = ((self.image_width as f64 - 1.0) / 2.0, (self.image_height as f64 - 1.0) / 2.0);
        Matrix3::new(f, 0.0, cx, 0.0, f, cy, 0.0, 0.0, 1.0)
    }
}

/// World-to-camera rotation of a camera at `center` looking at `target`,
/// with image `y` pointing away from `up`.
pub fn look_at(center: &Vector3<f64>, target: &Vector3<f64>, up: &Vector3<f64>) -> Option<Matrix3<f64>> {
    let f = (target - center).try_normalize(1e-12)?;
    let right = f.cross(up).try_normalize(1e-12)?;
    let down = f.cross(&right);
    Some(Matrix3::from_rows(&[right.transpose(), down.transpose(), f.transpose()]))
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    let n = |r: &mut ChaCha8Rng| -> f64 { r.sample(StandardNormal) };
    Vector3::new(n(rng), n(rng), n(rng)) * sigma
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        if let Some(u) = v.try_normalize(1e-12) {
            return u;
        }
    }
}

fn place_points(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let planar = (spec.planar_fraction * spec.points as f64).round() as usize;
    (0..spec.points)
        .map(|k| {
            if k < planar {
                let r = spec.extent * rng.gen::<f64>().sqrt();
                let a = rng.gen::<f64>() * TAU;
                Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            } else {
                // Uniform in a ball resting on the ground plane.
                loop {
                    let p = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 2.0
                        - Vector3::repeat(1.0);
                    if p.norm_squared() <= 1.0 {
                        break p * spec.extent + Vector3::new(0.0, 0.0, spec.extent);
                    }
                }
            }
        })
        .collect()
}

fn place_cameras(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CameraModel>, SynthError> {
    let k = spec.intrinsics();
    (0..spec.cameras)
        .map(|c| {
            let a = TAU * c as f64 / spec.cameras as f64;
            let center = Vector3::new(spec.radius * a.cos(), spec.radius * a.sin(), spec.ring_height)
                + gaussian3(rng, spec.jitter);
            let target = Vector3::new(0.0, 0.0, 0.5 * spec.extent) + gaussian3(rng, spec.jitter);
            let r = look_at(&center, &target, &Vector3::z())
                .ok_or_else(|| SynthError::InvalidSpec("camera looks straight along the vertical".into()))?;
            Ok(CameraModel::new(k, r, -(r * center), spec.image_width, spec.image_height)?)
        })
        .collect()
}

/// Nearest-surface depth from 3x3 splats of the projected points. Cells no
/// point covers hold 0, which marks them invalid.
fn render_depth(cam: &CameraModel, projections: &[(usize, Vector2<f64>, f64)]) -> DepthMap {
    let (w, h) = (cam.width(), cam.height());
    let mut depth = DepthMap::filled(w, h, 0.0);
    for &(_, px, z) in projections {
        let (cx, cy) = (px.x.round() as i64, px.y.round() as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    continue;
                }
                let old = depth.get(x as u32, y as u32);
                if old <= 0.0 || (z as f32) < old {
                    depth.set(x as u32, y as u32, z as f32);
                }
            }
        }
    }
    depth
}

/// Generates a full scene. Deterministic for a given spec.
pub fn generate_scene(spec: &SynthSpec) -> Result<SceneBundle, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cameras = place_cameras(spec, &mut rng)?;
    let points = place_points(spec, &mut rng);
    let base: Vec<DVector<f64>> = (0..points.len()).map(|_| unit_vector(&mut rng, spec.descriptor_dim)).collect();
    let noise = Normal::new(0.0, spec.keypoint_noise).expect("validated sigma");

    let mut images = Vec::with_capacity(cameras.len());
    let mut observations = Vec::new();
    let mut any_visible = false;
    for (c, cam) in cameras.into_iter().enumerate() {
        let id = format!("img{c:03}");
        let projected: Vec<(usize, Vector2<f64>, f64)> = points
            .iter()
            .enumerate()
            .filter_map(|(p, x)| {
                let (px, z) = cam.project(x)?;
                cam.contains(&px).then_some((p, px, z))
            })
            .collect();
        // A point is visible when no nearer splat covers its own centre cell.
        let zbuf = render_depth(&cam, &projected);
        let visible: Vec<(usize, Vector2<f64>)> = projected
            .iter()
            .filter(|(_, px, z)| {
                let (x, y) = (px.x.round().max(0.0) as u32, px.y.round().max(0.0) as u32);
                zbuf.get(x.min(cam.width() - 1), y.min(cam.height() - 1)) >= *z as f32
            })
            .map(|&(p, px, _)| (p, px))
            .collect();
        any_visible |= !visible.is_empty();

        let mut order: Vec<usize> = (0..visible.len()).collect();
        order.shuffle(&mut rng);
        let n_out = (spec.outlier_fraction * visible.len() as f64).round() as usize;
        let mut corrupt = vec![false; visible.len()];
        for &k in order.iter().take(n_out) {
            corrupt[k] = true;
        }
        order.shuffle(&mut rng);

        let mut kps = Vec::with_capacity(visible.len());
        let mut desc = Vec::with_capacity(visible.len() * spec.descriptor_dim);
        for &k in &order {
            let (p, px) = visible[k];
            let pos = px + Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng));
            kps.push(Keypoint {
                x: pos.x,
                y: pos.y,
                scale: 1.0 + 3.0 * rng.gen::<f64>(),
                orientation: rng.gen::<f64>() * TAU,
                score: rng.gen::<f64>(),
            });
            let d = if corrupt[k] {
                unit_vector(&mut rng, spec.descriptor_dim)
            } else {
                let n = DVector::from_fn(spec.descriptor_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let v = &base[p] + n * spec.descriptor_noise;
                v.try_normalize(1e-12).unwrap_or_else(|| base[p].clone())
            };
            desc.extend(d.iter().map(|&v| v as f32));
        }
        for &(p, px) in &visible {
            observations.push(Observation { point_id: p as u64, image_id: id.clone(), xy: px });
        }
        let keypoints = KeypointList::new(kps).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        let descriptors = DescriptorSet::float(keypoints.len(), spec.descriptor_dim, desc)
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        let depth = spec.render_depth.then_some(zbuf);
        images.push(ImageData { id, camera: cam, keypoints, descriptors, depth });
    }
    if !any_visible {
        return Err(SynthError::NoVisiblePoints);
    }
    observations.sort_by(|a, b| a.point_id.cmp(&b.point_id).then_with(|| a.image_id.cmp(&b.image_id)));
    Ok(SceneBundle::new(&spec.name, &spec.method, images, observations)?)
}

/// Exact two-view geometry of a pair of cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGeometry {
    pub f: FundamentalMatrix,
    pub pose: RelativePose,
    pub covis: Option<CoVisibility>,
}

/// `F = Kj^-T [t]x R Ki^-1` from the true cameras. Cameras sharing a centre
/// have no epipolar geometry and are reported as a pure rotation pair.
pub fn true_pair_geometry(cam_i: &CameraModel, cam_j: &CameraModel) -> Result<PairGeometry, SynthError> {
    let (r, t) = relative_pose_between(cam_i, cam_j);
    if t.norm() < 1e-9 {
        return Err(SynthError::PureRotationPair);
    }
    let ki_inv = cam_i.intrinsics().try_inverse().ok_or(crate::geometry::GeometryError::InvalidCalibration)?;
    let kj_inv = cam_j.intrinsics().try_inverse().ok_or(crate::geometry::GeometryError::InvalidCalibration)?;
    let f = FundamentalMatrix::new(kj_inv.transpose() * skew(&t) * r * ki_inv)?;
    Ok(PairGeometry { f, pose: RelativePose::new(r, t)?, covis: None })
}
