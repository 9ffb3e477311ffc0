use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use rayon::prelude::*;

use super::formats::*;
use super::DatasetError;
use crate::geometry::{CameraModel, DepthMap};
use crate::matching::{DescriptorSet, KeypointList};
use crate::metrics::{covisibility, CoVisibility};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageData {
    pub id: String,
    pub camera: CameraModel,
    pub keypoints: KeypointList,
    pub descriptors: DescriptorSet,
    pub depth: Option<DepthMap>,
}

/// Unordered image pair, `a < b` as indices into [`SceneBundle::images`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEntry {
    pub a: usize,
    pub b: usize,
    pub covis: CoVisibility,
}

/// A scene with every input the evaluation needs. Images are sorted by id
/// and `pairs` covers every unordered pair exactly once, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub name: String,
    /// Feature method whose keypoints and descriptors are loaded.
    pub method: String,
    pub images: Vec<ImageData>,
    pub observations: Vec<Observation>,
    pub pairs: Vec<PairEntry>,
}

fn invariant(files: Vec<PathBuf>, message: impl Into<String>) -> DatasetError {
    DatasetError::Invariant { files, message: message.into() }
}

fn check_id(id: &str) -> Result<(), DatasetError> {
    if id.is_empty() || id.starts_with('#') || id.chars().any(char::is_whitespace) || id.contains('/') {
        return Err(invariant(vec![], format!("invalid image id {id:?}")));
    }
    Ok(())
}

impl SceneBundle {
    /// Validates the parts and computes co-visibilities from the observations.
    pub fn new(
        name: impl Into<String>,
        method: impl Into<String>,
        mut images: Vec<ImageData>,
        observations: Vec<Observation>,
    ) -> Result<Self, DatasetError> {
        images.sort_by(|x, y| x.id.cmp(&y.id));
        let pairs = compute_pairs(&images, &observations);
        let scene = Self { name: name.into(), method: method.into(), images, observations, pairs };
        scene.validate(Path::new(""))?;
        Ok(scene)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.images.binary_search_by(|im| im.id.as_str().cmp(id)).ok()
    }

    pub fn image(&self, id: &str) -> Option<&ImageData> {
        self.index_of(id).map(|k| &self.images[k])
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&PairEntry> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.pairs.get(pair_index(self.images.len(), a, b)?)
    }

    /// Sets of 3D point ids seen by each image.
    pub fn points_per_image(&self) -> Vec<BTreeSet<u64>> {
        let mut out = vec![BTreeSet::new(); self.images.len()];
        for o in &self.observations {
            if let Some(k) = self.index_of(&o.image_id) {
                out[k].insert(o.point_id);
            }
        }
        out
    }

    fn validate(&self, dir: &Path) -> Result<(), DatasetError> {
        let mut seen = BTreeSet::new();
        for im in &self.images {
            check_id(&im.id)?;
            if !seen.insert(im.id.as_str()) {
                return Err(invariant(vec![dir.join("calib")], format!("duplicate image id {}", im.id)));
            }
            if im.keypoints.len() != im.descriptors.count() {
                return Err(invariant(
                    vec![
                        dir.join("keypoints").join(&self.method).join(format!("{}.txt", im.id)),
                        dir.join("descriptors").join(&self.method).join(format!("{}.desc", im.id)),
                    ],
                    format!(
                        "{} keypoints but {} descriptors for image {}",
                        im.keypoints.len(),
                        im.descriptors.count(),
                        im.id
                    ),
                ));
            }
            if let Some(d) = &im.depth {
                if d.width() != im.camera.width() || d.height() != im.camera.height() {
                    return Err(invariant(
                        vec![dir.join("depth").join(format!("{}.dpth", im.id)), dir.join("calib").join(format!("{}.txt", im.id))],
                        format!(
                            "depth map is {}x{} but image {} is {}x{}",
                            d.width(),
                            d.height(),
                            im.id,
                            im.camera.width(),
                            im.camera.height()
                        ),
                    ));
                }
            }
        }
        for (k, o) in self.observations.iter().enumerate() {
            if self.index_of(&o.image_id).is_none() {
                return Err(invariant(
                    vec![dir.join("observations.txt")],
                    format!("record {} references unknown image {}", k + 1, o.image_id),
                ));
            }
        }
        let n = self.images.len();
        let complete = self.pairs.len() == n * n.saturating_sub(1) / 2
            && self.pairs.iter().enumerate().all(|(k, p)| pair_index(n, p.a, p.b) == Some(k));
        if !complete {
            return Err(invariant(vec![dir.join("pairs.txt")], "pair list does not cover every image pair exactly once"));
        }
        Ok(())
    }
}

/// Position of pair `(a, b)`, `a < b`, in lexicographic order.
fn pair_index(n: usize, a: usize, b: usize) -> Option<usize> {
    if a >= b || b >= n {
        return None;
    }
    Some(a * (2 * n - a - 1) / 2 + (b - a - 1))
}

/// Co-visibility of every unordered pair from the shared observations.
pub fn compute_pairs(images: &[ImageData], observations: &[Observation]) -> Vec<PairEntry> {
    let index: HashMap<&str, usize> = images.iter().enumerate().map(|(k, im)| (im.id.as_str(), k)).collect();
    let mut per_image: Vec<HashMap<u64, Vector2<f64>>> = vec![HashMap::new(); images.len()];
    for o in observations {
        if let Some(&k) = index.get(o.image_id.as_str()) {
            per_image[k].entry(o.point_id).or_insert(o.xy);
        }
    }
    let size = |k: usize| (images[k].camera.width(), images[k].camera.height());
    let n = images.len();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let per_image = &per_image;
            (a + 1..n).map(move |b| {
                let (small, large, swapped) = if per_image[a].len() <= per_image[b].len() {
                    (&per_image[a], &per_image[b], false)
                } else {
                    (&per_image[b], &per_image[a], true)
                };
                // Iterate in point-id order so the result never depends on hash order.
                let mut shared: Vec<(u64, Vector2<f64>, Vector2<f64>)> = small
                    .iter()
                    .filter_map(|(id, p)| large.get(id).map(|q| (*id, *p, *q)))
                    .collect();
                shared.sort_by_key(|s| s.0);
                let (mut oa, mut ob) = (Vec::new(), Vec::new());
                for (_, p, q) in shared {
                    let (pa, pb) = if swapped { (q, p) } else { (p, q) };
                    oa.push(pa);
                    ob.push(pb);
                }
                PairEntry { a, b, covis: covisibility(&oa, &ob, size(a), size(b)) }
            })
        })
        .collect()
}

/// Pairs with co-visibility at least `min_covis`, in lexicographic order.
pub fn enumerate_pairs(scene: &SceneBundle, min_covis: f64) -> Vec<PairEntry> {
    scene.pairs.iter().filter(|p| p.covis.value() >= min_covis).copied().collect()
}

fn read(path: &Path) -> Result<Vec<u8>, DatasetError> {
    fs::read(path).map_err(|e| DatasetError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}

fn image_ids(scene_dir: &Path) -> Result<Vec<String>, DatasetError> {
    let calib = scene_dir.join("calib");
    let entries = fs::read_dir(&calib).map_err(|e| DatasetError::io(&calib, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| DatasetError::io(&calib, e))?.path();
        if path.extension().is_some_and(|x| x == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

/// Every required file of a scene that does not exist.
pub fn missing_scene_files(scene_dir: &Path, method: &str) -> Vec<PathBuf> {
    let mut missing = Vec::new();
    for required in [scene_dir.join("calib"), scene_dir.join("observations.txt")] {
        if !required.exists() {
            missing.push(required);
        }
    }
    if let Ok(ids) = image_ids(scene_dir) {
        for id in ids {
            for p in [
                scene_dir.join("keypoints").join(method).join(format!("{id}.txt")),
                scene_dir.join("descriptors").join(method).join(format!("{id}.desc")),
            ] {
                if !p.is_file() {
                    missing.push(p);
                }
            }
        }
    }
    missing
}

fn load_image(scene_dir: &Path, method: &str, id: &str) -> Result<ImageData, DatasetError> {
    let calib = scene_dir.join("calib").join(format!("{id}.txt"));
    let kp = scene_dir.join("keypoints").join(method).join(format!("{id}.txt"));
    let desc = scene_dir.join("descriptors").join(method).join(format!("{id}.desc"));
    let depth = scene_dir.join("depth").join(format!("{id}.dpth"));
    let camera = parse_calibration(&read(&calib)?).map_err(|e| DatasetError::format(&calib, e))?;
    let keypoints = parse_keypoints(&read(&kp)?).map_err(|e| DatasetError::format(&kp, e))?;
    let descriptors = parse_descriptors(&read(&desc)?).map_err(|e| DatasetError::format(&desc, e))?;
    let depth = if depth.exists() {
        Some(parse_depth(&read(&depth)?).map_err(|e| DatasetError::format(&depth, e))?)
    } else {
        None
    };
    Ok(ImageData { id: id.to_string(), camera, keypoints, descriptors, depth })
}

/// Ground-truth cameras of a scene, keyed by image id. Reads only `calib/`.
pub fn load_cameras(scene_dir: &Path) -> Result<BTreeMap<String, CameraModel>, DatasetError> {
    let mut out = BTreeMap::new();
    for id in image_ids(scene_dir)? {
        let calib = scene_dir.join("calib").join(format!("{id}.txt"));
        let camera = parse_calibration(&read(&calib)?).map_err(|e| DatasetError::format(&calib, e))?;
        out.insert(id, camera);
    }
    Ok(out)
}

/// Loads `scene_dir` with the features of `method`, validating every invariant.
pub fn load_scene(scene_dir: &Path, method: &str) -> Result<SceneBundle, DatasetError> {
    let missing = missing_scene_files(scene_dir, method);
    if !missing.is_empty() {
        return Err(DatasetError::Missing(missing));
    }
    let name = scene_dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let ids = image_ids(scene_dir)?;
    let images: Vec<ImageData> = ids
        .par_iter()
        .map(|id| load_image(scene_dir, method, id))
        .collect::<Result<_, _>>()?;
    let obs_path = scene_dir.join("observations.txt");
    let observations = parse_observations(&read(&obs_path)?).map_err(|e| DatasetError::format(&obs_path, e))?;

    let pairs_path = scene_dir.join("pairs.txt");
    let pairs = if pairs_path.exists() {
        let rows = parse_pairs(&read(&pairs_path)?).map_err(|e| DatasetError::format(&pairs_path, e))?;
        let index: HashMap<&str, usize> = images.iter().enumerate().map(|(k, im)| (im.id.as_str(), k)).collect();
        let mut pairs = Vec::with_capacity(rows.len());
        for (k, (a, b, v)) in rows.iter().enumerate() {
            match (index.get(a.as_str()), index.get(b.as_str())) {
                (Some(&a), Some(&b)) => pairs.push(PairEntry { a, b, covis: CoVisibility(*v) }),
                _ => {
                    return Err(DatasetError::format(
                        &pairs_path,
                        ParseError { location: Location::Line(k + 1), message: format!("unknown image in pair {a} {b}") },
                    ))
                }
            }
        }
        pairs
    } else {
        compute_pairs(&images, &observations)
    };
    let scene = SceneBundle { name, method: method.to_string(), images, observations, pairs };
    scene.validate(scene_dir)?;
    Ok(scene)
}

/// Writes the scene into `scene_dir`, including the co-visibility cache.
pub fn save_scene(scene: &SceneBundle, scene_dir: &Path) -> Result<(), DatasetError> {
    let dirs = [
        scene_dir.join("calib"),
        scene_dir.join("keypoints").join(&scene.method),
        scene_dir.join("descriptors").join(&scene.method),
        scene_dir.join("depth"),
    ];
    for d in &dirs {
        fs::create_dir_all(d).map_err(|e| DatasetError::io(d, e))?;
    }
    scene.images.par_iter().try_for_each(|im| {
        write(&dirs[0].join(format!("{}.txt", im.id)), format_calibration(&im.camera).as_bytes())?;
        write(&dirs[1].join(format!("{}.txt", im.id)), format_keypoints(&im.keypoints).as_bytes())?;
        write(&dirs[2].join(format!("{}.desc", im.id)), &format_descriptors(&im.descriptors))?;
        if let Some(d) = &im.depth {
            write(&dirs[3].join(format!("{}.dpth", im.id)), &format_depth(d))?;
        }
        Ok::<_, DatasetError>(())
    })?;
    write(&scene_dir.join("observations.txt"), format_observations(&scene.observations).as_bytes())?;
    let rows: Vec<(String, String, f64)> = scene
        .pairs
        .iter()
        .map(|p| (scene.images[p.a].id.clone(), scene.images[p.b].id.clone(), p.covis.value()))
        .collect();
    write(&scene_dir.join("pairs.txt"), format_pairs(&rows).as_bytes())
}
