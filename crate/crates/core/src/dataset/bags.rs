use std::collections::{BTreeSet, HashMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::formats::{Location, ParseError};
use super::{DatasetError, SceneBundle};

/// Rejection-sampling attempts allowed per bag.
pub const MAX_BAG_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct BagSpec {
    pub sizes: Vec<usize>,
    pub counts: Vec<usize>,
    pub seed: u64,
}

impl Default for BagSpec {
    fn default() -> Self {
        Self { sizes: vec![5, 10, 25], counts: vec![100, 50, 25], seed: 0 }
    }
}

impl BagSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.sizes.len() != self.counts.len() {
            return Err(DatasetError::InvalidBagSpec("sizes and counts differ in length".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DatasetError::InvalidBagSpec("sizes must be strictly ascending".into()));
        }
        if self.sizes.iter().any(|&s| s < 2) || self.counts.iter().any(|&c| c == 0) {
            return Err(DatasetError::InvalidBagSpec("sizes must be at least 2 and counts positive".into()));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// A subset of scene images evaluated as one multiview unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bag {
    pub size: usize,
    /// Position among the bags of the same size.
    pub index: usize,
    /// Image ids in ascending order.
    pub images: Vec<String>,
}

impl Bag {
    /// File stem of the matching reconstruction, `bag-<size>-<index>`.
    pub fn name(&self) -> String {
        format!("bag-{}-{}", self.size, self.index)
    }
}

/// Every member must see at least `min_points` points that another member also sees.
fn acceptable(members: &[usize], points: &[BTreeSet<u64>], min_points: usize) -> bool {
    let mut seen: HashMap<u64, u32> = HashMap::new();
    for &m in members {
        for &p in &points[m] {
            *seen.entry(p).or_default() += 1;
        }
    }
    members
        .iter()
        .all(|&m| points[m].iter().filter(|p| seen[p] >= 2).count() >= min_points)
}

/// Seeded rejection sampling of bags: each draw is a uniform subset of the
/// requested size, accepted when every member observes at least `min_points`
/// 3D points shared with another member.
pub fn sample_bags(scene: &SceneBundle, spec: &BagSpec, min_points: usize) -> Result<Vec<Bag>, DatasetError> {
    spec.validate()?;
    let n = scene.images.len();
    if let Some(&size) = spec.sizes.iter().find(|&&s| s > n) {
        return Err(DatasetError::BagTooLarge { size, images: n });
    }
    let points = scene.points_per_image();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut bags = Vec::with_capacity(spec.total());
    for (&size, &count) in spec.sizes.iter().zip(&spec.counts) {
        for idx in 0..count {
            let mut found = None;
            for _ in 0..MAX_BAG_ATTEMPTS {
                let mut members = index::sample(&mut rng, n, size).into_vec();
                members.sort_unstable();
                if acceptable(&members, &points, min_points) {
                    found = Some(members);
                    break;
                }
            }
            let members = found.ok_or(DatasetError::BagSampling { size, attempts: MAX_BAG_ATTEMPTS })?;
            bags.push(Bag { size, index: idx, images: members.iter().map(|&k| scene.images[k].id.clone()).collect() });
        }
    }
    Ok(bags)
}

/// One bag per line: `size index id id ...`.
pub fn format_bags(bags: &[Bag]) -> String {
    let mut s = String::new();
    for b in bags {
        s += &format!("{} {} {}\n", b.size, b.index, b.images.join(" "));
    }
    s
}

pub fn parse_bags(bytes: &[u8]) -> Result<Vec<Bag>, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseError { location: Location::Byte(e.valid_up_to()), message: "invalid UTF-8".into() })?;
    let mut out = Vec::new();
    for (k, line) in text.split('\n').enumerate() {
        let toks: Vec<&str> = line.split_ascii_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let err = |m: &str| ParseError { location: Location::Line(k + 1), message: m.to_string() };
        if toks.len() < 2 {
            return Err(err("expected \"size index id...\""));
        }
        let size: usize = toks[0].parse().map_err(|_| err("invalid bag size"))?;
        let index: usize = toks[1].parse().map_err(|_| err("invalid bag index"))?;
        let images: Vec<String> = toks[2..].iter().map(|s| s.to_string()).collect();
        if images.len() != size {
            return Err(err(&format!("bag of size {size} lists {} images", images.len())));
        }
        out.push(Bag { size, index, images });
    }
    Ok(out)
}
