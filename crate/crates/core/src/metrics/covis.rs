use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Pair co-visibility in [0, 1]: the smaller of the two directed visibilities.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoVisibility(pub f64);

impl CoVisibility {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Bounding-box area of `observations` over the image area, clamped to [0, 1].
pub fn directed_visibility(observations: &[Vector2<f64>], size: (u32, u32)) -> f64 {
    let Some(first) = observations.first() else { return 0.0 };
    let (mut lo, mut hi) = (*first, *first);
    for p in observations {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let area = (hi.x - lo.x) * (hi.y - lo.y);
    let image = size.0 as f64 * size.1 as f64;
    (area / image).clamp(0.0, 1.0)
}

/// `obs_i` and `obs_j` are the observations of the points the two images share.
pub fn covisibility(
    obs_i: &[Vector2<f64>],
    obs_j: &[Vector2<f64>],
    size_i: (u32, u32),
    size_j: (u32, u32),
) -> CoVisibility {
    CoVisibility(directed_visibility(obs_i, size_i).min(directed_visibility(obs_j, size_j)))
}
