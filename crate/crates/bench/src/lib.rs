//! Fixtures shared by the benchmarks.

use matchbench_core::geometry::Correspondence;
use matchbench_core::matching::DescriptorSet;
use matchbench_core::synthetic::{synthetic_pair, PairSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Correspondences of a synthetic pair with 1 px noise.
pub fn correspondences(count: usize, outlier_fraction: f64, planar_fraction: f64, seed: u64) -> Vec<Correspondence> {
    synthetic_pair(&PairSpec {
        correspondences: count,
        outlier_fraction,
        planar_fraction,
        noise: 1.0,
        seed,
        ..PairSpec::default()
    })
    .expect("valid pair spec")
    .correspondences
}

/// Noise-free inliers, for the minimal and linear solvers.
pub fn clean_correspondences(count: usize, seed: u64) -> Vec<Correspondence> {
    synthetic_pair(&PairSpec { correspondences: count, seed, ..PairSpec::default() })
        .expect("valid pair spec")
        .correspondences
}

pub fn float_descriptors(count: usize, dim: usize, seed: u64) -> DescriptorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..count * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    DescriptorSet::float(count, dim, data).expect("consistent sizes")
}

pub fn binary_descriptors(count: usize, bits: usize, seed: u64) -> DescriptorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..count * bits / 8).map(|_| rng.gen()).collect();
    DescriptorSet::binary(count, bits, data).expect("consistent sizes")
}
