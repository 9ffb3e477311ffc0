/// Number of samples needed to draw one all-inlier sample with the requested confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationBound {
    Finite(u64),
    /// No useful bound (zero inlier ratio); the caller falls back to its cap.
    Unbounded,
}

impl IterationBound {
    pub fn capped(self, cap: u64) -> u64 {
        match self {
            IterationBound::Finite(k) => k.min(cap),
            IterationBound::Unbounded => cap,
        }
    }
}

/// `ceil(log(1 - confidence) / log(1 - w^m))`.
pub fn adaptive_iteration_bound(inlier_ratio: f64, sample_size: u32, confidence: f64) -> IterationBound {
    if !(inlier_ratio > 0.0) {
        return IterationBound::Unbounded;
    }
    if inlier_ratio >= 1.0 {
        return IterationBound::Finite(1);
    }
    let p = inlier_ratio.powi(sample_size as i32);
    let denom = (-p).ln_1p();
    if denom == 0.0 {
        return IterationBound::Unbounded;
    }
    let k = ((-confidence).ln_1p() / denom).ceil();
    if !(k < u64::MAX as f64) {
        return IterationBound::Unbounded;
    }
    IterationBound::Finite((k as u64).max(1))
}
