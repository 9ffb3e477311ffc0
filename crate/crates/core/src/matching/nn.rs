use rayon::prelude::*;

use super::descriptors::{hamming, squared_l2, Rows};
use super::{DescriptorSet, Direction, FilterStep, Match, MatchError, MatchList};

pub(crate) fn check_compatible(a: &DescriptorSet, b: &DescriptorSet) -> Result<(), MatchError> {
    if a.kind() != b.kind() {
        return Err(MatchError::MetricMismatch);
    }
    if a.dim() != b.dim() {
        return Err(MatchError::DimMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Nearest and second-nearest target for one query; ties go to the lower index.
pub(crate) fn two_nearest(queries: &DescriptorSet, q: usize, targets: &DescriptorSet) -> ((usize, f64), (usize, f64)) {
    let n = queries.row_len();
    // Float rows are ranked by squared distance; the square root is monotone.
    let (best, second) = match (queries.rows(), targets.rows()) {
        (Rows::Float(x), Rows::Float(y)) => {
            let (r, s) = scan(y.chunks_exact(n), |row| squared_l2(&x[q * n..(q + 1) * n], row));
            ((r.0, r.1.sqrt()), (s.0, s.1.sqrt()))
        }
        (Rows::Binary(x), Rows::Binary(y)) => scan(y.chunks_exact(n), |row| hamming(&x[q * n..(q + 1) * n], row)),
        _ => ((usize::MAX, f64::NAN), (usize::MAX, f64::NAN)),
    };
    (best, second)
}

fn scan<'a, T, I, F>(rows: I, dist: F) -> ((usize, f64), (usize, f64))
where
    I: Iterator<Item = &'a [T]>,
    T: 'a,
    F: Fn(&'a [T]) -> f64,
{
    let mut best = (usize::MAX, f64::INFINITY);
    let mut second = (usize::MAX, f64::INFINITY);
    for (t, row) in rows.enumerate() {
        let d = dist(row);
        if d < best.1 {
            second = best;
            best = (t, d);
        } else if d < second.1 {
            second = (t, d);
        }
    }
    (best, second)
}

fn directed(queries: &DescriptorSet, targets: &DescriptorSet) -> Result<Vec<(usize, usize, f64, f64)>, MatchError> {
    check_compatible(queries, targets)?;
    if targets.count() < 2 {
        return Err(MatchError::TooFewTargets(targets.count()));
    }
    Ok((0..queries.count())
        .into_par_iter()
        .map(|q| {
            let (best, second) = two_nearest(queries, q, targets);
            (q, best.0, best.1, second.1)
        })
        .collect())
}

/// Exhaustive nearest-neighbour matching from image `i` into image `j`.
pub fn nn_match(d_i: &DescriptorSet, d_j: &DescriptorSet) -> Result<MatchList, MatchError> {
    let entries = directed(d_i, d_j)?
        .into_iter()
        .map(|(q, t, d, s)| Match { index_i: q, index_j: t, distance: d, second_distance: Some(s) })
        .collect();
    Ok(MatchList::new(entries, Direction::IToJ, vec![FilterStep::NearestNeighbor(Direction::IToJ)]))
}

/// Exhaustive nearest-neighbour matching from image `j` back into image `i`.
///
/// Entries are ordered by their `j` index.
pub fn nn_match_reverse(d_i: &DescriptorSet, d_j: &DescriptorSet) -> Result<MatchList, MatchError> {
    let entries = directed(d_j, d_i)?
        .into_iter()
        .map(|(q, t, d, s)| Match { index_i: t, index_j: q, distance: d, second_distance: Some(s) })
        .collect();
    Ok(MatchList::new(entries, Direction::JToI, vec![FilterStep::NearestNeighbor(Direction::JToI)]))
}
