use std::sync::Arc;

use crate::error::{Error, Result};
use crate::features::{FeatureBlock, FeatureSpec, FeatureVector};
use crate::shapes::{MeanShape, NormalizedShape, Point};

/// Number of unordered pairs among `n` points.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// The `k`-th pair of [`pairs`], without enumerating.
pub fn pair_at(n: usize, k: usize) -> Option<(usize, usize)> {
    let mut start = 0;
    for i in 0..n.saturating_sub(1) {
        let row = n - 1 - i;
        if k < start + row {
            return Some((i, i + 1 + (k - start)));
        }
        start += row;
    }
    None
}

pub(crate) fn distance_values(points: &[Point]) -> Vec<f64> {
    pairs(points.len())
        .map(|(i, j)| points[i].distance(points[j]))
        .collect()
}

pub(crate) fn axis_values(points: &[Point], mean: &[Point]) -> Vec<f64> {
    points
        .iter()
        .zip(mean)
        .flat_map(|(p, m)| [p.x - m.x, p.y - m.y])
        .collect()
}

/// Euclidean distance for every landmark pair, in `spec` pair order.
pub fn point_distances(shape: &NormalizedShape, spec: &Arc<FeatureSpec>) -> Result<FeatureVector> {
    match spec.blocks() {
        [FeatureBlock::PointDistances { points }] if *points == shape.point_count() => {
            FeatureVector::new(distance_values(shape.points()), Arc::clone(spec))
        }
        [FeatureBlock::PointDistances { points }] => Err(Error::DimensionMismatch {
            expected: *points,
            actual: shape.point_count(),
        }),
        _ => Err(Error::InvalidConfig(
            "point_distances needs a spec with a single distance block".into(),
        )),
    }
}

/// Interleaved `(x_i - mean_x_i, y_i - mean_y_i)` offsets from the mean shape.
pub fn axis_distances(shape: &NormalizedShape, mean: &MeanShape) -> Result<FeatureVector> {
    if shape.point_count() != mean.point_count() {
        return Err(Error::DimensionMismatch {
            expected: mean.point_count(),
            actual: shape.point_count(),
        });
    }
    let spec = Arc::new(FeatureSpec::axis_distances(shape.point_count()));
    FeatureVector::new(axis_values(shape.points(), mean.points()), spec)
}
