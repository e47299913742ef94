use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{FlowField, PointCloud, Vec3};
use crate::knn::KdTree;

/// Untrained initial flow: a softmax-weighted average of offsets to the `k`
/// nearest points of the next frame, with logits `-|p_j - p_i|^2 / tau`.
pub fn baseline_initial_flow(cloud_t: &PointCloud, cloud_t1: &PointCloud, k: usize, tau: f64) -> Result<FlowField> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument("tau must be > 0".into()));
    }
    let tree = KdTree::build(cloud_t1.points())?;
    let vectors = cloud_t
        .points()
        .par_iter()
        .map(|p| {
            let nbrs = tree.nearest(p, k);
            let offsets: Vec<Vec3> = nbrs.iter().map(|&j| cloud_t1.point(j) - p).collect();
            let logits: Vec<f64> = offsets.iter().map(|o| -o.norm_squared() / tau).collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            offsets
                .iter()
                .zip(&weights)
                .fold(Vec3::zeros(), |acc, (o, w)| acc + o * (w / total))
        })
        .collect();
    FlowField::new(vectors)
}
