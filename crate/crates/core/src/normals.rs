//! PCA surface normals over k-nearest neighborhoods.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{NormalField, PointCloud, Vec3};
use crate::knn::KdTree;
use crate::linalg::symmetric_eigen3;

pub const DEFAULT_NORMAL_K: usize = 16;

/// Covariance traces at or below this are treated as coincident points.
const DEGENERATE_TRACE: f64 = 1e-24;

/// Flips `n` so that its largest-magnitude component is positive.
pub fn canonical_sign(n: Vec3) -> Vec3 {
    let mut best = 0;
    for a in 1..3 {
        if n[a].abs() > n[best].abs() {
            best = a;
        }
    }
    if n[best] < 0.0 {
        -n
    } else {
        n
    }
}

/// Covariance (scatter divided by count) of the given points about their mean.
pub fn neighborhood_covariance(points: &[Vec3]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov / n
}

pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<NormalField> {
    if cloud.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "normal estimation needs at least 3 points, got {}",
            cloud.len()
        )));
    }
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "normal estimation needs k >= 3, got {k}"
        )));
    }
    let tree = KdTree::build(cloud.points())?;
    let (normals, valid): (Vec<Vec3>, Vec<bool>) = cloud
        .points()
        .par_iter()
        .map(|p| {
            let hood: Vec<Vec3> = tree.nearest(p, k).into_iter().map(|j| cloud.point(j).coords).collect();
            let cov = neighborhood_covariance(&hood);
            if cov.trace() <= DEGENERATE_TRACE {
                return (Vec3::z(), false);
            }
            let (_, vecs) = symmetric_eigen3(&cov);
            let n: Vec3 = vecs.column(0).into();
            (canonical_sign(n.normalize()), true)
        })
        .unzip();
    Ok(NormalField { normals, valid })
}
