//! Over-segmentation of a cloud into compact regions of a target size.
//!
//! Seeds come from farthest-point sampling; points are then clustered with
//! Lloyd iterations under a distance that mixes Euclidean position and
//! normal alignment:
//!
//! `d(p, s) = position_weight * |p - p_s| + normal_weight * (1 - |n . n_s|)`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{NormalField, Point, PointCloud, Vec3};

/// Disjoint region labeling covering every point of a cloud.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupervoxelPartition {
    pub labels: Vec<usize>,
    pub regions: Vec<Vec<usize>>,
}

impl SupervoxelPartition {
    /// Builds a partition from raw labels. Labels are compacted to
    /// `0..R` in order of first appearance, so gaps are allowed on input.
    pub fn from_labels(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut remap = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut regions: Vec<Vec<usize>> = Vec::new();
        for (i, &l) in raw.iter().enumerate() {
            let id = *remap.entry(l).or_insert_with(|| {
                regions.push(Vec::new());
                regions.len() - 1
            });
            labels.push(id);
            regions[id].push(i);
        }
        Ok(Self { labels, regions })
    }

    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            regions: vec![(0..n).collect()],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn check_aligned(&self, n: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: self.labels.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmenterConfig {
    pub desired_point_count: usize,
    pub position_weight: f64,
    pub normal_weight: f64,
    pub lloyd_iterations: usize,
    pub seed: u64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            desired_point_count: 140,
            position_weight: 1.0,
            normal_weight: 0.1,
            lloyd_iterations: 10,
            seed: 0,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.desired_point_count == 0 {
            return Err(Error::InvalidArgument("desired_point_count must be >= 1".into()));
        }
        if self.lloyd_iterations == 0 {
            return Err(Error::InvalidArgument("lloyd_iterations must be >= 1".into()));
        }
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(self.position_weight) || !ok(self.normal_weight) {
            return Err(Error::InvalidArgument(
                "segmenter weights must be finite and nonnegative".into(),
            ));
        }
        if self.position_weight == 0.0 && self.normal_weight == 0.0 {
            return Err(Error::InvalidArgument(
                "at least one segmenter weight must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of regions produced for a cloud of `n` points.
    pub fn region_count(&self, n: usize) -> usize {
        ((n as f64 / self.desired_point_count as f64).round() as usize).max(1)
    }
}

#[derive(Clone, Copy)]
struct Center {
    position: Vec3,
    normal: Vec3,
}

impl Center {
    fn distance(&self, cfg: &SegmenterConfig, p: &Point, n: &Vec3) -> f64 {
        cfg.position_weight * (p.coords - self.position).norm() + cfg.normal_weight * (1.0 - n.dot(&self.normal).abs())
    }
}

fn farthest_point_seeds(points: &[Point], count: usize, first: usize) -> Vec<usize> {
    let mut seeds = vec![first];
    let mut nearest: Vec<f64> = points.iter().map(|p| (p - points[first]).norm_squared()).collect();
    while seeds.len() < count {
        let (next, _) = nearest.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &d)| if d > best.1 { (i, d) } else { best },
        );
        seeds.push(next);
        let q = points[next];
        nearest
            .par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(d, p)| *d = d.min((p - q).norm_squared()));
    }
    seeds
}

/// Mean normal with each member flipped into the hemisphere of `reference`.
fn aligned_mean_normal(members: &[usize], normals: &[Vec3], reference: &Vec3) -> Vec3 {
    let sum = members.iter().fold(Vec3::zeros(), |acc, &i| {
        let n = normals[i];
        if n.dot(reference) < 0.0 {
            acc - n
        } else {
            acc + n
        }
    });
    let norm = sum.norm();
    if norm > 0.0 {
        sum / norm
    } else {
        *reference
    }
}

pub fn segment(cloud: &PointCloud, normals: &NormalField, config: &SegmenterConfig) -> Result<SupervoxelPartition> {
    config.validate()?;
    let n = cloud.len();
    if normals.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: normals.len(),
        });
    }
    let region_count = config.region_count(n);
    if region_count == 1 {
        return Ok(SupervoxelPartition::single(n));
    }
    let points = cloud.points();
    let nrm = &normals.normals;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let first = rng.random_range(0..n);
    let mut centers: Vec<Center> = farthest_point_seeds(points, region_count, first)
        .into_iter()
        .map(|i| Center {
            position: points[i].coords,
            normal: nrm[i],
        })
        .collect();

    let mut labels = vec![0usize; n];
    for _ in 0..config.lloyd_iterations {
        let assigned: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = (0, f64::INFINITY);
                for (r, c) in centers.iter().enumerate() {
                    let d = c.distance(config, &points[i], &nrm[i]);
                    if d < best.1 {
                        best = (r, d);
                    }
                }
                best
            })
            .collect();
        let mut cost: Vec<f64> = assigned.iter().map(|a| a.1).collect();
        for (l, a) in labels.iter_mut().zip(&assigned) {
            *l = a.0;
        }

        let mut members = vec![Vec::new(); region_count];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        // Empty clusters take over the point that is currently worst served.
        for r in 0..region_count {
            if !members[r].is_empty() {
                continue;
            }
            let (worst, _) =
                cost.iter().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, &d)| if d > best.1 { (i, d) } else { best },
                );
            let old = labels[worst];
            if members[old].len() <= 1 {
                continue;
            }
            members[old].retain(|&i| i != worst);
            members[r].push(worst);
            labels[worst] = r;
            cost[worst] = 0.0;
        }

        centers = members
            .par_iter()
            .zip(centers.par_iter())
            .map(|(m, prev)| {
                if m.is_empty() {
                    return *prev;
                }
                let position = m.iter().fold(Vec3::zeros(), |acc, &i| acc + points[i].coords) / m.len() as f64;
                Center {
                    position,
                    normal: aligned_mean_normal(m, nrm, &prev.normal),
                }
            })
            .collect();
    }

    SupervoxelPartition::from_labels(&labels)
}
