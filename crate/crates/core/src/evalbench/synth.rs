//! Synthetic multi-body rigid scenes with exact ground-truth flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use crate::error::{Error, Result};
use crate::geometry::{warp, FlowField, Point, PointCloud, RigidTransform, Vec3};
use crate::supervoxel::SupervoxelPartition;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSceneSpec {
    pub body_count: usize,
    pub points_per_body: usize,
    /// Upper bound of each body's rotation angle, degrees.
    pub rotation_max: f64,
    /// Lower bound of each body's rotation angle, degrees.
    pub rotation_min: f64,
    pub translation_max: f64,
    /// Per-axis standard deviation of each Gaussian body, meters.
    pub cluster_radius: f64,
    /// Noise added to the ground truth to form `initial_flow`.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Overrides the random translation of every body.
    pub fixed_translation: Option<Vec3>,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        Self {
            body_count: 5,
            points_per_body: 200,
            rotation_max: 20.0,
            rotation_min: 0.0,
            translation_max: 1.0,
            cluster_radius: 0.5,
            noise_sigma: 0.05,
            seed: 0,
            fixed_translation: None,
        }
    }
}

impl SyntheticSceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.body_count == 0 || self.points_per_body == 0 {
            return Err(Error::InvalidArgument(
                "body_count and points_per_body must be positive".into(),
            ));
        }
        let mags = [
            self.rotation_max,
            self.rotation_min,
            self.translation_max,
            self.cluster_radius,
            self.noise_sigma,
        ];
        if mags.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidArgument(
                "scene magnitudes must be finite and nonnegative".into(),
            ));
        }
        if self.rotation_min > self.rotation_max {
            return Err(Error::InvalidArgument("rotation_min exceeds rotation_max".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub cloud_t: PointCloud,
    pub cloud_t1: PointCloud,
    pub gt_flow: FlowField,
    /// Ground truth corrupted by `noise_sigma`.
    pub initial_flow: FlowField,
    pub body_labels: SupervoxelPartition,
    /// World-frame motion of each body.
    pub transforms: Vec<RigidTransform>,
}

pub fn generate_scene(spec: &SyntheticSceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let spread = Normal::new(0.0, spec.cluster_radius.max(f64::MIN_POSITIVE)).expect("positive std");
    let side = (spec.body_count as f64).cbrt().ceil() as usize;
    let spacing = 8.0 * spec.cluster_radius.max(0.1) + 2.0 * spec.translation_max;

    let mut points = Vec::with_capacity(spec.body_count * spec.points_per_body);
    let mut labels = Vec::with_capacity(points.capacity());
    let mut flows = Vec::with_capacity(points.capacity());
    let mut transforms = Vec::with_capacity(spec.body_count);
    for b in 0..spec.body_count {
        let cell = Vec3::new(
            (b % side) as f64,
            ((b / side) % side) as f64,
            (b / (side * side)) as f64,
        );
        let center = cell * spacing;
        let body: Vec<Point> = (0..spec.points_per_body)
            .map(|_| {
                let offset = Vec3::new(
                    spread.sample(&mut rng),
                    spread.sample(&mut rng),
                    spread.sample(&mut rng),
                );
                Point::from(center + offset)
            })
            .collect();
        let centroid = body.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords) / body.len() as f64;

        let axis = Vec3::from(UnitSphere.sample(&mut rng));
        let angle = if spec.rotation_max > spec.rotation_min {
            rng.random_range(spec.rotation_min..spec.rotation_max)
        } else {
            spec.rotation_max
        }
        .to_radians();
        let translation = match spec.fixed_translation {
            Some(t) => t,
            None => {
                let dir = Vec3::from(UnitSphere.sample(&mut rng));
                let mag = if spec.translation_max > 0.0 {
                    rng.random_range(0.0..spec.translation_max)
                } else {
                    0.0
                };
                dir * mag
            }
        };
        // p -> R (p - c) + c + t, written as a world-frame transform.
        let local = RigidTransform::from_axis_angle(&axis, angle, Vec3::zeros());
        let world = RigidTransform::new(local.rotation, centroid + translation - local.rotation * centroid);
        for p in &body {
            let r = p.coords - centroid;
            flows.push(local.rotation * r + centroid + translation - p.coords);
            labels.push(b);
        }
        points.extend(body);
        transforms.push(world);
    }

    let cloud_t = PointCloud::new(points)?;
    let gt_flow = FlowField::new(flows)?;
    let cloud_t1 = warp(&cloud_t, &gt_flow)?;
    let initial_flow = perturb_flow(&gt_flow, spec.noise_sigma, spec.seed.wrapping_add(0x9e37_79b9))?;
    Ok(SyntheticScene {
        cloud_t,
        cloud_t1,
        gt_flow,
        initial_flow,
        body_labels: SupervoxelPartition::from_labels(&labels)?,
        transforms,
    })
}

/// Adds isotropic Gaussian noise with standard deviation `sigma` per axis.
pub fn perturb_flow(flow: &FlowField, sigma: f64, seed: u64) -> Result<FlowField> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument("sigma must be finite and nonnegative".into()));
    }
    if sigma == 0.0 {
        return Ok(flow.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("positive std");
    let vectors = flow
        .vectors()
        .iter()
        .map(|v| v + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
        .collect();
    FlowField::new(vectors)
}
