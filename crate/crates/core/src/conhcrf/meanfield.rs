//! Mean-field inference for the continuous high-order CRF.
//!
//! Each marginal `Q_i` is an isotropic Gaussian with mean `mu_i`. One step
//! recomputes every mean from the previous state only (Jacobi schedule):
//!
//! ```text
//! mu_hat_i     = g(p_i, M_V)                    rigid message from region V
//! mu_tilde_i^c = sum_{j in N(i)} K_ij^c mu_j    neighbor messages
//! sigma_tilde_i^c = sum_{j in N(i)} K_ij^c
//! mu_i    <- (z_i + 2 sum_c alpha_c mu_tilde_i^c + beta mu_hat_i)
//!            / (1 + 2 sum_c alpha_c sigma_tilde_i^c + beta)
//! sigma_i  = 1 / (2 (1 + 2 sum_c alpha_c sigma_tilde_i^c + beta))
//! ```
//!
//! By default the rigid motion is fitted once per region on all its current
//! means. With `exact_leave_one_out` it is refitted per point with that point
//! excluded, which is far slower and only useful for validation.

use std::time::Instant;

use rayon::prelude::*;

use super::energy::pairwise_kernel;
use super::{CrfConfig, KernelObservations, RegionalTerm};
use crate::error::{Error, Result};
use crate::geometry::{FlowField, Point, PointCloud, Vec3};
use crate::knn::{self_neighbors, NeighborGraph};
use crate::rigidfit::{kabsch_fit, Correspondences};
use crate::supervoxel::SupervoxelPartition;

/// Everything a mean-field step reads: positions, initial flow, the
/// neighbor graph with precomputed kernel weights, and the regions.
#[derive(Clone, Debug)]
pub struct CrfModel {
    pub positions: Vec<Point>,
    pub initial: Vec<Vec3>,
    pub neighbors: NeighborGraph,
    /// `affinity[i][s * C + c]` is `K^c` between `i` and its `s`-th neighbor.
    pub affinity: Vec<Vec<f64>>,
    pub partition: SupervoxelPartition,
    pub config: CrfConfig,
}

impl CrfModel {
    /// Builds the model with `N(i)` = the `knn_k` nearest other points of `i`.
    pub fn new(
        cloud: &PointCloud,
        initial_flow: &FlowField,
        partition: &SupervoxelPartition,
        observations: &KernelObservations,
        config: &CrfConfig,
    ) -> Result<Self> {
        let graph = self_neighbors(cloud, config.knn_k)?;
        Self::with_neighbors(cloud, initial_flow, partition, observations, config, graph)
    }

    pub fn with_neighbors(
        cloud: &PointCloud,
        initial_flow: &FlowField,
        partition: &SupervoxelPartition,
        observations: &KernelObservations,
        config: &CrfConfig,
        neighbors: NeighborGraph,
    ) -> Result<Self> {
        config.validate()?;
        let n = cloud.len();
        initial_flow.check_aligned(n)?;
        partition.check_aligned(n)?;
        if neighbors.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: neighbors.len(),
            });
        }
        if observations.channel_count() != config.kernels.len() {
            return Err(Error::DimensionMismatch {
                expected: config.kernels.len(),
                actual: observations.channel_count(),
            });
        }
        for ch in &observations.channels {
            if ch.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: ch.len(),
                });
            }
        }
        let kernels = &config.kernels;
        let affinity = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::with_capacity(neighbors.of(i).len() * kernels.len());
                for &j in neighbors.of(i) {
                    for (c, k) in kernels.iter().enumerate() {
                        let obs = &observations.channels[c];
                        row.push(pairwise_kernel(obs[i].as_slice(), obs[j].as_slice(), k.theta));
                    }
                }
                row
            })
            .collect();
        Ok(Self {
            positions: cloud.points().to_vec(),
            initial: initial_flow.vectors().to_vec(),
            neighbors,
            affinity,
            partition: partition.clone(),
            config: config.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `K_ij^c` for the `slot`-th neighbor of `i`.
    pub fn kernel(&self, i: usize, slot: usize, c: usize) -> f64 {
        self.affinity[i][slot * self.config.kernels.len() + c]
    }

    /// `1 + 2 sum_c alpha_c sum_j K_ij^c + beta`, the normalizer of point `i`.
    pub fn normalizer(&self, i: usize) -> f64 {
        let mut acc = 0.0;
        for (c, k) in self.config.kernels.iter().enumerate() {
            let sigma_tilde: f64 = (0..self.neighbors.of(i).len()).map(|s| self.kernel(i, s, c)).sum();
            acc += k.alpha * sigma_tilde;
        }
        1.0 + 2.0 * acc + self.config.beta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    pub mu: Vec<Vec3>,
    pub sigma: Vec<f64>,
    pub iteration: usize,
    /// Rank-deficient or empty rigid fits encountered in the last step.
    pub degenerate_fits: usize,
}

impl MeanFieldState {
    /// `mu_i <- z_i`; sigma starts at its unary-only value 1/2.
    pub fn initial(model: &CrfModel) -> Self {
        Self {
            mu: model.initial.clone(),
            sigma: vec![0.5; model.len()],
            iteration: 0,
            degenerate_fits: 0,
        }
    }
}

/// Average of a region's flow vectors.
pub fn naive_region_flow(region_flows: &[Vec3]) -> Result<Vec3> {
    if region_flows.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let sum = region_flows.iter().fold(Vec3::zeros(), |acc, v| acc + v);
    Ok(sum / region_flows.len() as f64)
}

/// High-order messages `mu_hat_i` for every point given current means, plus
/// the number of degenerate fits.
pub fn regional_messages(model: &CrfModel, mu: &[Vec3]) -> (Vec<Vec3>, usize) {
    let mut out = vec![Vec3::zeros(); model.len()];
    let cfg = &model.config;
    let per_region: Vec<(Vec<(usize, Vec3)>, usize)> = model
        .partition
        .regions
        .par_iter()
        .map(|members| match (cfg.regional_term, cfg.exact_leave_one_out) {
            (RegionalTerm::NaiveMean, _) => {
                let flows: Vec<Vec3> = members.iter().map(|&i| mu[i]).collect();
                let mean = naive_region_flow(&flows).expect("regions are nonempty");
                (members.iter().map(|&i| (i, mean)).collect(), 0)
            }
            (RegionalTerm::Rigid, false) => {
                let fit = fit_region(model, members, mu, None);
                let msgs = members.iter().map(|&i| (i, fit.flow_at(&model.positions[i]))).collect();
                (msgs, usize::from(fit.degenerate))
            }
            (RegionalTerm::Rigid, true) => {
                let mut degenerate = 0;
                let msgs = members
                    .iter()
                    .map(|&i| {
                        if members.len() == 1 {
                            degenerate += 1;
                            return (i, Vec3::zeros());
                        }
                        let fit = fit_region(model, members, mu, Some(i));
                        degenerate += usize::from(fit.degenerate);
                        (i, fit.flow_at(&model.positions[i]))
                    })
                    .collect();
                (msgs, degenerate)
            }
        })
        .collect();
    let mut degenerate = 0;
    for (msgs, d) in per_region {
        degenerate += d;
        for (i, m) in msgs {
            out[i] = m;
        }
    }
    (out, degenerate)
}

fn fit_region(
    model: &CrfModel,
    members: &[usize],
    mu: &[Vec3],
    exclude: Option<usize>,
) -> crate::geometry::RigidTransform {
    let kept: Vec<usize> = members.iter().copied().filter(|&j| Some(j) != exclude).collect();
    let source: Vec<Point> = kept.iter().map(|&j| model.positions[j]).collect();
    let flows: Vec<Vec3> = kept.iter().map(|&j| mu[j]).collect();
    let c = Correspondences::from_flow(source, &flows).expect("region has at least one point");
    kabsch_fit(&c)
}

/// Per point, `(sum_c alpha_c mu_tilde_i^c, sum_c alpha_c sigma_tilde_i^c)`.
fn pairwise_messages(model: &CrfModel, mu: &[Vec3]) -> Vec<(Vec3, f64)> {
    let kernels = &model.config.kernels;
    (0..model.len())
        .into_par_iter()
        .map(|i| {
            let nbrs = model.neighbors.of(i);
            let mut weighted = Vec3::zeros();
            let mut mass = 0.0;
            for (c, k) in kernels.iter().enumerate() {
                let mut mu_tilde = Vec3::zeros();
                let mut sigma_tilde = 0.0;
                for (s, &j) in nbrs.iter().enumerate() {
                    let kij = model.kernel(i, s, c);
                    mu_tilde += mu[j] * kij;
                    sigma_tilde += kij;
                }
                weighted += mu_tilde * k.alpha;
                mass += k.alpha * sigma_tilde;
            }
            (weighted, mass)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub pairwise_ms: f64,
    pub highorder_ms: f64,
}

fn step_timed(model: &CrfModel, state: &MeanFieldState, timings: &mut StageTimings) -> Result<MeanFieldState> {
    if state.mu.len() != model.len() {
        return Err(Error::LengthMismatch {
            expected: model.len(),
            actual: state.mu.len(),
        });
    }
    let beta = model.config.beta;

    let t0 = Instant::now();
    let (mu_hat, degenerate_fits) = if beta > 0.0 {
        regional_messages(model, &state.mu)
    } else {
        (vec![Vec3::zeros(); model.len()], 0)
    };
    let t1 = Instant::now();
    let pair = pairwise_messages(model, &state.mu);
    let t2 = Instant::now();
    timings.highorder_ms += (t1 - t0).as_secs_f64() * 1e3;
    timings.pairwise_ms += (t2 - t1).as_secs_f64() * 1e3;

    let (mu, sigma): (Vec<Vec3>, Vec<f64>) = (0..model.len())
        .into_par_iter()
        .map(|i| {
            let (weighted, mass) = pair[i];
            let mu_bar = model.initial[i] + weighted * 2.0 + mu_hat[i] * beta;
            let sigma_bar = 1.0 + 2.0 * mass + beta;
            (mu_bar / sigma_bar, 1.0 / (2.0 * sigma_bar))
        })
        .unzip();
    if mu.iter().any(|m| !m.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite("mean-field state"));
    }
    Ok(MeanFieldState {
        mu,
        sigma,
        iteration: state.iteration + 1,
        degenerate_fits,
    })
}

/// One synchronous mean-field update.
pub fn mean_field_step(model: &CrfModel, state: &MeanFieldState) -> Result<MeanFieldState> {
    step_timed(model, state, &mut StageTimings::default())
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub flow: FlowField,
    pub state: MeanFieldState,
    pub iterations: usize,
    /// Largest per-point change of the mean in the last step.
    pub final_delta: f64,
    pub timings: StageTimings,
}

/// Runs mean-field steps from `mu = z` until the largest per-point change
/// drops below `tolerance` or `max_iterations` is reached.
pub fn refine(
    cloud: &PointCloud,
    initial_flow: &FlowField,
    partition: &SupervoxelPartition,
    observations: &KernelObservations,
    config: &CrfConfig,
) -> Result<Refinement> {
    let model = CrfModel::new(cloud, initial_flow, partition, observations, config)?;
    refine_model(&model)
}

pub fn refine_model(model: &CrfModel) -> Result<Refinement> {
    let mut timings = StageTimings::default();
    let mut state = MeanFieldState::initial(model);
    let mut delta = f64::INFINITY;
    while state.iteration < model.config.max_iterations {
        let next = step_timed(model, &state, &mut timings)?;
        delta = next
            .mu
            .iter()
            .zip(&state.mu)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        state = next;
        if delta < model.config.tolerance {
            break;
        }
    }
    Ok(Refinement {
        flow: FlowField::new(state.mu.clone())?,
        iterations: state.iteration,
        final_delta: delta,
        state,
        timings,
    })
}
