//! Continuous high-order CRF over per-point flow vectors.
//!
//! The energy of a candidate flow `Y` given an initial flow `Z` is
//!
//! ```text
//! E(Y) = sum_i |y_i - z_i|^2
//!      + sum_i sum_{j in N(i)} sum_c alpha_c K_ij^c |y_i - y_j|^2
//!      + sum_V sum_{i in V} beta |y_i - g(p_i, Y_{V-i})|^2
//! ```
//!
//! where `K_ij^c` is a Gaussian kernel over observation channel `c` and
//! `g` is the displacement at `p_i` of the rigid motion best explaining the
//! rest of region `V`. Inference is mean field with Gaussian marginals; see
//! [`meanfield`].

mod energy;
mod meanfield;

pub use energy::{highorder_energy, pairwise_energy, pairwise_kernel, total_energy, unary_energy, EnergyBreakdown};
pub use meanfield::{
    mean_field_step, naive_region_flow, refine, refine_model, regional_messages, CrfModel, MeanFieldState, Refinement,
    StageTimings,
};

use crate::error::{Error, Result};
use crate::geometry::{NormalField, PointCloud, Vec3};

/// Per-point quantity feeding one Gaussian kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observation {
    Position,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    pub theta: f64,
    pub observation: Observation,
}

/// What the high-order message pulls each point toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RegionalTerm {
    /// Displacement of the region's best-fit rigid motion.
    #[default]
    Rigid,
    /// Plain average of the region's flow (ablation baseline).
    NaiveMean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrfConfig {
    pub kernels: Vec<KernelSpec>,
    pub beta: f64,
    pub knn_k: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub exact_leave_one_out: bool,
    pub regional_term: RegionalTerm,
}

pub const DEFAULT_ALPHA_POSITION: f64 = 0.1;
pub const DEFAULT_ALPHA_NORMAL: f64 = 0.05;
pub const DEFAULT_THETA_POSITION: f64 = 0.2;
pub const DEFAULT_THETA_NORMAL: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_KNN: usize = 8;

impl Default for CrfConfig {
    fn default() -> Self {
        Self {
            kernels: vec![
                KernelSpec {
                    alpha: DEFAULT_ALPHA_POSITION,
                    theta: DEFAULT_THETA_POSITION,
                    observation: Observation::Position,
                },
                KernelSpec {
                    alpha: DEFAULT_ALPHA_NORMAL,
                    theta: DEFAULT_THETA_NORMAL,
                    observation: Observation::Normal,
                },
            ],
            beta: DEFAULT_BETA,
            knn_k: DEFAULT_KNN,
            max_iterations: 10,
            tolerance: 1e-5,
            exact_leave_one_out: false,
            regional_term: RegionalTerm::Rigid,
        }
    }
}

impl CrfConfig {
    /// Unary term only: refinement returns the initial flow.
    pub fn unary_only() -> Self {
        Self {
            kernels: Vec::new(),
            beta: 0.0,
            ..Self::default()
        }
    }

    /// Only the high-order term, with coefficient `beta`.
    pub fn rigid_only(beta: f64) -> Self {
        Self {
            kernels: Vec::new(),
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        for (c, k) in self.kernels.iter().enumerate() {
            if !(k.alpha.is_finite() && k.alpha >= 0.0) {
                return bad(format!("kernel {c}: alpha must be finite and >= 0"));
            }
            if !(k.theta.is_finite() && k.theta > 0.0) {
                return bad(format!("kernel {c}: theta must be > 0"));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta must be finite and >= 0".into());
        }
        if self.knn_k == 0 {
            return bad("knn must be >= 1".into());
        }
        if self.max_iterations == 0 {
            return bad("iterations must be >= 1".into());
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad("tolerance must be > 0".into());
        }
        Ok(())
    }

    pub fn needs_normals(&self) -> bool {
        self.kernels.iter().any(|k| k.observation == Observation::Normal)
    }
}

/// Observation vectors `k_i^c`, one channel per kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelObservations {
    pub channels: Vec<Vec<Vec3>>,
}

impl KernelObservations {
    pub fn from_cloud(cloud: &PointCloud, normals: Option<&NormalField>, kernels: &[KernelSpec]) -> Result<Self> {
        let channels = kernels
            .iter()
            .map(|k| match k.observation {
                Observation::Position => Ok(cloud.points().iter().map(|p| p.coords).collect()),
                Observation::Normal => {
                    let nf = normals.ok_or_else(|| Error::InvalidArgument("normal kernel requires normals".into()))?;
                    if nf.len() != cloud.len() {
                        return Err(Error::LengthMismatch {
                            expected: cloud.len(),
                            actual: nf.len(),
                        });
                    }
                    Ok(nf.normals.clone())
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { channels })
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }
}
