use rayon::prelude::*;

use super::meanfield::CrfModel;
use crate::error::{Error, Result};
use crate::geometry::{FlowField, Point, Vec3};
use crate::rigidfit::{kabsch_fit, Correspondences};

/// Gaussian affinity `exp(-|ki - kj|^2 / (2 theta^2))`.
pub fn pairwise_kernel(ki: &[f64], kj: &[f64], theta: f64) -> f64 {
    debug_assert_eq!(ki.len(), kj.len());
    let d2: f64 = ki.iter().zip(kj).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * theta * theta)).exp()
}

pub fn unary_energy(y: &Vec3, z: &Vec3) -> f64 {
    (y - z).norm_squared()
}

/// `sum_c alpha_c K_ij^c |yi - yj|^2` for `(alpha_c, K_ij^c)` pairs.
pub fn pairwise_energy(yi: &Vec3, yj: &Vec3, weights: &[(f64, f64)]) -> f64 {
    let d2 = (yi - yj).norm_squared();
    weights.iter().map(|(alpha, k)| alpha * k * d2).sum()
}

/// `beta |yi - g(pi, Y_{V-i})|^2`, with `g` the displacement at `pi` of the
/// rigid fit to the other region members.
pub fn highorder_energy(
    yi: &Vec3,
    pi: &Point,
    region_positions: &[Point],
    region_flows: &[Vec3],
    beta: f64,
) -> Result<f64> {
    if region_positions.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if region_positions.len() != region_flows.len() {
        return Err(Error::LengthMismatch {
            expected: region_positions.len(),
            actual: region_flows.len(),
        });
    }
    let fit = kabsch_fit(&Correspondences::from_flow(region_positions.to_vec(), region_flows)?);
    Ok(beta * (yi - fit.flow_at(pi)).norm_squared())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub unary: f64,
    pub pairwise: f64,
    pub highorder: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.unary + self.pairwise + self.highorder
    }
}

/// Full energy of `flow` under `model`, with exact leave-one-out rigid fits.
///
/// Singleton regions contribute no high-order term (there is no other
/// member to define a shared motion).
pub fn total_energy(model: &CrfModel, flow: &FlowField) -> Result<EnergyBreakdown> {
    flow.check_aligned(model.len())?;
    let y = flow.vectors();
    let kernels = &model.config.kernels;

    let unary = y.iter().zip(&model.initial).map(|(a, b)| unary_energy(a, b)).sum();

    let pairwise = (0..model.len())
        .into_par_iter()
        .map(|i| {
            model
                .neighbors
                .of(i)
                .iter()
                .enumerate()
                .map(|(s, &j)| {
                    let w: Vec<(f64, f64)> = kernels
                        .iter()
                        .enumerate()
                        .map(|(c, k)| (k.alpha, model.kernel(i, s, c)))
                        .collect();
                    pairwise_energy(&y[i], &y[j], &w)
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();

    let beta = model.config.beta;
    let mut highorder = 0.0;
    if beta > 0.0 {
        let per_region = model
            .partition
            .regions
            .par_iter()
            .filter(|m| m.len() > 1)
            .map(|members| {
                let mut acc = 0.0;
                for &i in members {
                    let others: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
                    let pos: Vec<Point> = others.iter().map(|&j| model.positions[j]).collect();
                    let flows: Vec<Vec3> = others.iter().map(|&j| y[j]).collect();
                    acc += highorder_energy(&y[i], &model.positions[i], &pos, &flows, beta)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<f64>>>()?;
        highorder = per_region.iter().sum();
    }

    Ok(EnergyBreakdown {
        unary,
        pairwise,
        highorder,
    })
}
