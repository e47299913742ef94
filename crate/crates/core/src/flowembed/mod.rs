//! Forward pass of the position-aware flow embedding layer.
//!
//! For a point `p_i` of frame t and each candidate `p_j` among its nearest
//! points in frame t+1:
//!
//! ```text
//! h_ij  = h(f_i, f_j, p_j - p_i)               matching cost
//! hb_i  = h(f_i, f_i, 0)                       pseudo stationary pair
//! u_ij  = h_ij - hb_i                          cost difference
//! s_ij  = Ms(p_i, p_j, p_i - p_j, |p_i - p_j|) position encoding
//! w_ij  = softmax_j(Ma(u_ij, s_ij))            per channel, over j
//! e_i   = sum_j w_ij * h_ij                    elementwise
//! ```
//!
//! No training lives here. Parameters are read from a weight file or drawn
//! from a seeded Gaussian.

mod baseline;
mod mlp;

pub use baseline::baseline_initial_flow;
pub use mlp::{format_weights, parse_weights, Activation, Layer, MlpParams, WeightFile};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};
use crate::knn::NeighborGraph;

/// Length of the position-encoding input: two points, their offset, distance.
pub const POSITION_INPUT_DIM: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingConfig {
    pub neighbor_k: usize,
    pub feature_dim: usize,
    pub cost_dim: usize,
    pub pos_dim: usize,
    /// Width of the single hidden layer in each net; 0 means no hidden layer.
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            neighbor_k: 16,
            feature_dim: 3,
            cost_dim: 32,
            pos_dim: 16,
            hidden_dim: 32,
            seed: 0,
        }
    }
}

/// The three perceptrons `h`, `Ms` and `Ma`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowEmbedder {
    pub neighbor_k: usize,
    pub h: MlpParams,
    pub ms: MlpParams,
    pub ma: MlpParams,
}

impl FlowEmbedder {
    pub fn new(neighbor_k: usize, h: MlpParams, ms: MlpParams, ma: MlpParams) -> Result<Self> {
        if neighbor_k == 0 {
            return Err(Error::InvalidArgument("neighbor_k must be >= 1".into()));
        }
        let feature2 = h.input_dim().checked_sub(3).ok_or(Error::DimensionMismatch {
            expected: 3,
            actual: h.input_dim(),
        })?;
        if feature2 % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "h input dim {} is not 2 * feature_dim + 3",
                h.input_dim()
            )));
        }
        if ms.input_dim() != POSITION_INPUT_DIM {
            return Err(Error::DimensionMismatch {
                expected: POSITION_INPUT_DIM,
                actual: ms.input_dim(),
            });
        }
        if ma.input_dim() != h.output_dim() + ms.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: h.output_dim() + ms.output_dim(),
                actual: ma.input_dim(),
            });
        }
        if ma.output_dim() != h.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: h.output_dim(),
                actual: ma.output_dim(),
            });
        }
        Ok(Self { neighbor_k, h, ms, ma })
    }

    pub fn seeded(config: &EmbeddingConfig) -> Result<Self> {
        let widths = |input: usize, output: usize| {
            if config.hidden_dim == 0 {
                vec![input, output]
            } else {
                vec![input, config.hidden_dim, output]
            }
        };
        let h = MlpParams::seeded(&widths(2 * config.feature_dim + 3, config.cost_dim), config.seed)?;
        let ms = MlpParams::seeded(&widths(POSITION_INPUT_DIM, config.pos_dim), config.seed.wrapping_add(1))?;
        let ma = MlpParams::seeded(
            &widths(config.cost_dim + config.pos_dim, config.cost_dim),
            config.seed.wrapping_add(2),
        )?;
        Self::new(config.neighbor_k, h, ms, ma)
    }

    /// Nets named `h`, `ms` and `ma` from a weight file.
    pub fn from_weights(neighbor_k: usize, file: &WeightFile) -> Result<Self> {
        let get = |name: &str| {
            file.nets
                .get(name)
                .cloned()
                .ok_or_else(|| Error::format("weights", format!("net '{name}' missing")))
        };
        Self::new(neighbor_k, get("h")?, get("ms")?, get("ma")?)
    }

    pub fn to_weights(&self) -> WeightFile {
        let mut file = WeightFile::default();
        file.nets.insert("h".into(), self.h.clone());
        file.nets.insert("ms".into(), self.ms.clone());
        file.nets.insert("ma".into(), self.ma.clone());
        file
    }

    pub fn feature_dim(&self) -> usize {
        (self.h.input_dim() - 3) / 2
    }

    pub fn cost_dim(&self) -> usize {
        self.h.output_dim()
    }
}

/// Per-point embeddings `e_i` for frame t.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowEmbedding {
    pub vectors: Vec<Vec<f64>>,
}

pub fn matching_cost(fi: &[f64], fj: &[f64], pi: &Point, pj: &Point, h: &MlpParams) -> Result<Vec<f64>> {
    let offset = pj - pi;
    let mut input = Vec::with_capacity(fi.len() + fj.len() + 3);
    input.extend_from_slice(fi);
    input.extend_from_slice(fj);
    input.extend_from_slice(offset.as_slice());
    h.forward(&input)
}

pub fn pseudo_cost(fi: &[f64], pi: &Point, h: &MlpParams) -> Result<Vec<f64>> {
    matching_cost(fi, fi, pi, pi, h)
}

pub fn cost_difference(hij: &[f64], hbar_i: &[f64]) -> Result<Vec<f64>> {
    if hij.len() != hbar_i.len() {
        return Err(Error::DimensionMismatch {
            expected: hij.len(),
            actual: hbar_i.len(),
        });
    }
    Ok(hij.iter().zip(hbar_i).map(|(a, b)| a - b).collect())
}

pub fn position_encoding(pi: &Point, pj: &Point, ms: &MlpParams) -> Result<Vec<f64>> {
    let rel = pi - pj;
    let mut input = Vec::with_capacity(POSITION_INPUT_DIM);
    input.extend_from_slice(pi.coords.as_slice());
    input.extend_from_slice(pj.coords.as_slice());
    input.extend_from_slice(rel.as_slice());
    input.push(rel.norm());
    ms.forward(&input)
}

/// Softmax over the first index (neighbors), independently per channel.
pub fn softmax_over_neighbors(logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = logits[0].len();
    let mut out = vec![vec![0.0; dim]; logits.len()];
    for c in 0..dim {
        let max = logits.iter().map(|l| l[c]).fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|l| (l[c] - max).exp()).sum();
        for (o, l) in out.iter_mut().zip(logits) {
            o[c] = (l[c] - max).exp() / denom;
        }
    }
    out
}

pub fn aggregation_weights(u_set: &[Vec<f64>], s_set: &[Vec<f64>], ma: &MlpParams) -> Result<Vec<Vec<f64>>> {
    if u_set.is_empty() {
        return Err(Error::InvalidArgument("empty neighbor set".into()));
    }
    if u_set.len() != s_set.len() {
        return Err(Error::LengthMismatch {
            expected: u_set.len(),
            actual: s_set.len(),
        });
    }
    let logits = u_set
        .iter()
        .zip(s_set)
        .map(|(u, s)| {
            let mut input = u.clone();
            input.extend_from_slice(s);
            ma.forward(&input)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax_over_neighbors(&logits))
}

/// Embedding of one point given its candidate indices in frame t+1.
pub fn embed_point(
    i: usize,
    candidates: &[usize],
    cloud_t: &PointCloud,
    cloud_t1: &PointCloud,
    embedder: &FlowEmbedder,
) -> Result<Vec<f64>> {
    let ft = cloud_t.features().ok_or(Error::FeaturesRequired)?;
    let ft1 = cloud_t1.features().ok_or(Error::FeaturesRequired)?;
    let pi = cloud_t.point(i);
    let hbar = pseudo_cost(&ft[i], pi, &embedder.h)?;
    let mut costs = Vec::with_capacity(candidates.len());
    let mut diffs = Vec::with_capacity(candidates.len());
    let mut encodings = Vec::with_capacity(candidates.len());
    for &j in candidates {
        let pj = cloud_t1.point(j);
        let hij = matching_cost(&ft[i], &ft1[j], pi, pj, &embedder.h)?;
        diffs.push(cost_difference(&hij, &hbar)?);
        encodings.push(position_encoding(pi, pj, &embedder.ms)?);
        costs.push(hij);
    }
    let weights = aggregation_weights(&diffs, &encodings, &embedder.ma)?;
    let mut e = vec![0.0; embedder.cost_dim()];
    for (w, h) in weights.iter().zip(&costs) {
        for c in 0..e.len() {
            e[c] += w[c] * h[c];
        }
    }
    Ok(e)
}

pub fn flow_embedding(
    cloud_t: &PointCloud,
    cloud_t1: &PointCloud,
    graph: &NeighborGraph,
    embedder: &FlowEmbedder,
) -> Result<FlowEmbedding> {
    for cloud in [cloud_t, cloud_t1] {
        match cloud.feature_dim() {
            None => return Err(Error::FeaturesRequired),
            Some(d) if d != embedder.feature_dim() => {
                return Err(Error::DimensionMismatch {
                    expected: embedder.feature_dim(),
                    actual: d,
                })
            }
            _ => {}
        }
    }
    if graph.len() != cloud_t.len() {
        return Err(Error::LengthMismatch {
            expected: cloud_t.len(),
            actual: graph.len(),
        });
    }
    let vectors = (0..cloud_t.len())
        .into_par_iter()
        .map(|i| embed_point(i, graph.of(i), cloud_t, cloud_t1, embedder))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowEmbedding { vectors })
}
