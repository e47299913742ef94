//! Dense multilayer perceptrons and their ASCII tensor container.
//!
//! Weight files hold a sequence of blocks
//!
//! ```text
//! tensor <name> <rows> <cols>
//! <rows * cols row-major decimal floats, whitespace separated>
//! ```
//!
//! with names `<net>.<layer>.weight` (out x in) and `<net>.<layer>.bias`
//! (out x 1). Hidden layers use ReLU; the last layer of each net is linear.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Row-major `out x in`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weight: Vec<f64>, bias: Vec<f64>, inputs: usize, activation: Activation) -> Result<Self> {
        let outputs = bias.len();
        if weight.len() != outputs * inputs {
            return Err(Error::DimensionMismatch {
                expected: outputs * inputs,
                actual: weight.len(),
            });
        }
        if !weight.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(Self {
            weight,
            bias,
            inputs,
            outputs,
            activation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut weight = vec![0.0; dim * dim];
        for i in 0..dim {
            weight[i * dim + i] = 1.0;
        }
        Self {
            weight,
            bias: vec![0.0; dim],
            inputs: dim,
            outputs: dim,
            activation: Activation::Identity,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                let v = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.bias[o];
                match self.activation {
                    Activation::Relu => v.max(0.0),
                    Activation::Identity => v,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].outputs,
                    actual: pair[1].inputs,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            layers: vec![Layer::identity(dim)],
        }
    }

    /// Gaussian(0, 0.1) weights and biases from `seed`. `widths` lists every
    /// layer size including input and output.
    pub fn seeded(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument("need input and output widths".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, 0.1).expect("valid std");
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let weight = (0..w[0] * w[1]).map(|_| dist.sample(&mut rng)).collect();
                let bias = (0..w[1]).map(|_| dist.sample(&mut rng)).collect();
                let act = if l == last {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::new(weight, bias, w[0], act)
            })
            .collect::<Result<_>>()?;
        Self::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut v = x.to_vec();
        for layer in &self.layers {
            v = layer.forward(&v);
        }
        Ok(v)
    }
}

/// Named MLPs as stored in a weight file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightFile {
    pub nets: BTreeMap<String, MlpParams>,
}

type LayerTensors = (Option<Tensor>, Option<Tensor>);

struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn parse_weights(text: &str) -> Result<WeightFile> {
    let bad = |m: String| Error::format("weights", m);
    let mut tokens = text.split_whitespace().peekable();
    let mut tensors: BTreeMap<String, Tensor> = BTreeMap::new();
    while let Some(tok) = tokens.next() {
        if tok != "tensor" {
            return Err(bad(format!("expected 'tensor', found '{tok}'")));
        }
        let name = tokens
            .next()
            .ok_or_else(|| bad("missing tensor name".into()))?
            .to_string();
        let mut dim = |what: &str| -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(format!("tensor {name}: bad {what}")))
        };
        let rows = dim("rows")?;
        let cols = dim("cols")?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let t = tokens
                .next()
                .ok_or_else(|| bad(format!("tensor {name}: too few values")))?;
            data.push(
                t.parse::<f64>()
                    .map_err(|_| bad(format!("tensor {name}: bad value '{t}'")))?,
            );
        }
        if tensors.insert(name.clone(), Tensor { rows, cols, data }).is_some() {
            return Err(bad(format!("duplicate tensor {name}")));
        }
    }

    // net name -> layer index -> (weight, bias)
    let mut grouped: BTreeMap<String, BTreeMap<usize, LayerTensors>> = BTreeMap::new();
    for (name, t) in tensors {
        let parts: Vec<&str> = name.split('.').collect();
        let [net, idx, kind] = parts.as_slice() else {
            return Err(bad(format!("tensor name '{name}' is not <net>.<layer>.<weight|bias>")));
        };
        let idx: usize = idx.parse().map_err(|_| bad(format!("bad layer index in '{name}'")))?;
        let slot = grouped.entry(net.to_string()).or_default().entry(idx).or_default();
        match *kind {
            "weight" => slot.0 = Some(t),
            "bias" => slot.1 = Some(t),
            _ => return Err(bad(format!("unknown tensor kind in '{name}'"))),
        }
    }

    let mut nets = BTreeMap::new();
    for (net, layers) in grouped {
        let count = layers.len();
        let mut built = Vec::with_capacity(count);
        for (pos, (idx, (w, b))) in layers.into_iter().enumerate() {
            if idx != pos {
                return Err(bad(format!("{net}: layer {pos} missing")));
            }
            let w = w.ok_or_else(|| bad(format!("{net}.{idx}.weight missing")))?;
            let b = b.ok_or_else(|| bad(format!("{net}.{idx}.bias missing")))?;
            if b.rows * b.cols != w.rows {
                return Err(bad(format!(
                    "{net}.{idx}: bias has {} values, weight has {} rows",
                    b.rows * b.cols,
                    w.rows
                )));
            }
            let act = if pos + 1 == count {
                Activation::Identity
            } else {
                Activation::Relu
            };
            built.push(Layer::new(w.data, b.data, w.cols, act).map_err(|e| bad(format!("{net}.{idx}: {e}")))?);
        }
        nets.insert(
            net.clone(),
            MlpParams::new(built).map_err(|e| bad(format!("{net}: {e}")))?,
        );
    }
    Ok(WeightFile { nets })
}

pub fn format_weights(file: &WeightFile) -> String {
    let mut out = String::new();
    for (net, mlp) in &file.nets {
        for (l, layer) in mlp.layers.iter().enumerate() {
            let _ = writeln!(out, "tensor {net}.{l}.weight {} {}", layer.outputs, layer.inputs);
            for row in layer.weight.chunks(layer.inputs.max(1)) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
            let _ = writeln!(out, "tensor {net}.{l}.bias {} 1", layer.outputs);
            for b in &layer.bias {
                let _ = writeln!(out, "{b}");
            }
        }
    }
    out
}
