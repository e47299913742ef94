//! `key=value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown and repeated keys are errors. Every key is optional.

use std::path::PathBuf;

use crate::conhcrf::{CrfConfig, KernelSpec, Observation, RegionalTerm};
use crate::error::{Error, Result};
use crate::flowembed::EmbeddingConfig;
use crate::normals::DEFAULT_NORMAL_K;
use crate::supervoxel::SegmenterConfig;

pub const DEFAULT_BASELINE_K: usize = 8;
pub const DEFAULT_BASELINE_TAU: f64 = 0.05;

/// Input and output locations of a pipeline run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelinePaths {
    pub frame_t: PathBuf,
    pub frame_t1: Option<PathBuf>,
    /// Initial flow; computed by the softmax baseline when absent.
    pub initial_flow: Option<PathBuf>,
    /// Region labels; segmented automatically when absent.
    pub labels: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub output_flow: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub crf: CrfConfig,
    pub embedding: EmbeddingConfig,
    pub normal_k: usize,
    pub baseline_k: usize,
    pub baseline_tau: f64,
    pub seed: u64,
    pub paths: PipelinePaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segmenter: SegmenterConfig::default(),
            crf: CrfConfig::default(),
            embedding: EmbeddingConfig::default(),
            normal_k: DEFAULT_NORMAL_K,
            baseline_k: DEFAULT_BASELINE_K,
            baseline_tau: DEFAULT_BASELINE_TAU,
            seed: 0,
            paths: PipelinePaths::default(),
        }
    }
}

impl PipelineConfig {
    /// Propagates the global seed into the seeded stages.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.segmenter.seed = seed;
        self.embedding.seed = seed;
        self
    }

    fn kernel_mut(&mut self, obs: Observation) -> &mut KernelSpec {
        if let Some(pos) = self.crf.kernels.iter().position(|k| k.observation == obs) {
            return &mut self.crf.kernels[pos];
        }
        self.crf.kernels.push(KernelSpec {
            alpha: 0.0,
            theta: 1.0,
            observation: obs,
        });
        self.crf.kernels.last_mut().unwrap()
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        message: format!("'{key}' expects a number, got '{value}'"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config {
            line,
            message: format!("'{key}' expects true or false, got '{value}'"),
        }),
    }
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected key=value, got '{content}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
        match key {
            "alpha_position" => cfg.kernel_mut(Observation::Position).alpha = parse_num(line, key, value)?,
            "alpha_normal" => cfg.kernel_mut(Observation::Normal).alpha = parse_num(line, key, value)?,
            "theta_position" => cfg.kernel_mut(Observation::Position).theta = parse_num(line, key, value)?,
            "theta_normal" => cfg.kernel_mut(Observation::Normal).theta = parse_num(line, key, value)?,
            "beta" => cfg.crf.beta = parse_num(line, key, value)?,
            "knn" => cfg.crf.knn_k = parse_num(line, key, value)?,
            "iterations" => cfg.crf.max_iterations = parse_num(line, key, value)?,
            "tolerance" => cfg.crf.tolerance = parse_num(line, key, value)?,
            "exact_leave_one_out" => cfg.crf.exact_leave_one_out = parse_bool(line, key, value)?,
            "regional_term" => {
                cfg.crf.regional_term = match value {
                    "rigid" => RegionalTerm::Rigid,
                    "naive" => RegionalTerm::NaiveMean,
                    _ => {
                        return Err(Error::Config {
                            line,
                            message: format!("'regional_term' expects rigid or naive, got '{value}'"),
                        })
                    }
                }
            }
            "supervoxel_size" => cfg.segmenter.desired_point_count = parse_num(line, key, value)?,
            "position_weight" => cfg.segmenter.position_weight = parse_num(line, key, value)?,
            "normal_weight" => cfg.segmenter.normal_weight = parse_num(line, key, value)?,
            "lloyd_iterations" => cfg.segmenter.lloyd_iterations = parse_num(line, key, value)?,
            "normal_k" => cfg.normal_k = parse_num(line, key, value)?,
            "baseline_k" => cfg.baseline_k = parse_num(line, key, value)?,
            "baseline_tau" => cfg.baseline_tau = parse_num(line, key, value)?,
            "embed_k" => cfg.embedding.neighbor_k = parse_num(line, key, value)?,
            "cost_dim" => cfg.embedding.cost_dim = parse_num(line, key, value)?,
            "pos_dim" => cfg.embedding.pos_dim = parse_num(line, key, value)?,
            "hidden_dim" => cfg.embedding.hidden_dim = parse_num(line, key, value)?,
            "seed" => {
                let seed = parse_num(line, key, value)?;
                cfg = cfg.with_seed(seed);
            }
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key '{key}'"),
                })
            }
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &PipelineConfig) -> Result<()> {
    let wrap = |e: Error| match e {
        Error::InvalidArgument(m) => Error::Config { line: 0, message: m },
        other => other,
    };
    cfg.crf.validate().map_err(wrap)?;
    cfg.segmenter.validate().map_err(wrap)?;
    if cfg.normal_k < 3 {
        return Err(Error::Config {
            line: 0,
            message: "normal_k must be >= 3".into(),
        });
    }
    if cfg.baseline_k == 0 || cfg.baseline_tau.is_nan() || cfg.baseline_tau <= 0.0 {
        return Err(Error::Config {
            line: 0,
            message: "baseline_k must be >= 1 and baseline_tau > 0".into(),
        });
    }
    Ok(())
}
