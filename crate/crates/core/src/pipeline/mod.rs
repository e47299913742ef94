//! File-to-file pipeline: normals, supervoxels, initial flow, refinement
//! and optional evaluation.
//!
//! Every stage boundary is a file format (PLY, `.sfl`, label lines), so any
//! stage can be replaced by an external tool. In-memory runs quantize the
//! initial flow to `f32` exactly as an `.sfl` round trip would, which keeps
//! monolithic and staged runs bit-identical.

mod config;
mod report;

pub use config::{parse_config, PipelineConfig, PipelinePaths, DEFAULT_BASELINE_K, DEFAULT_BASELINE_TAU};
pub use report::{parse_metrics_report, parse_report, write_metrics_report, write_report, RunReport};

use std::time::Instant;

use crate::conhcrf::{refine, KernelObservations};
use crate::error::{Error, Result};
use crate::evalbench::compute_metrics;
use crate::flowembed::baseline_initial_flow;
use crate::geometry::FlowField;
use crate::io::{quantize_f32, read_labels, read_ply, read_sfl, write_sfl};
use crate::normals::estimate_normals;
use crate::supervoxel::{segment, SupervoxelPartition};

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: RunReport,
    pub initial_flow: FlowField,
    pub flow: FlowField,
    pub partition: SupervoxelPartition,
}

/// Runs all stages in memory, reading inputs from `config.paths` but
/// writing nothing.
pub fn execute(config: &PipelineConfig) -> Result<PipelineRun> {
    let start = Instant::now();
    let paths = &config.paths;
    let frame_t = read_ply(&paths.frame_t)?;
    let cloud = frame_t.cloud;
    let n = cloud.len();

    // Read every remaining input before any computation.
    let frame_t1 = paths.frame_t1.as_ref().map(read_ply).transpose()?;
    let supplied_flow = paths.initial_flow.as_ref().map(read_sfl).transpose()?;
    let supplied_labels = paths.labels.as_ref().map(read_labels).transpose()?;
    let gt = paths.ground_truth.as_ref().map(read_sfl).transpose()?;
    for f in supplied_flow.iter().chain(gt.iter()) {
        f.check_aligned(n)?;
    }
    if let Some(p) = &supplied_labels {
        p.check_aligned(n)?;
    }

    let sv_start = Instant::now();
    let normals = match frame_t.normals {
        Some(nf) => nf,
        None if n >= 3 => estimate_normals(&cloud, config.normal_k.min(n))?,
        None => crate::geometry::NormalField::uniform(n, crate::geometry::Vec3::z()),
    };
    let partition = match supplied_labels {
        Some(p) => p,
        None => segment(&cloud, &normals, &config.segmenter)?,
    };
    let supervoxel_ms = sv_start.elapsed().as_secs_f64() * 1e3;

    let initial_flow = match supplied_flow {
        Some(f) => f,
        None => {
            let t1 = frame_t1
                .ok_or_else(|| Error::InvalidArgument("either an initial flow or the next frame is required".into()))?;
            quantize_f32(&baseline_initial_flow(
                &cloud,
                &t1.cloud,
                config.baseline_k,
                config.baseline_tau,
            )?)?
        }
    };

    let observations = KernelObservations::from_cloud(&cloud, Some(&normals), &config.crf.kernels)?;
    let refined = refine(&cloud, &initial_flow, &partition, &observations, &config.crf)?;

    let (metrics, initial_metrics) = match &gt {
        Some(gt) => (
            Some(compute_metrics(&refined.flow, gt, &cloud, None)?),
            Some(compute_metrics(&initial_flow, gt, &cloud, None)?),
        ),
        None => (None, None),
    };

    let report = RunReport {
        points: n,
        regions: partition.region_count(),
        supervoxel_ms,
        pairwise_ms: refined.timings.pairwise_ms,
        highorder_ms: refined.timings.highorder_ms,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        iterations: refined.iterations,
        final_delta: refined.final_delta,
        metrics,
        initial_metrics,
    };
    Ok(PipelineRun {
        report,
        initial_flow,
        flow: refined.flow,
        partition,
    })
}

/// Runs the pipeline and writes the refined flow and report when paths for
/// them are configured.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let run = execute(config)?;
    if let Some(out) = &config.paths.output_flow {
        write_sfl(out, &run.flow)?;
    }
    if let Some(out) = &config.paths.report {
        std::fs::write(out, write_report(&run.report))?;
    }
    Ok(run.report)
}
