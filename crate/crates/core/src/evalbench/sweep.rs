use std::fmt::Write as _;

use super::metrics::compute_metrics;
use super::synth::{generate_scene, SyntheticSceneSpec};
use crate::conhcrf::{refine, CrfConfig, KernelObservations};
use crate::error::{Error, Result};
use crate::normals::{estimate_normals, DEFAULT_NORMAL_K};
use crate::supervoxel::{segment, SegmenterConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub desired_count: usize,
    pub regions: usize,
    pub epe3d: f64,
}

/// Segments and refines one noisy synthetic scene once per desired region
/// size, reporting the refined EPE3D of each run.
pub fn sensitivity_sweep(
    scene_spec: &SyntheticSceneSpec,
    desired_counts: &[usize],
    crf: &CrfConfig,
    segmenter: &SegmenterConfig,
) -> Result<Vec<SweepRow>> {
    if desired_counts.is_empty() {
        return Err(Error::InvalidArgument("no desired counts given".into()));
    }
    let scene = generate_scene(scene_spec)?;
    let normals = estimate_normals(&scene.cloud_t, DEFAULT_NORMAL_K.min(scene.cloud_t.len()))?;
    let observations = KernelObservations::from_cloud(&scene.cloud_t, Some(&normals), &crf.kernels)?;
    desired_counts
        .iter()
        .map(|&desired| {
            let cfg = SegmenterConfig {
                desired_point_count: desired,
                ..segmenter.clone()
            };
            let partition = segment(&scene.cloud_t, &normals, &cfg)?;
            let refined = refine(&scene.cloud_t, &scene.initial_flow, &partition, &observations, crf)?;
            let m = compute_metrics(&refined.flow, &scene.gt_flow, &scene.cloud_t, None)?;
            Ok(SweepRow {
                desired_count: desired,
                regions: partition.region_count(),
                epe3d: m.epe3d,
            })
        })
        .collect()
}

pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>14} {:>8} {:>10}", "desired_count", "regions", "epe3d");
    for r in rows {
        let _ = writeln!(out, "{:>14} {:>8} {:>10.4}", r.desired_count, r.regions, r.epe3d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_count() {
        let spec = SyntheticSceneSpec {
            body_count: 2,
            points_per_body: 100,
            ..Default::default()
        };
        let rows = sensitivity_sweep(
            &spec,
            &[80, 100, 140, 200],
            &CrfConfig::default(),
            &SegmenterConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(
            rows.iter().map(|r| r.desired_count).collect::<Vec<_>>(),
            vec![80, 100, 140, 200]
        );
        let table = format_sweep_table(&rows);
        assert_eq!(table.lines().count(), 5);
        assert!(sensitivity_sweep(&spec, &[], &CrfConfig::default(), &SegmenterConfig::default()).is_err());
    }
}
