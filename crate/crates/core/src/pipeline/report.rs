//! Run reports as stable `key: value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evalbench::MetricsReport;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub points: usize,
    pub regions: usize,
    pub supervoxel_ms: f64,
    pub pairwise_ms: f64,
    pub highorder_ms: f64,
    pub total_ms: f64,
    pub iterations: usize,
    pub final_delta: f64,
    /// Metrics of the refined flow against ground truth.
    pub metrics: Option<MetricsReport>,
    /// Metrics of the unrefined initial flow against ground truth.
    pub initial_metrics: Option<MetricsReport>,
}

fn write_metrics(out: &mut String, prefix: &str, m: &MetricsReport) {
    let _ = writeln!(out, "{prefix}epe3d: {}", m.epe3d);
    let _ = writeln!(out, "{prefix}acc3ds: {}", m.acc3ds);
    let _ = writeln!(out, "{prefix}acc3dr: {}", m.acc3dr);
    let _ = writeln!(out, "{prefix}outliers3d: {}", m.outliers3d);
    if let Some(v) = m.epe2d {
        let _ = writeln!(out, "{prefix}epe2d: {v}");
    }
    if let Some(v) = m.acc2d {
        let _ = writeln!(out, "{prefix}acc2d: {v}");
    }
    let _ = writeln!(out, "{prefix}point_count: {}", m.point_count);
}

/// Metrics alone, as emitted by the `eval` command.
pub fn write_metrics_report(m: &MetricsReport) -> String {
    let mut out = String::new();
    write_metrics(&mut out, "", m);
    out
}

pub fn write_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "points: {}", report.points);
    let _ = writeln!(out, "regions: {}", report.regions);
    let _ = writeln!(out, "supervoxel_ms: {}", report.supervoxel_ms);
    let _ = writeln!(out, "pairwise_ms: {}", report.pairwise_ms);
    let _ = writeln!(out, "highorder_ms: {}", report.highorder_ms);
    let _ = writeln!(out, "total_ms: {}", report.total_ms);
    let _ = writeln!(out, "iterations: {}", report.iterations);
    let _ = writeln!(out, "final_delta: {}", report.final_delta);
    if let Some(m) = &report.metrics {
        write_metrics(&mut out, "", m);
    }
    if let Some(m) = &report.initial_metrics {
        write_metrics(&mut out, "initial_", m);
    }
    out
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| Error::format("report", format!("line {}: expected 'key: value'", i + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::format(
                "report",
                format!("line {}: duplicate key '{}'", i + 1, k.trim()),
            ));
        }
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = map
        .remove(key)
        .ok_or_else(|| Error::format("report", format!("missing key '{key}'")))?;
    raw.parse()
        .map_err(|_| Error::format("report", format!("bad value for '{key}': '{raw}'")))
}

fn take_metrics(map: &mut BTreeMap<String, String>, prefix: &str) -> Result<Option<MetricsReport>> {
    if !map.contains_key(&format!("{prefix}epe3d")) {
        return Ok(None);
    }
    let epe2d = match map.contains_key(&format!("{prefix}epe2d")) {
        true => Some(take(map, &format!("{prefix}epe2d"))?),
        false => None,
    };
    let acc2d = match map.contains_key(&format!("{prefix}acc2d")) {
        true => Some(take(map, &format!("{prefix}acc2d"))?),
        false => None,
    };
    Ok(Some(MetricsReport {
        epe3d: take(map, &format!("{prefix}epe3d"))?,
        acc3ds: take(map, &format!("{prefix}acc3ds"))?,
        acc3dr: take(map, &format!("{prefix}acc3dr"))?,
        outliers3d: take(map, &format!("{prefix}outliers3d"))?,
        epe2d,
        acc2d,
        point_count: take(map, &format!("{prefix}point_count"))?,
    }))
}

pub fn parse_report(text: &str) -> Result<RunReport> {
    let mut map = parse_pairs(text)?;
    let report = RunReport {
        points: take(&mut map, "points")?,
        regions: take(&mut map, "regions")?,
        supervoxel_ms: take(&mut map, "supervoxel_ms")?,
        pairwise_ms: take(&mut map, "pairwise_ms")?,
        highorder_ms: take(&mut map, "highorder_ms")?,
        total_ms: take(&mut map, "total_ms")?,
        iterations: take(&mut map, "iterations")?,
        final_delta: take(&mut map, "final_delta")?,
        metrics: take_metrics(&mut map, "")?,
        initial_metrics: take_metrics(&mut map, "initial_")?,
    };
    if let Some(k) = map.keys().next() {
        return Err(Error::format("report", format!("unknown key '{k}'")));
    }
    Ok(report)
}

pub fn parse_metrics_report(text: &str) -> Result<MetricsReport> {
    let mut map = parse_pairs(text)?;
    take_metrics(&mut map, "")?.ok_or_else(|| Error::format("report", "missing key 'epe3d'"))
}
