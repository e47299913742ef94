//! File formats: ASCII PLY clouds, binary `.sfl` flow fields, label files.
//!
//! `.sfl` layout: the magic bytes `SFL1`, a little-endian `u32` point count
//! `N`, then `N * 3` little-endian `f32` values (dx, dy, dz per point).

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{FlowField, NormalField, Point, PointCloud, Vec3};
use crate::supervoxel::SupervoxelPartition;

pub const SFL_MAGIC: &[u8; 4] = b"SFL1";

/// A cloud read from PLY, with normals when the file carried them.
#[derive(Clone, Debug)]
pub struct PlyData {
    pub cloud: PointCloud,
    pub normals: Option<NormalField>,
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PlyData> {
    let file = fs::File::open(path)?;
    parse_ply(BufReader::new(file))
}

pub fn parse_ply(reader: impl BufRead) -> Result<PlyData> {
    let bad = |m: String| Error::format("ply", m);
    let mut lines = reader.lines();
    let mut next = || -> Result<Option<String>> { lines.next().transpose().map_err(Error::from) };

    if next()?.as_deref().map(str::trim) != Some("ply") {
        return Err(bad("missing 'ply' magic".into()));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let line = next()?.ok_or_else(|| bad("unterminated header".into()))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(bad(format!("unsupported format '{fmt}'")));
                }
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, n] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    count = Some(n.parse::<usize>().map_err(|_| bad(format!("bad vertex count '{n}'")))?);
                }
            }
            ["property", "list", ..] => {
                if in_vertex {
                    return Err(bad("list properties on vertices are not supported".into()));
                }
            }
            ["property", _ty, name] => {
                if in_vertex {
                    props.push(name.to_string());
                }
            }
            ["end_header"] => break,
            _ => return Err(bad(format!("unexpected header line '{line}'"))),
        }
    }
    let count = count.ok_or_else(|| bad("no vertex element".into()))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(bad("x, y, z properties are required".into())),
    };
    let normal_cols = match (col("nx"), col("ny"), col("nz")) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let mut feature_cols = Vec::new();
    while let Some(c) = col(&format!("feature_{}", feature_cols.len())) {
        feature_cols.push(c);
    }

    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::new();
    let mut features = Vec::new();
    for row in 0..count {
        let line = next()?.ok_or_else(|| bad(format!("expected {count} vertices, found {row}")))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("non-numeric value on vertex {row}")))?;
        if values.len() != props.len() {
            return Err(bad(format!(
                "vertex {row} has {} values, header declares {}",
                values.len(),
                props.len()
            )));
        }
        points.push(Point::new(values[ix], values[iy], values[iz]));
        if let Some([a, b, c]) = normal_cols {
            normals.push(Vec3::new(values[a], values[b], values[c]));
        }
        if !feature_cols.is_empty() {
            features.push(feature_cols.iter().map(|&c| values[c]).collect::<Vec<f64>>());
        }
    }
    let mut cloud = PointCloud::new(points).map_err(|e| bad(e.to_string()))?;
    if !features.is_empty() {
        cloud.set_features(features).map_err(|e| bad(e.to_string()))?;
    }
    let normals = normal_cols.map(|_| {
        let valid = normals.iter().map(|n| n.norm() > 0.0).collect();
        let normals = normals
            .into_iter()
            .map(|n| if n.norm() > 0.0 { n.normalize() } else { Vec3::z() })
            .collect();
        NormalField { normals, valid }
    });
    Ok(PlyData { cloud, normals })
}

pub fn write_ply(path: impl AsRef<Path>, cloud: &PointCloud, normals: Option<&NormalField>) -> Result<()> {
    let mut out = Vec::new();
    format_ply(&mut out, cloud, normals)?;
    fs::write(path, out)?;
    Ok(())
}

pub fn format_ply(out: &mut impl Write, cloud: &PointCloud, normals: Option<&NormalField>) -> Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    for p in ["x", "y", "z"] {
        writeln!(out, "property float {p}")?;
    }
    if normals.is_some() {
        for p in ["nx", "ny", "nz"] {
            writeln!(out, "property float {p}")?;
        }
    }
    let fdim = cloud.feature_dim().unwrap_or(0);
    for f in 0..fdim {
        writeln!(out, "property float feature_{f}")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(nf) = normals {
            let n = nf.normals[i];
            write!(out, " {} {} {}", n.x, n.y, n.z)?;
        }
        if let Some(fs) = cloud.features() {
            for v in &fs[i] {
                write!(out, " {v}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn encode_sfl(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + flow.len() * 12);
    out.extend_from_slice(SFL_MAGIC);
    out.extend_from_slice(&(flow.len() as u32).to_le_bytes());
    for v in flow.vectors() {
        for c in v.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_sfl(bytes: &[u8]) -> Result<FlowField> {
    let bad = |m: String| Error::format("sfl", m);
    if bytes.len() < 8 || &bytes[..4] != SFL_MAGIC {
        return Err(bad("missing SFL1 magic".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != n * 12 {
        return Err(bad(format!(
            "expected {} payload bytes for {n} points, found {}",
            n * 12,
            body.len()
        )));
    }
    let vectors = body
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[k * 4..k * 4 + 4].try_into().unwrap()) as f64;
            Vec3::new(f(0), f(1), f(2))
        })
        .collect();
    FlowField::new(vectors).map_err(|e| bad(e.to_string()))
}

/// Fails without touching `path` when a component overflows `f32`.
pub fn write_sfl(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    check_f32_range(flow)?;
    fs::write(path, encode_sfl(flow))?;
    Ok(())
}

pub fn read_sfl(path: impl AsRef<Path>) -> Result<FlowField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_sfl(&bytes)
}

fn check_f32_range(flow: &FlowField) -> Result<()> {
    let overflow = flow
        .vectors()
        .iter()
        .flat_map(|v| v.iter())
        .any(|c| !(*c as f32).is_finite());
    if overflow {
        return Err(Error::NonFinite("flow component outside f32 range"));
    }
    Ok(())
}

/// Rounds every component through `f32`, the precision `.sfl` stores.
pub fn quantize_f32(flow: &FlowField) -> Result<FlowField> {
    check_f32_range(flow)?;
    let vectors = flow.vectors().iter().map(|v| v.map(|c| c as f32 as f64)).collect();
    FlowField::new(vectors)
}

pub fn format_labels(partition: &SupervoxelPartition) -> String {
    let mut s = String::with_capacity(partition.labels.len() * 4);
    for l in &partition.labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    s
}

pub fn write_labels(path: impl AsRef<Path>, partition: &SupervoxelPartition) -> Result<()> {
    fs::write(path, format_labels(partition))?;
    Ok(())
}

pub fn parse_labels(text: &str) -> Result<SupervoxelPartition> {
    let labels = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| Error::format("labels", format!("line {}: '{}' is not a label", i + 1, l.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    SupervoxelPartition::from_labels(&labels).map_err(|e| Error::format("labels", e.to_string()))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<SupervoxelPartition> {
    parse_labels(&fs::read_to_string(path)?)
}
