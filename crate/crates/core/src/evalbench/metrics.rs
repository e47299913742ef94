use crate::error::{Error, Result};
use crate::geometry::{FlowField, Point, PointCloud, Vec3};

/// Denominator floor for relative errors on static points.
pub const RELATIVE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidArgument("focal lengths must be positive".into()));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Pinhole projection; `None` behind or on the camera plane.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// Endpoint-error summary. Percentages are in `[0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub epe3d: f64,
    pub acc3ds: f64,
    pub acc3dr: f64,
    pub outliers3d: f64,
    pub epe2d: Option<f64>,
    pub acc2d: Option<f64>,
    pub point_count: usize,
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn compute_metrics(
    pred: &FlowField,
    gt: &FlowField,
    positions: &PointCloud,
    intrinsics: Option<&CameraIntrinsics>,
) -> Result<MetricsReport> {
    let n = positions.len();
    pred.check_aligned(n)?;
    gt.check_aligned(n)?;

    let mut epe_sum = 0.0;
    let (mut strict, mut relaxed, mut outliers) = (0usize, 0usize, 0usize);
    for (p, g) in pred.vectors().iter().zip(gt.vectors()) {
        let epe = (p - g).norm();
        let rel = epe / g.norm().max(RELATIVE_EPS);
        epe_sum += epe;
        strict += usize::from(epe < 0.05 || rel < 0.05);
        relaxed += usize::from(epe < 0.1 || rel < 0.1);
        outliers += usize::from(epe > 0.3 || rel > 0.1);
    }

    let (epe2d, acc2d) = match intrinsics {
        Some(cam) => {
            let (sum, good, used) = image_errors(cam, positions.points(), pred.vectors(), gt.vectors());
            if used == 0 {
                (None, None)
            } else {
                (Some(sum / used as f64), Some(percent(good, used)))
            }
        }
        None => (None, None),
    };

    Ok(MetricsReport {
        epe3d: epe_sum / n as f64,
        acc3ds: percent(strict, n),
        acc3dr: percent(relaxed, n),
        outliers3d: percent(outliers, n),
        epe2d,
        acc2d,
        point_count: n,
    })
}

fn image_errors(cam: &CameraIntrinsics, points: &[Point], pred: &[Vec3], gt: &[Vec3]) -> (f64, usize, usize) {
    let mut sum = 0.0;
    let mut good = 0;
    let mut used = 0;
    for ((p, fp), fg) in points.iter().zip(pred).zip(gt) {
        let (Some(a), Some(b), Some(c)) = (
            cam.project(&p.coords),
            cam.project(&(p.coords + fp)),
            cam.project(&(p.coords + fg)),
        ) else {
            continue;
        };
        let pred_px = (b.0 - a.0, b.1 - a.1);
        let gt_px = (c.0 - a.0, c.1 - a.1);
        let err = ((pred_px.0 - gt_px.0).powi(2) + (pred_px.1 - gt_px.1).powi(2)).sqrt();
        let rel = err / (gt_px.0.powi(2) + gt_px.1.powi(2)).sqrt().max(RELATIVE_EPS);
        sum += err;
        good += usize::from(err < 3.0 || rel < 0.05);
        used += 1;
    }
    (sum, good, used)
}
