//! Core geometric containers: clouds, flow fields, rigid transforms.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One frame of points with optional per-point feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    features: Option<Vec<Vec<f64>>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if !points.iter().all(|p| all_finite(p.coords.as_slice())) {
            return Err(Error::NonFinite("point cloud"));
        }
        Ok(Self { points, features: None })
    }

    pub fn with_features(points: Vec<Point>, features: Vec<Vec<f64>>) -> Result<Self> {
        let mut cloud = Self::new(points)?;
        cloud.set_features(features)?;
        Ok(cloud)
    }

    pub fn set_features(&mut self, features: Vec<Vec<f64>>) -> Result<()> {
        if features.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: features.len(),
            });
        }
        let dim = features[0].len();
        for f in &features {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: f.len(),
                });
            }
            if !all_finite(f) {
                return Err(Error::NonFinite("features"));
            }
        }
        self.features = Some(features);
        Ok(())
    }

    pub fn from_slices(coords: &[[f64; 3]]) -> Result<Self> {
        Self::new(coords.iter().map(|c| Point::new(c[0], c[1], c[2])).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.features.as_ref().map(|f| f[0].len())
    }

    /// Raw coordinates as per-point 3-vectors.
    pub fn coordinate_features(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| vec![p.x, p.y, p.z]).collect()
    }

    pub fn translated(&self, offset: &Vec3) -> Self {
        Self {
            points: self.points.iter().map(|p| p + offset).collect(),
            features: self.features.clone(),
        }
    }

    pub fn transformed(&self, transform: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| transform.apply(p)).collect(),
            features: self.features.clone(),
        }
    }
}

/// Per-point displacement vectors aligned with a source cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    vectors: Vec<Vec3>,
}

impl FlowField {
    pub fn new(vectors: Vec<Vec3>) -> Result<Self> {
        if !vectors.iter().all(|v| all_finite(v.as_slice())) {
            return Err(Error::NonFinite("flow field"));
        }
        Ok(Self { vectors })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            vectors: vec![Vec3::zeros(); n],
        }
    }

    pub fn constant(n: usize, v: Vec3) -> Self {
        Self { vectors: vec![v; n] }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec3> {
        self.vectors
    }

    pub fn check_aligned(&self, n: usize) -> Result<()> {
        if self.vectors.len() != n {
            return Err(Error::MisalignedFlow {
                expected: n,
                actual: self.vectors.len(),
            });
        }
        Ok(())
    }

    /// Largest per-point Euclidean distance between two aligned fields.
    pub fn max_difference(&self, other: &FlowField) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Proper rigid motion `p -> R p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    /// Set when the transform came from a rank-deficient fit.
    pub degenerate: bool,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self::from_translation(Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
            degenerate: false,
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
            degenerate: false,
        }
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64, translation: Vec3) -> Self {
        let rotation = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        Self::new(*rotation.matrix(), translation)
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.rotation * p.coords + self.translation)
    }

    /// Displacement `R p + t - p` induced at `p`.
    pub fn flow_at(&self, p: &Point) -> Vec3 {
        self.rotation * p.coords + self.translation - p.coords
    }

    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform::new(rt, -(rt * self.translation))
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let ortho = (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm();
        ortho <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Twelve numbers, row-major rotation followed by translation.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    /// Flow field this transform induces on every point of `cloud`.
    pub fn flow_on(&self, cloud: &PointCloud) -> FlowField {
        FlowField {
            vectors: cloud.points().iter().map(|p| self.flow_at(p)).collect(),
        }
    }
}

impl std::fmt::Display for RigidTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.to_row_major().iter().map(|v| format!("{v}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Per-point unit normals plus a mask marking which ones were estimated
/// from a non-degenerate neighborhood.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalField {
    pub normals: Vec<Vec3>,
    pub valid: Vec<bool>,
}

impl NormalField {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Normals all equal to `n`, e.g. for clouds read with stored normals.
    pub fn uniform(count: usize, n: Vec3) -> Self {
        Self {
            normals: vec![n.normalize(); count],
            valid: vec![true; count],
        }
    }
}

/// Moves every point by its flow vector.
pub fn warp(cloud: &PointCloud, flow: &FlowField) -> Result<PointCloud> {
    flow.check_aligned(cloud.len())?;
    let points = cloud.points().iter().zip(flow.vectors()).map(|(p, v)| p + v).collect();
    Ok(PointCloud {
        points,
        features: cloud.features.clone(),
    })
}
