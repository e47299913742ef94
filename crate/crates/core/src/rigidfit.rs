//! Closed-form least-squares rigid motion between corresponding point sets.
//!
//! The fit minimizes `(1/N) sum_j |R p_j + t - d_j|^2` over proper rotations.
//! With `H = sum_j (p_j - p_mean)(d_j - d_mean)^T = U S V^T`, the optimum is
//! `R = V diag(1, 1, det(V U^T)) U^T` and `t = d_mean - R p_mean`. The sign
//! correction on the last singular direction keeps `det(R) = +1` when the
//! best orthogonal map would be a reflection.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{Point, RigidTransform, Vec3};
use crate::linalg::svd3;

/// Ratio of the second to the first singular value of `H` below which the
/// fit is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-9;

/// Paired source and destination points.
#[derive(Clone, Debug)]
pub struct Correspondences {
    pub source: Vec<Point>,
    pub destination: Vec<Point>,
}

impl Correspondences {
    pub fn new(source: Vec<Point>, destination: Vec<Point>) -> Result<Self> {
        if source.len() != destination.len() {
            return Err(Error::LengthMismatch {
                expected: source.len(),
                actual: destination.len(),
            });
        }
        if source.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let finite = |p: &Point| p.coords.iter().all(|c| c.is_finite());
        if !source.iter().all(finite) || !destination.iter().all(finite) {
            return Err(Error::NonFinite("correspondences"));
        }
        Ok(Self { source, destination })
    }

    /// Source points with their positions displaced by `flows`.
    pub fn from_flow(source: Vec<Point>, flows: &[Vec3]) -> Result<Self> {
        let destination = source.iter().zip(flows).map(|(p, f)| p + f).collect();
        Self::new(source, destination)
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

fn mean(points: &[Point]) -> Point {
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    Point::from(sum / points.len() as f64)
}

pub fn centroids(c: &Correspondences) -> (Point, Point) {
    (mean(&c.source), mean(&c.destination))
}

pub fn cross_covariance(c: &Correspondences) -> Matrix3<f64> {
    let (ps, pd) = centroids(c);
    cross_covariance_about(c, &ps, &pd)
}

fn cross_covariance_about(c: &Correspondences, ps: &Point, pd: &Point) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for (p, d) in c.source.iter().zip(&c.destination) {
        h += (p - ps) * (d - pd).transpose();
    }
    h
}

pub fn kabsch_fit(c: &Correspondences) -> RigidTransform {
    let (ps, pd) = centroids(c);
    let h = cross_covariance_about(c, &ps, &pd);
    let svd = svd3(&h);
    let s = svd.singular_values;
    if c.len() < 3 || s[0] <= f64::MIN_POSITIVE || s[1] <= RANK_TOLERANCE * s[0] {
        return RigidTransform {
            degenerate: true,
            ..RigidTransform::from_translation(pd - ps)
        };
    }
    let d = (svd.v * svd.u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let rotation = svd.v * correction * svd.u.transpose();
    let translation = pd.coords - rotation * ps.coords;
    RigidTransform::new(rotation, translation)
}

/// Displacement `R p + t - p` of the rigid motion at `p`.
pub fn rigid_flow_at(transform: &RigidTransform, p: &Point) -> Vec3 {
    transform.flow_at(p)
}

/// Mean squared residual `(1/N) sum |R p + t - d|^2` of a transform.
pub fn fit_mse(c: &Correspondences, transform: &RigidTransform) -> f64 {
    c.source
        .iter()
        .zip(&c.destination)
        .map(|(p, d)| (transform.apply(p) - d).norm_squared())
        .sum::<f64>()
        / c.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(c: &[[f64; 3]]) -> Vec<Point> {
        c.iter().map(|v| Point::new(v[0], v[1], v[2])).collect()
    }

    #[test]
    fn centroid_of_two_points() {
        let c = Correspondences::new(pts(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), pts(&[[0.0; 3], [0.0; 3]])).unwrap();
        assert_eq!(centroids(&c).0, Point::new(1.0, 0.0, 0.0));
        let single = Correspondences::new(pts(&[[1.0, 2.0, 3.0]]), pts(&[[4.0, 5.0, 6.0]])).unwrap();
        assert_eq!(
            centroids(&single),
            (Point::new(1.0, 2.0, 3.0), Point::new(4.0, 5.0, 6.0))
        );
    }

    #[test]
    fn identity_correspondence_gives_symmetric_psd() {
        let src = pts(&[[0.0, 0.0, 0.0], [1.0, 0.2, 0.0], [0.3, 2.0, 0.1], [0.0, 0.5, 1.5]]);
        let c = Correspondences::new(src.clone(), src).unwrap();
        let h = cross_covariance(&c);
        assert!((h - h.transpose()).norm() < 1e-15);
        assert!(h.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12));
    }

    #[test]
    fn coincident_points_zero_covariance() {
        let c = Correspondences::new(pts(&[[1.0, 1.0, 1.0]; 4]), pts(&[[2.0, 0.0, 1.0]; 4])).unwrap();
        assert_eq!(cross_covariance(&c), Matrix3::zeros());
        let t = kabsch_fit(&c);
        assert!(t.degenerate);
        assert_eq!(t.rotation, Matrix3::identity());
        assert_eq!(t.translation, Vec3::new(1.0, -1.0, 0.0));
    }

    #[test]
    fn pure_translation() {
        let src = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let dst = src.iter().map(|p| p + Vec3::new(1.0, 2.0, 3.0)).collect();
        let t = kabsch_fit(&Correspondences::new(src, dst).unwrap());
        assert!(!t.degenerate);
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!((t.translation - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn quarter_turn_about_z() {
        let src = pts(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        let dst = pts(&[[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        let t = kabsch_fit(&Correspondences::new(src, dst).unwrap());
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((t.rotation - expected).norm() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn mirrored_destination_still_proper() {
        let src = pts(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0], [1.0, 1.0, 1.0]]);
        let dst = src.iter().map(|p| Point::new(p.x, p.y, -p.z)).collect();
        let t = kabsch_fit(&Correspondences::new(src, dst).unwrap());
        assert!(t.is_valid(1e-9));
    }

    #[test]
    fn collinear_falls_back_to_translation() {
        let src = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let dst = pts(&[[0.0, 1.0, 0.0], [0.0, 2.0, 0.0], [0.0, 3.0, 0.0]]);
        let t = kabsch_fit(&Correspondences::new(src, dst).unwrap());
        assert!(t.degenerate);
        assert_eq!(t.rotation, Matrix3::identity());
        assert!((t.translation - Vec3::new(-1.0, 2.0, 0.0)).norm() < 1e-12);
        let two = Correspondences::new(pts(&[[0.0; 3], [1.0, 0.0, 0.0]]), pts(&[[0.0; 3], [0.0, 1.0, 0.0]])).unwrap();
        assert!(kabsch_fit(&two).degenerate);
    }

    #[test]
    fn rigid_flow_examples() {
        let p = Point::new(1.0, 0.0, 0.0);
        assert_eq!(rigid_flow_at(&RigidTransform::identity(), &p), Vec3::zeros());
        let up = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 5.0));
        assert_eq!(
            rigid_flow_at(&up, &Point::new(-3.0, 7.0, 2.0)),
            Vec3::new(0.0, 0.0, 5.0)
        );
        let rz = RigidTransform::new(
            Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
            Vec3::zeros(),
        );
        assert_eq!(rigid_flow_at(&rz, &p), Vec3::new(-1.0, 1.0, 0.0));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(Correspondences::new(pts(&[[0.0; 3]]), vec![]).is_err());
        assert!(Correspondences::new(vec![], vec![]).is_err());
    }
}
