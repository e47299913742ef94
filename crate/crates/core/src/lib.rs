//! Scene flow refinement between two point-cloud frames.
//!
//! An initial per-point flow is refined by mean-field inference in a
//! continuous CRF with three kinds of terms: fidelity to the initial flow,
//! Gaussian-weighted smoothness between neighbors, and a high-order term
//! that pulls every point toward the rigid motion of its supervoxel.
//!
//! Modules, bottom up:
//!
//! - [`geometry`], [`knn`], [`normals`], [`io`]: clouds, flows, search, formats
//! - [`rigidfit`]: closed-form rigid fit between corresponding point sets
//! - [`supervoxel`]: size-controlled over-segmentation
//! - [`conhcrf`]: the CRF energy and mean-field refinement
//! - [`flowembed`]: forward pass of the position-aware flow embedding
//! - [`evalbench`]: metrics, synthetic scenes, sensitivity sweeps
//! - [`pipeline`]: config files, reports and the file-to-file driver

pub mod conhcrf;
pub mod error;
pub mod evalbench;
pub mod flowembed;
pub mod geometry;
pub mod io;
pub mod knn;
pub mod linalg;
pub mod normals;
pub mod pipeline;
pub mod rigidfit;
pub mod supervoxel;

pub use error::{Error, Result};
pub use geometry::{warp, FlowField, NormalField, Point, PointCloud, RigidTransform, Vec3};
pub use knn::{knn_search, NeighborGraph};
pub use normals::estimate_normals;
pub use rigidfit::{kabsch_fit, Correspondences};
pub use supervoxel::{segment, SegmenterConfig, SupervoxelPartition};

impl Error {
    /// Process exit status for command-line front ends: 1 for unreadable or
    /// malformed input, 2 for configuration errors, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) => 2,
            Error::NonFinite(_) => 3,
            _ => 1,
        }
    }
}
