//! Scene-flow metrics and synthetic rigid scenes with known ground truth.

mod metrics;
mod sweep;
mod synth;

pub use metrics::{compute_metrics, CameraIntrinsics, MetricsReport, RELATIVE_EPS};
pub use sweep::{format_sweep_table, sensitivity_sweep, SweepRow};
pub use synth::{generate_scene, perturb_flow, SyntheticScene, SyntheticSceneSpec};
