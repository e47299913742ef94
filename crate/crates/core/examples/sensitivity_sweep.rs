//! Refined EPE3D as a function of the desired supervoxel size.

use rigidflow::conhcrf::CrfConfig;
use rigidflow::evalbench::{format_sweep_table, sensitivity_sweep, SyntheticSceneSpec};
use rigidflow::SegmenterConfig;

fn main() {
    let spec = SyntheticSceneSpec {
        body_count: 8,
        points_per_body: 150,
        noise_sigma: 0.05,
        seed: 2,
        ..Default::default()
    };
    let rows = sensitivity_sweep(
        &spec,
        &[20, 50, 80, 100, 140, 200, 400],
        &CrfConfig::default(),
        &SegmenterConfig::default(),
    )
    .unwrap();
    print!("{}", format_sweep_table(&rows));
}
