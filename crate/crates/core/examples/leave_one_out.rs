//! Shared per-region rigid fit versus exact leave-one-out fits.

use std::time::Instant;

use rigidflow::conhcrf::{mean_field_step, regional_messages, CrfConfig, CrfModel, KernelObservations, MeanFieldState};
use rigidflow::evalbench::{generate_scene, SyntheticSceneSpec};
use rigidflow::{estimate_normals, segment, SegmenterConfig};

fn main() {
    let scene = generate_scene(&SyntheticSceneSpec {
        body_count: 32,
        points_per_body: 256,
        noise_sigma: 0.05,
        seed: 9,
        ..Default::default()
    })
    .unwrap();
    let cloud = &scene.cloud_t;
    let normals = estimate_normals(cloud, 16).unwrap();

    for desired in [50, 140, 400] {
        let partition = segment(
            cloud,
            &normals,
            &SegmenterConfig {
                desired_point_count: desired,
                ..SegmenterConfig::default()
            },
        )
        .unwrap();
        let cfg = CrfConfig::default();
        let obs = KernelObservations::from_cloud(cloud, Some(&normals), &cfg.kernels).unwrap();
        let approx = CrfModel::new(cloud, &scene.initial_flow, &partition, &obs, &cfg).unwrap();
        let exact = CrfModel {
            config: CrfConfig {
                exact_leave_one_out: true,
                ..cfg
            },
            ..approx.clone()
        };

        let t = Instant::now();
        regional_messages(&approx, &approx.initial);
        let fast = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        regional_messages(&exact, &exact.initial);
        let slow = t.elapsed().as_secs_f64() * 1e3;

        let a = mean_field_step(&approx, &MeanFieldState::initial(&approx)).unwrap();
        let e = mean_field_step(&exact, &MeanFieldState::initial(&exact)).unwrap();
        let diffs: Vec<f64> = a.mu.iter().zip(&e.mu).map(|(x, y)| (x - y).norm()).collect();
        let max = diffs.iter().copied().fold(0.0, f64::max);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        println!(
            "{:>3} regions: shared {fast:7.1} ms, exact {slow:8.1} ms ({:5.0}x); mu difference mean {mean:.1e} max {max:.1e}",
            partition.region_count(),
            slow / fast
        );
    }
}
