//! Over-segment a synthetic multi-body scene and check region purity.

use rigidflow::evalbench::{generate_scene, SyntheticSceneSpec};
use rigidflow::{estimate_normals, segment, SegmenterConfig};

fn main() {
    let scene = generate_scene(&SyntheticSceneSpec {
        body_count: 8,
        points_per_body: 500,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let normals = estimate_normals(&scene.cloud_t, 16).unwrap();

    for desired in [50, 140, 400] {
        let cfg = SegmenterConfig {
            desired_point_count: desired,
            ..SegmenterConfig::default()
        };
        let partition = segment(&scene.cloud_t, &normals, &cfg).unwrap();
        let sizes: Vec<usize> = partition.regions.iter().map(Vec::len).collect();
        // A region is pure when all of its points come from one body.
        let pure = partition
            .regions
            .iter()
            .filter(|r| {
                r.iter()
                    .all(|&i| scene.body_labels.labels[i] == scene.body_labels.labels[r[0]])
            })
            .count();
        println!(
            "desired {desired:>3}: {:>3} regions, sizes {}..{}, {pure} pure",
            partition.region_count(),
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap()
        );
    }
}
