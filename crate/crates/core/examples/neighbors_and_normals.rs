//! k-nearest-neighbor queries and PCA normals on a noisy sphere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rigidflow::knn::self_neighbors;
use rigidflow::{estimate_normals, knn_search, Point, PointCloud};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<Point> = (0..4000)
        .map(|_| {
            let d: [f64; 3] = UnitSphere.sample(&mut rng);
            Point::new(d[0], d[1], d[2]) * 2.0
        })
        .collect();
    let cloud = PointCloud::new(points).unwrap();

    let graph = self_neighbors(&cloud, 8).unwrap();
    let mean_dist: f64 = (0..cloud.len())
        .map(|i| (cloud.point(graph.of(i)[0]) - cloud.point(i)).norm())
        .sum::<f64>()
        / cloud.len() as f64;
    println!("{} points, mean nearest-neighbor distance {mean_dist:.4}", cloud.len());

    let probe = PointCloud::from_slices(&[[0.0, 0.0, 2.0], [2.0, 0.0, 0.0]]).unwrap();
    let hits = knn_search(&cloud, &probe, 3).unwrap();
    for (q, nbrs) in probe.points().iter().zip(&hits.neighbors) {
        println!("nearest to {:?}: {nbrs:?}", q.coords.as_slice());
    }

    let normals = estimate_normals(&cloud, 16).unwrap();
    // On a sphere the normal is parallel to the position vector.
    let worst = (0..cloud.len())
        .map(|i| 1.0 - normals.normals[i].dot(&cloud.point(i).coords.normalize()).abs())
        .fold(0.0, f64::max);
    let valid = normals.valid.iter().filter(|v| **v).count();
    println!("normals: {valid}/{} valid, worst 1 - |cos| = {worst:.2e}", cloud.len());
}
