//! 3D and image-space scene flow metrics.

use rigidflow::evalbench::{compute_metrics, CameraIntrinsics};
use rigidflow::{FlowField, Point, PointCloud, Vec3};

fn main() {
    let positions = PointCloud::new((0..4).map(|i| Point::new(i as f64 - 1.5, 0.5, 12.0)).collect()).unwrap();
    let gt = FlowField::constant(4, Vec3::new(1.0, 0.0, 0.0));
    let pred = FlowField::new(vec![
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.03, 0.0, 0.0),
        Vec3::new(1.07, 0.0, 0.0),
        Vec3::new(1.5, 0.2, 0.0),
    ])
    .unwrap();
    let cam = CameraIntrinsics::new(721.5, 721.5, 609.6, 172.9).unwrap();
    let m = compute_metrics(&pred, &gt, &positions, Some(&cam)).unwrap();
    print!("{}", rigidflow::pipeline::write_metrics_report(&m));
}
