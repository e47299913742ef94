//! Recover a rigid motion from noisy correspondences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidflow::rigidfit::fit_mse;
use rigidflow::{kabsch_fit, Correspondences, Point, RigidTransform, Vec3};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = RigidTransform::from_axis_angle(&Vec3::new(0.2, 1.0, -0.3), 0.6, Vec3::new(1.5, -0.4, 0.25));
    let source: Vec<Point> = (0..300)
        .map(|_| {
            Point::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();

    for noise in [0.0, 0.01, 0.05] {
        let destination = source
            .iter()
            .map(|p| {
                let e = Vec3::new(
                    rng.random_range(-noise..=noise),
                    rng.random_range(-noise..=noise),
                    rng.random_range(-noise..=noise),
                );
                truth.apply(p) + e
            })
            .collect();
        let c = Correspondences::new(source.clone(), destination).unwrap();
        let fit = kabsch_fit(&c);
        println!(
            "noise {noise:>5}: |R - R*|_F = {:.2e}  |t - t*| = {:.2e}  mse = {:.2e}  det = {:.6}",
            (fit.rotation - truth.rotation).norm(),
            (fit.translation - truth.translation).norm(),
            fit_mse(&c, &fit),
            fit.rotation.determinant()
        );
    }

    // A mirrored destination still yields a proper rotation.
    let mirrored = source.iter().map(|p| Point::new(-p.x, p.y, p.z)).collect();
    let fit = kabsch_fit(&Correspondences::new(source, mirrored).unwrap());
    println!("mirrored target: det = {:.6}\n{fit}", fit.rotation.determinant());
}
