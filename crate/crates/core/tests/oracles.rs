//! Library results checked against independent reference computations.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SymmetricEigen, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidflow::conhcrf::{total_energy, CrfConfig, CrfModel, KernelObservations, KernelSpec, Observation};
use rigidflow::evalbench::{generate_scene, perturb_flow, sensitivity_sweep, SyntheticSceneSpec};
use rigidflow::flowembed::{
    baseline_initial_flow, embed_point, flow_embedding, softmax_over_neighbors, EmbeddingConfig, FlowEmbedder,
    MlpParams,
};
use rigidflow::rigidfit::{cross_covariance, fit_mse};
use rigidflow::{
    estimate_normals, kabsch_fit, knn_search, Correspondences, FlowField, Point, PointCloud, RigidTransform,
    SegmenterConfig, SupervoxelPartition, Vec3,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_vec(r: &mut ChaCha8Rng, s: f64) -> Vec3 {
    Vec3::new(r.random_range(-s..s), r.random_range(-s..s), r.random_range(-s..s))
}

#[test]
fn kabsch_beats_so3_grid_search() {
    let mut r = rng(11);
    for _ in 0..4 {
        let src: Vec<Point> = (0..25).map(|_| Point::from(rand_vec(&mut r, 1.0))).collect();
        let truth = Rotation3::from_euler_angles(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 0.3);
        let dst: Vec<Point> = src
            .iter()
            .map(|p| truth * p + Vec3::new(0.5, -0.2, 1.0) + rand_vec(&mut r, 0.1))
            .collect();
        let c = Correspondences::new(src, dst).unwrap();
        let fit = kabsch_fit(&c);
        let best = fit_mse(&c, &fit);

        // Euler-angle grid with the optimal translation for each rotation.
        let (ps, pd) = rigidflow::rigidfit::centroids(&c);
        let mut grid_best = f64::INFINITY;
        let steps = 36;
        for a in 0..steps {
            for b in 0..steps / 2 {
                for g in 0..steps {
                    let rot = Rotation3::from_euler_angles(
                        -std::f64::consts::PI + a as f64 * std::f64::consts::TAU / steps as f64,
                        -std::f64::consts::FRAC_PI_2 + b as f64 * std::f64::consts::PI / (steps / 2) as f64,
                        -std::f64::consts::PI + g as f64 * std::f64::consts::TAU / steps as f64,
                    );
                    let t = pd.coords - rot * ps.coords;
                    let tf = RigidTransform::new(*rot.matrix(), t);
                    grid_best = grid_best.min(fit_mse(&c, &tf));
                }
            }
        }
        assert!(best <= grid_best + 1e-12, "kabsch {best} vs grid {grid_best}");
    }
}

#[test]
fn cross_covariance_matches_double_loop() {
    let mut r = rng(12);
    let src: Vec<Point> = (0..40).map(|_| Point::from(rand_vec(&mut r, 3.0))).collect();
    let dst: Vec<Point> = (0..40).map(|_| Point::from(rand_vec(&mut r, 3.0))).collect();
    let n = src.len() as f64;
    let ps = src.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / n;
    let pd = dst.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / n;
    let mut h = [[0.0; 3]; 3];
    for k in 0..src.len() {
        for a in 0..3 {
            for b in 0..3 {
                h[a][b] += (src[k][a] - ps[a]) * (dst[k][b] - pd[b]);
            }
        }
    }
    let got = cross_covariance(&Correspondences::new(src, dst).unwrap());
    for a in 0..3 {
        for b in 0..3 {
            assert!(
                (got[(a, b)] - h[a][b]).abs() < 1e-9,
                "({a},{b}) {} vs {}",
                got[(a, b)],
                h[a][b]
            );
        }
    }
}

#[test]
fn normals_match_eigen_oracle_on_rotated_plane() {
    let mut r = rng(13);
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(0.3, -1.0, 0.5)), 0.9);
    let pts: Vec<Point> = (0..200)
        .map(|_| {
            rot * Point::new(
                r.random_range(-2.0..2.0),
                r.random_range(-2.0..2.0),
                r.random_range(-0.01..0.01),
            )
        })
        .collect();
    let cloud = PointCloud::new(pts.clone()).unwrap();
    let normals = estimate_normals(&cloud, 12).unwrap();
    let graph = knn_search(&cloud, &cloud, 12).unwrap();
    for i in 0..pts.len() {
        let local: Vec<Vec3> = graph.of(i).iter().map(|&j| pts[j].coords).collect();
        let c = local.iter().sum::<Vec3>() / local.len() as f64;
        let cov = local
            .iter()
            .fold(Matrix3::zeros(), |s, p| s + (p - c) * (p - c).transpose());
        let eig = SymmetricEigen::new(cov);
        let k = eig.eigenvalues.imin();
        let expected = eig.eigenvectors.column(k).into_owned();
        assert!(normals.valid[i]);
        assert!(
            (normals.normals[i].dot(&expected).abs() - 1.0).abs() < 1e-9,
            "point {i}"
        );
        assert!(normals.normals[i].dot(&(rot * Vec3::z())).abs() > 0.99);
    }
}

#[test]
fn mlp_matches_dense_forward_oracle() {
    let widths = [7, 12, 9, 5];
    let mlp = MlpParams::seeded(&widths, 14).unwrap();
    let mut r = rng(14);
    for _ in 0..20 {
        let x: Vec<f64> = (0..7).map(|_| r.random_range(-2.0..2.0)).collect();
        let mut v = DVector::from_vec(x.clone());
        let last = mlp.layers.len() - 1;
        for (l, layer) in mlp.layers.iter().enumerate() {
            let w = DMatrix::from_row_slice(layer.outputs, layer.inputs, &layer.weight);
            v = w * v + DVector::from_vec(layer.bias.clone());
            if l != last {
                v = v.map(|a| a.max(0.0));
            }
        }
        let got = mlp.forward(&x).unwrap();
        for (a, b) in got.iter().zip(v.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn softmax_matches_exp_ratio() {
    let mut r = rng(15);
    let logits: Vec<Vec<f64>> = (0..9)
        .map(|_| (0..4).map(|_| r.random_range(-30.0..30.0)).collect())
        .collect();
    let got = softmax_over_neighbors(&logits);
    for c in 0..4 {
        let denom: f64 = logits.iter().map(|l| l[c].exp()).sum();
        for j in 0..logits.len() {
            let expected = logits[j][c].exp() / denom;
            assert!((got[j][c] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn flow_embedding_is_per_point_recomposition() {
    let scene = generate_scene(&SyntheticSceneSpec {
        body_count: 2,
        points_per_body: 40,
        seed: 16,
        ..Default::default()
    })
    .unwrap();
    let mut a = scene.cloud_t.clone();
    let mut b = scene.cloud_t1.clone();
    a.set_features(a.coordinate_features()).unwrap();
    b.set_features(b.coordinate_features()).unwrap();
    let embedder = FlowEmbedder::seeded(&EmbeddingConfig {
        neighbor_k: 8,
        seed: 16,
        ..Default::default()
    })
    .unwrap();
    let graph = knn_search(&b, &a, 8).unwrap();
    let emb = flow_embedding(&a, &b, &graph, &embedder).unwrap();
    for i in 0..a.len() {
        assert_eq!(emb.vectors[i], embed_point(i, graph.of(i), &a, &b, &embedder).unwrap());
    }
}

#[test]
fn baseline_flow_matches_brute_force() {
    let mut r = rng(17);
    let t: Vec<Point> = (0..150).map(|_| Point::from(rand_vec(&mut r, 2.0))).collect();
    let t1: Vec<Point> = t
        .iter()
        .map(|p| p + Vec3::new(0.1, 0.0, -0.05) + rand_vec(&mut r, 0.05))
        .collect();
    let (k, tau) = (6, 0.05);
    let flow = baseline_initial_flow(
        &PointCloud::new(t.clone()).unwrap(),
        &PointCloud::new(t1.clone()).unwrap(),
        k,
        tau,
    )
    .unwrap();
    for (i, p) in t.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = t1
            .iter()
            .enumerate()
            .map(|(j, q)| ((q - p).norm_squared(), j))
            .collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let nearest = &d[..k];
        let w: Vec<f64> = nearest
            .iter()
            .map(|(d2, _)| (-(d2 - nearest[0].0) / tau).exp())
            .collect();
        let total: f64 = w.iter().sum();
        let expected = nearest
            .iter()
            .zip(&w)
            .fold(Vec3::zeros(), |acc, ((_, j), wj)| acc + (t1[*j] - p) * (wj / total));
        assert!((flow.vectors()[i] - expected).norm() < 1e-12, "point {i}");
    }
}

/// Least-squares rigid displacement at `p` from nalgebra's general SVD.
fn reference_rigid_flow(p: &Point, pos: &[Point], flows: &[Vec3]) -> Vec3 {
    let n = pos.len() as f64;
    let src_c = pos.iter().fold(Vec3::zeros(), |a, q| a + q.coords) / n;
    let dst: Vec<Vec3> = pos.iter().zip(flows).map(|(q, f)| q.coords + f).collect();
    let dst_c = dst.iter().sum::<Vec3>() / n;
    let h = pos.iter().zip(&dst).fold(Matrix3::zeros(), |a, (q, d)| {
        a + (q.coords - src_c) * (d - dst_c).transpose()
    });
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = vt.transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let rot = v * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, sign)) * u.transpose();
    let t = dst_c - rot * src_c;
    rot * p.coords + t - p.coords
}

#[test]
fn total_energy_matches_from_scratch_evaluation() {
    let scene = generate_scene(&SyntheticSceneSpec {
        body_count: 3,
        points_per_body: 10,
        noise_sigma: 0.05,
        seed: 18,
        ..Default::default()
    })
    .unwrap();
    let n = scene.cloud_t.len();
    let cfg = CrfConfig {
        kernels: vec![
            KernelSpec {
                alpha: 0.4,
                theta: 0.6,
                observation: Observation::Position,
            },
            KernelSpec {
                alpha: 0.2,
                theta: 0.5,
                observation: Observation::Normal,
            },
        ],
        beta: 1.3,
        knn_k: 5,
        ..CrfConfig::default()
    };
    let normals = estimate_normals(&scene.cloud_t, 8).unwrap();
    let obs = KernelObservations::from_cloud(&scene.cloud_t, Some(&normals), &cfg.kernels).unwrap();
    let model = CrfModel::new(&scene.cloud_t, &scene.initial_flow, &scene.body_labels, &obs, &cfg).unwrap();
    let mut r = rng(18);
    let y: Vec<Vec3> = scene
        .gt_flow
        .vectors()
        .iter()
        .map(|g| g + rand_vec(&mut r, 0.1))
        .collect();
    let got = total_energy(&model, &FlowField::new(y.clone()).unwrap()).unwrap();

    let pos = scene.cloud_t.points();
    let z = scene.initial_flow.vectors();
    let nrm = &normals.normals;
    let mut unary = 0.0;
    let mut pairwise = 0.0;
    for i in 0..n {
        unary += (y[i] - z[i]).norm_squared();
        // Brute-force neighbor list, self excluded, ties by index.
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((pos[j] - pos[i]).norm_squared(), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &d[..cfg.knn_k] {
            let kp = (-(pos[i] - pos[j]).norm_squared() / (2.0 * 0.6 * 0.6)).exp();
            let kn = (-(nrm[i] - nrm[j]).norm_squared() / (2.0 * 0.5 * 0.5)).exp();
            pairwise += (0.4 * kp + 0.2 * kn) * (y[i] - y[j]).norm_squared();
        }
    }
    let mut highorder = 0.0;
    for members in &scene.body_labels.regions {
        for &i in members {
            let others: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
            let op: Vec<Point> = others.iter().map(|&j| pos[j]).collect();
            let of: Vec<Vec3> = others.iter().map(|&j| y[j]).collect();
            highorder += 1.3 * (y[i] - reference_rigid_flow(&pos[i], &op, &of)).norm_squared();
        }
    }
    assert!((got.unary - unary).abs() < 1e-9 * unary.max(1.0));
    assert!(
        (got.pairwise - pairwise).abs() < 1e-9 * pairwise.max(1.0),
        "{} vs {pairwise}",
        got.pairwise
    );
    assert!(
        (got.highorder - highorder).abs() < 1e-9 * highorder.max(1.0),
        "{} vs {highorder}",
        got.highorder
    );
}

#[test]
fn perturbation_has_requested_spread() {
    let base = FlowField::constant(10_000, Vec3::new(0.5, 0.0, -1.0));
    let noisy = perturb_flow(&base, 0.05, 19).unwrap();
    for axis in 0..3 {
        let d: Vec<f64> = noisy
            .vectors()
            .iter()
            .zip(base.vectors())
            .map(|(a, b)| a[axis] - b[axis])
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        let std = var.sqrt();
        assert!((0.048..=0.052).contains(&std), "axis {axis}: std {std}");
    }
    assert_eq!(perturb_flow(&base, 0.0, 19).unwrap(), base);
    assert_eq!(perturb_flow(&base, 0.05, 19).unwrap(), noisy);
}

#[test]
fn generated_bodies_round_trip_through_rigid_fit() {
    for seed in 0..10 {
        let scene = generate_scene(&SyntheticSceneSpec {
            body_count: 4,
            points_per_body: 80,
            seed,
            ..Default::default()
        })
        .unwrap();
        for (b, members) in scene.body_labels.regions.iter().enumerate() {
            let src: Vec<Point> = members.iter().map(|&i| *scene.cloud_t.point(i)).collect();
            let dst: Vec<Point> = members.iter().map(|&i| *scene.cloud_t1.point(i)).collect();
            let fit = kabsch_fit(&Correspondences::new(src.clone(), dst).unwrap());
            let truth = &scene.transforms[b];
            assert!((fit.rotation - truth.rotation).norm() < 1e-6, "seed {seed} body {b}");
            assert!(
                (fit.translation - truth.translation).norm() < 1e-6,
                "seed {seed} body {b}"
            );
            for (k, &i) in members.iter().enumerate() {
                assert!((fit.flow_at(&src[k]) - scene.gt_flow.vectors()[i]).norm() < 1e-6);
            }
        }
    }
}

#[test]
fn sweep_prefers_body_sized_supervoxels() {
    for seed in 0..3 {
        let spec = SyntheticSceneSpec {
            body_count: 5,
            points_per_body: 150,
            noise_sigma: 0.05,
            seed: 20 + seed,
            ..Default::default()
        };
        let rows = sensitivity_sweep(&spec, &[140, 20], &CrfConfig::default(), &SegmenterConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].epe3d <= rows[1].epe3d, "seed {seed}: {rows:?}");

        // True labels bound both from below.
        let scene = generate_scene(&spec).unwrap();
        let normals = estimate_normals(&scene.cloud_t, 16).unwrap();
        let obs =
            KernelObservations::from_cloud(&scene.cloud_t, Some(&normals), &CrfConfig::default().kernels).unwrap();
        let oracle = rigidflow::conhcrf::refine(
            &scene.cloud_t,
            &scene.initial_flow,
            &scene.body_labels,
            &obs,
            &CrfConfig::default(),
        )
        .unwrap();
        let m = rigidflow::evalbench::compute_metrics(&oracle.flow, &scene.gt_flow, &scene.cloud_t, None).unwrap();
        assert!(
            m.epe3d <= rows[0].epe3d + 1e-9,
            "seed {seed}: oracle {} vs {rows:?}",
            m.epe3d
        );
    }
}

#[test]
fn singleton_partition_is_accepted_by_energy() {
    let cloud = PointCloud::from_slices(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
    let flow = FlowField::constant(3, Vec3::x());
    let cfg = CrfConfig {
        knn_k: 2,
        ..CrfConfig::rigid_only(1.0)
    };
    let obs = KernelObservations::from_cloud(&cloud, None, &cfg.kernels).unwrap();
    let part = SupervoxelPartition::from_labels(&[0, 1, 1]).unwrap();
    let model = CrfModel::new(&cloud, &flow, &part, &obs, &cfg).unwrap();
    let e = total_energy(&model, &flow).unwrap();
    assert_eq!(e.total(), 0.0);
}
