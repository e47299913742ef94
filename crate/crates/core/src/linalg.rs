//! Small dense 3x3 decompositions used by the rigid fit and normal estimation.
//!
//! Both routines are cyclic Jacobi sweeps. They are cheap for 3x3 inputs and
//! reach full double precision without pivoting heuristics.

use nalgebra::{Matrix3, Vector3};

const MAX_SWEEPS: usize = 64;

/// Thin SVD `a = u * diag(s) * v^T` with `s` sorted descending and both
/// `u` and `v` orthogonal (columns completed when `a` is rank deficient).
#[derive(Clone, Copy, Debug)]
pub struct Svd3 {
    pub u: Matrix3<f64>,
    pub singular_values: Vector3<f64>,
    pub v: Matrix3<f64>,
}

impl Svd3 {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.u * Matrix3::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}

/// One-sided Jacobi SVD of a 3x3 matrix.
pub fn svd3(a: &Matrix3<f64>) -> Svd3 {
    let mut w = *a;
    let mut v = Matrix3::identity();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha = w.column(p).norm_squared();
            let beta = w.column(q).norm_squared();
            let gamma = w.column(p).dot(&w.column(q));
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let t = if zeta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for m in [&mut w, &mut v] {
                for r in 0..3 {
                    let xp = m[(r, p)];
                    let xq = m[(r, q)];
                    m[(r, p)] = c * xp - s * xq;
                    m[(r, q)] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order = [0usize, 1, 2];
    let norms = [w.column(0).norm(), w.column(1).norm(), w.column(2).norm()];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = Matrix3::zeros();
    let mut vs = Matrix3::zeros();
    let mut s = Vector3::zeros();
    let scale = norms[order[0]];
    let tiny = scale * 1e-14;
    let mut rank = 0;
    for (k, &idx) in order.iter().enumerate() {
        s[k] = norms[idx];
        vs.set_column(k, &v.column(idx));
        if norms[idx] > tiny && norms[idx] > 0.0 {
            u.set_column(k, &(w.column(idx) / norms[idx]));
            rank += 1;
        }
    }
    complete_basis(&mut u, rank);
    Svd3 {
        u,
        singular_values: s,
        v: vs,
    }
}

/// Fills columns `rank..3` of `m` so that the columns form an orthonormal basis.
fn complete_basis(m: &mut Matrix3<f64>, rank: usize) {
    if rank >= 3 {
        return;
    }
    if rank == 0 {
        *m = Matrix3::identity();
        return;
    }
    if rank == 1 {
        let a: Vector3<f64> = m.column(0).into();
        let pick = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let b = (pick - a * a.dot(&pick)).normalize();
        m.set_column(1, &b);
    }
    let a: Vector3<f64> = m.column(0).into();
    let b: Vector3<f64> = m.column(1).into();
    m.set_column(2, &a.cross(&b));
}

/// Eigen-decomposition of a symmetric 3x3 matrix; eigenvalues ascending,
/// eigenvectors in the matching columns.
pub fn symmetric_eigen3(a: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut m = *a;
    let mut vecs = Matrix3::identity();
    for _ in 0..MAX_SWEEPS {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        let diag = m[(0, 0)].powi(2) + m[(1, 1)].powi(2) + m[(2, 2)].powi(2);
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            m = rot.transpose() * m * rot;
            m[(p, q)] = 0.0;
            m[(q, p)] = 0.0;
            vecs *= rot;
        }
    }
    let vals = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let mut out_vals = Vector3::zeros();
    let mut out_vecs = Matrix3::zeros();
    for (k, &idx) in order.iter().enumerate() {
        out_vals[k] = vals[idx];
        out_vecs.set_column(k, &vecs.column(idx));
    }
    (out_vals, out_vecs)
}
