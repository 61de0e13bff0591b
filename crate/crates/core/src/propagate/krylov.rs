//! Lanczos approximation of `exp(z·H)v` for Hermitian `H`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub(crate) struct KrylovOutcome {
    pub vector: Vec<Complex64>,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// First column of `exp(z·T)` for the symmetric tridiagonal `T`.
fn exp_tridiagonal_first_column(alpha: &[f64], beta: &[f64], z: Complex64) -> Vec<Complex64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|row| {
            (0..m)
                .map(|k| (z * eig.eigenvalues[k]).exp() * (q[(row, k)] * q[(0, k)]))
                .sum()
        })
        .collect()
}

/// Runs the Lanczos process with full reorthogonalisation until the
/// a-posteriori estimate `β_m·|[exp(zT_m)]_{m,1}|` (relative to `‖v‖`)
/// falls below `tol`. On failure returns the last residual estimate.
pub(crate) fn expm_apply(
    op: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    v: &[Complex64],
    z: Complex64,
    max_dim: usize,
    tol: f64,
) -> Result<KrylovOutcome, f64> {
    let n = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return Ok(KrylovOutcome { vector: vec![Complex64::default(); n] });
    }
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    let mut w = vec![Complex64::default(); n];
    let mut residual = f64::INFINITY;

    for j in 0..max_dim {
        op(&basis[j], &mut w);
        let scale = norm(&w);
        let a = dot(&basis[j], &w).re;
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        for vi in &basis {
            let c = dot(vi, &w);
            for (wk, vk) in w.iter_mut().zip(vi) {
                *wk -= vk * c;
            }
        }
        alpha.push(a);
        let b = norm(&w);
        let coeffs = exp_tridiagonal_first_column(&alpha, &beta, z);
        // invariant subspace: the projection is exact
        let breakdown = b <= 1e-14 * scale.max(f64::MIN_POSITIVE);
        residual = if breakdown { 0.0 } else { b * coeffs[j].norm() };
        if residual <= tol {
            let mut out = vec![Complex64::default(); n];
            for (c, vi) in coeffs.iter().zip(&basis) {
                let c = c * beta0;
                for (o, x) in out.iter_mut().zip(vi) {
                    *o += c * x;
                }
            }
            return Ok(KrylovOutcome { vector: out });
        }
        if j + 1 < max_dim {
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
    Err(residual)
}

/// Lowest Ritz pair of `op` on the Krylov space spanned from `v` with
/// `m` vectors. Returns `(value, vector)` with the vector normalised in
/// the Euclidean sense.
pub(crate) fn lowest_ritz(
    op: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    v: &[Complex64],
    m: usize,
) -> (f64, Vec<Complex64>) {
    let n = v.len();
    let beta0 = norm(v);
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![Complex64::default(); n];
    for j in 0..m {
        op(&basis[j], &mut w);
        let scale = norm(&w);
        alpha.push(dot(&basis[j], &w).re);
        for _ in 0..2 {
            for vi in &basis {
                let c = dot(vi, &w);
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= vk * c;
                }
            }
        }
        let b = norm(&w);
        if j + 1 == m || b <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty Krylov space");
    let mut out = vec![Complex64::default(); n];
    for (i, vi) in basis.iter().enumerate().take(k) {
        let c = eig.eigenvectors[(i, idx)];
        for (o, x) in out.iter_mut().zip(vi) {
            *o += x * c;
        }
    }
    let nn = norm(&out);
    out.iter_mut().for_each(|x| *x /= nn);
    (value, out)
}
