//! Brute-force reference propagator: the generator is assembled as a dense
//! matrix from explicit DFT-sum derivative matrices and exponentiated by
//! eigendecomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonians::{CouplingForm, Generator, HamiltonianSpec};
use crate::spatial::{Grid, WaveFunction};

/// Largest grid (total points) the dense oracle accepts.
pub const DENSE_MAX_POINTS: usize = 64;

type CMat = DMatrix<Complex64>;

/// `D[j, l] = (1/N) Σ_m i k_m e^{i k_m (x_j − x_l)}` along one axis.
fn derivative_1d(grid: &Grid, axis: usize) -> CMat {
    let n = grid.points()[axis];
    let h = grid.spacing(axis);
    let ks = grid.wavenumbers(axis);
    DMatrix::from_fn(n, n, |j, l| {
        let dx = (j as f64 - l as f64) * h;
        ks.iter().map(|&k| Complex64::new(0.0, k) * Complex64::from_polar(1.0, k * dx)).sum::<Complex64>()
            / n as f64
    })
}

/// The 1D matrix lifted to act on `axis` of the full tensor grid.
fn derivative(grid: &Grid, axis: usize) -> CMat {
    let d1 = derivative_1d(grid, axis);
    let n = grid.len();
    let na = grid.points()[axis];
    let stride = grid.stride(axis);
    let mut m = CMat::zeros(n, n);
    for p in 0..n {
        let pa = grid.axis_index(p, axis);
        let base = p - pa * stride;
        for qa in 0..na {
            m[(p, base + qa * stride)] = d1[(pa, qa)];
        }
    }
    m
}

fn diag(values: impl Iterator<Item = f64>) -> CMat {
    let v: Vec<Complex64> = values.map(|x| Complex64::new(x, 0.0)).collect();
    CMat::from_diagonal(&nalgebra::DVector::from_vec(v))
}

/// Dense matrix of the generator at time `t`.
pub fn dense_hamiltonian(spec: &HamiltonianSpec, t: f64) -> Result<DMatrix<Complex64>> {
    let grid = spec.grid();
    let n = grid.len();
    if n > DENSE_MAX_POINTS {
        return Err(Error::SizeCap(format!("dense oracle takes at most {DENSE_MAX_POINTS} points, grid has {n}")));
    }
    let dim = grid.dim();
    let field = spec.field();
    let d = field.dim();
    let positions: Vec<Vec<f64>> = (0..n).map(|i| grid.position(i)).collect();
    let mut h = diag(spec.potential().samples().iter().copied());
    let i = Complex64::new(0.0, 1.0);
    for axis in 0..dim {
        let p = derivative(grid, axis) * (-i);
        let (k, c) = (axis / d, axis % d);
        match spec.generator() {
            Generator::FullCoupling(_) => {
                let b = diag(positions.iter().map(|x| field.coupling(&x[k * d..(k + 1) * d], t)[c]));
                h += match spec.form() {
                    CouplingForm::MinimalSquare => {
                        let q = &p - &b;
                        &q * &q
                    }
                    CouplingForm::CoulombExpanded => &p * &p - (&b * &p) * Complex64::new(2.0, 0.0) + &b * &b,
                };
            }
            Generator::DipoleVelocity(_) => {
                let beta = field.dipole_coupling(t)[c];
                let q = &p - CMat::identity(n, n) * Complex64::new(beta, 0.0);
                h += &q * &q;
            }
            Generator::DipoleLength(_) => {
                let rate = field.dipole_coupling_rate(t)[c];
                h += &p * &p + diag(positions.iter().map(|x| rate * x[axis]));
            }
        }
    }
    Ok(h)
}

/// `exp(−i·dt·H)` for Hermitian `H`.
fn unitary(h: CMat, dt: f64) -> CMat {
    let eig = h.symmetric_eigen();
    let q = &eig.eigenvectors;
    let phases = nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -dt * e)),
    );
    q * CMat::from_diagonal(&phases) * q.adjoint()
}

/// Product of `steps` exact exponentials of the midpoint-frozen generator
/// from `t0` to `t`.
pub fn dense_oracle_evolve(
    spec: &HamiltonianSpec,
    psi0: &WaveFunction,
    t0: f64,
    t: f64,
    steps: usize,
) -> Result<WaveFunction> {
    if psi0.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    if spec.grid().len() > DENSE_MAX_POINTS {
        return Err(Error::SizeCap(format!(
            "dense oracle takes at most {DENSE_MAX_POINTS} points, grid has {}",
            spec.grid().len()
        )));
    }
    if steps == 0 {
        return Err(Error::Config("dense oracle needs at least one step".into()));
    }
    let dt = (t - t0) / steps as f64;
    let mut v = nalgebra::DVector::from_column_slice(psi0.values());
    for s in 0..steps {
        let h = dense_hamiltonian(spec, t0 + (s as f64 + 0.5) * dt)?;
        v = unitary(h, dt) * v;
    }
    WaveFunction::new(psi0.grid().clone(), v.iter().copied().collect())
}
