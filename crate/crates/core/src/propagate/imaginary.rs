//! Ground states by imaginary-time relaxation.

use num_complex::Complex64;

use super::krylov;
use crate::error::{Error, Result};
use crate::hamiltonians::Potential;
use crate::spatial::{Grid, WaveFunction};

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: WaveFunction,
    /// `‖Hψ − Eψ‖` of the returned state.
    pub residual: f64,
    pub iterations: usize,
}

const SPLIT_STEPS: [(f64, usize); 2] = [(0.05, 4000), (0.01, 2000)];
const KRYLOV_DIM: usize = 40;
const MAX_REFINEMENTS: usize = 200;

fn kinetic_apply(grid: &Grid, k2: &[f64], v: &[f64], x: &[Complex64], y: &mut [Complex64]) {
    y.copy_from_slice(x);
    grid.fft_forward(y);
    y.iter_mut().zip(k2).for_each(|(z, k)| *z *= k);
    grid.fft_inverse(y);
    for ((o, z), p) in y.iter_mut().zip(x).zip(v) {
        *o += z * p;
    }
}

fn normalise(values: &mut [Complex64], dv: f64) {
    let n = (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv).sqrt();
    values.iter_mut().for_each(|z| *z /= n);
}

fn rayleigh(values: &[Complex64], hv: &[Complex64], dv: f64) -> (f64, f64) {
    let e: f64 = values.iter().zip(hv).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * dv;
    let r = (hv.iter().zip(values).map(|(h, z)| (h - z * e).norm_sqr()).sum::<f64>() * dv).sqrt();
    (e, r)
}

/// Largest potential value on the box faces `x_j = −L_j/2`; a state with
/// energy above it is not bound inside the box.
fn boundary_maximum(grid: &Grid, v: &[f64]) -> f64 {
    (0..grid.len())
        .filter(|&i| (0..grid.dim()).any(|a| grid.axis_index(i, a) == 0))
        .map(|i| v[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lowest eigenpair of `−Δ + V`: split-operator imaginary time from a
/// broad Gaussian, then restarted Lanczos polishing until the
/// eigen-residual is below `tol`.
pub fn ground_state_imaginary_time(potential: &Potential, tol: f64) -> Result<GroundState> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let grid = potential.grid();
    let v = potential.samples();
    let v_min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if v_max - v_min == 0.0 {
        return Err(Error::NoBoundState("the potential is constant".into()));
    }
    let dv = grid.cell_volume();
    let k2 = grid.k_squared();
    let width: Vec<f64> = grid.lengths().iter().map(|l| l / 8.0).collect();
    let mut values: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let r2: f64 = x.iter().zip(&width).map(|(x, w)| (x / w).powi(2)).sum();
            Complex64::new((-0.5 * r2).exp(), 0.0)
        })
        .collect();
    normalise(&mut values, dv);

    let mut iterations = 0;
    for (dtau, max_steps) in SPLIT_STEPS {
        let half: Vec<f64> = v.iter().map(|p| (-0.5 * dtau * (p - v_min)).exp()).collect();
        let kin: Vec<f64> = k2.iter().map(|k| (-dtau * k).exp()).collect();
        let mut last = f64::INFINITY;
        let mut hv = vec![Complex64::default(); grid.len()];
        for step in 0..max_steps {
            values.iter_mut().zip(&half).for_each(|(z, h)| *z *= h);
            grid.fft_forward(&mut values);
            values.iter_mut().zip(&kin).for_each(|(z, k)| *z *= k);
            grid.fft_inverse(&mut values);
            values.iter_mut().zip(&half).for_each(|(z, h)| *z *= h);
            normalise(&mut values, dv);
            iterations += 1;
            if step % 50 == 49 {
                kinetic_apply(grid, &k2, v, &values, &mut hv);
                let (e, _) = rayleigh(&values, &hv, dv);
                if (e - last).abs() < 1e-10 * (1.0 + e.abs()) {
                    break;
                }
                last = e;
            }
        }
    }

    let mut hv = vec![Complex64::default(); grid.len()];
    for _ in 0..MAX_REFINEMENTS {
        kinetic_apply(grid, &k2, v, &values, &mut hv);
        let (energy, residual) = rayleigh(&values, &hv, dv);
        if residual <= tol {
            let bound = boundary_maximum(grid, v);
            if energy >= bound - 1e-8 {
                return Err(Error::NoBoundState(format!(
                    "lowest energy {energy} is not below the boundary potential {bound}"
                )));
            }
            let state = WaveFunction::new(grid.clone(), values)?;
            return Ok(GroundState { energy, state, residual, iterations });
        }
        let mut op = |x: &[Complex64], y: &mut [Complex64]| kinetic_apply(grid, &k2, v, x, y);
        let (_, ritz) = krylov::lowest_ritz(&mut op, &values, KRYLOV_DIM);
        values = ritz;
        normalise(&mut values, dv);
        iterations += 1;
    }
    Err(Error::NotConverged(format!("ground state residual above {tol} after {MAX_REFINEMENTS} refinements")))
}
