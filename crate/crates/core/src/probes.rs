//! Reproducible probe ensembles for operator diagnostics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::spatial::{Grid, WaveFunction};

/// Normalised probe states plus a record of how they were drawn.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub description: ProbeDescription,
    pub states: Vec<WaveFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeDescription {
    pub kind: String,
    pub count: usize,
    pub seed: Option<u64>,
}

impl ProbeSet {
    /// Fixed-seed mixture: three quarters random Gaussian packets, one
    /// quarter band-limited noise.
    pub fn standard(grid: &Grid, count: usize, seed: u64) -> Self {
        let n_noise = count / 4;
        let mut states = gaussian_probes(grid, count - n_noise, seed);
        states.extend(band_limited_noise(grid, n_noise, 0.25, seed ^ 0x9e37_79b9_7f4a_7c15));
        Self {
            description: ProbeDescription { kind: "gaussian+band-limited-noise".into(), count, seed: Some(seed) },
            states,
        }
    }

    /// Every grid plane wave `e^{ik·x}`, normalised; at most `limit` of them,
    /// taken in FFT order.
    pub fn plane_waves(grid: &Grid, limit: usize) -> Self {
        let volume: f64 = grid.lengths().iter().product();
        let amp = 1.0 / volume.sqrt();
        let ks = grid.wavenumber_arrays();
        let xs = grid.coordinate_arrays();
        let states: Vec<WaveFunction> = (0..grid.len().min(limit))
            .map(|m| {
                let values = (0..grid.len())
                    .map(|i| {
                        let phase: f64 = ks.iter().zip(&xs).map(|(k, x)| k[m] * x[i]).sum();
                        Complex64::from_polar(amp, phase)
                    })
                    .collect();
                WaveFunction::from_parts(grid.clone(), values)
            })
            .collect();
        Self {
            description: ProbeDescription { kind: "plane-waves".into(), count: states.len(), seed: None },
            states,
        }
    }
}

/// Random normalised Gaussian packets with centres, widths and boosts
/// drawn from a ChaCha stream seeded by `seed`.
pub fn gaussian_probes(grid: &Grid, count: usize, seed: u64) -> Vec<WaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.dim();
    let h_max = (0..n).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let l_min = grid.lengths().iter().copied().fold(f64::INFINITY, f64::min);
    let k_max = std::f64::consts::PI / h_max;
    let sigma_lo = 3.0 * h_max;
    let sigma_hi = (l_min / 12.0).max(sigma_lo * 1.01);
    (0..count)
        .map(|_| {
            let sigma = rng.gen_range(sigma_lo..sigma_hi);
            let center: Vec<f64> = grid
                .lengths()
                .iter()
                .map(|l| {
                    let room = (0.5 * l - 6.0 * sigma).max(0.0);
                    if room > 0.0 {
                        rng.gen_range(-room..room)
                    } else {
                        0.0
                    }
                })
                .collect();
            let boost: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.25 * k_max..0.25 * k_max)).collect();
            // built directly: on very small grids the packet need not clear the boundary
            let psi = WaveFunction::from_fn(grid, |x| {
                let mut r2 = 0.0;
                let mut phase = 0.0;
                for a in 0..n {
                    r2 += (x[a] - center[a]).powi(2);
                    phase += boost[a] * x[a];
                }
                Complex64::from_polar((-0.5 * r2 / (sigma * sigma)).exp(), phase)
            });
            psi.normalized().expect("Gaussian probe has non-zero norm")
        })
        .collect()
}

/// Random states whose Fourier coefficients are supported on
/// `|k_j| ≤ fraction·k_max` for every axis.
pub fn band_limited_noise(grid: &Grid, count: usize, fraction: f64, seed: u64) -> Vec<WaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ks = grid.wavenumber_arrays();
    let cut: Vec<f64> = (0..grid.dim()).map(|a| fraction * std::f64::consts::PI / grid.spacing(a)).collect();
    (0..count)
        .map(|_| {
            let mut values: Vec<Complex64> = (0..grid.len())
                .map(|i| {
                    if ks.iter().zip(&cut).all(|(k, c)| k[i].abs() <= *c) {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::default()
                    }
                })
                .collect();
            grid.fft_inverse(&mut values);
            WaveFunction::from_parts(grid.clone(), values).normalized().expect("noise has non-zero norm")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::make_grid;

    #[test]
    fn probes_are_normalised_and_reproducible() {
        let grid = make_grid(1, &[256], &[40.0]).unwrap();
        let a = ProbeSet::standard(&grid, 64, 11);
        let b = ProbeSet::standard(&grid, 64, 11);
        assert_eq!(a.states.len(), 64);
        for (p, q) in a.states.iter().zip(&b.states) {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            assert_eq!(p.values(), q.values());
        }
        let c = ProbeSet::standard(&grid, 64, 12);
        assert_ne!(a.states[0].values(), c.states[0].values());
    }

    #[test]
    fn plane_wave_probes_are_orthonormal() {
        let grid = make_grid(2, &[8], &[3.0]).unwrap();
        let p = ProbeSet::plane_waves(&grid, usize::MAX);
        assert_eq!(p.states.len(), 64);
        for i in 0..8 {
            for j in 0..8 {
                let ip = p.states[i].inner_product(&p.states[j]).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).norm() < 1e-13);
            }
        }
    }
}
