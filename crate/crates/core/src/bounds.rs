//! Discrete estimates of relative-bound constants for the perturbation
//! `W(s) = 2i β(s)·∇ + |β(s)|² + V` of `−Δ`, where `β(s) = b(0, s)`:
//! resolvent contraction norms, infinitesimal-bound constants and
//! graph-norm equivalence intervals.
//!
//! Probe-based quantities are lower estimates over a fixed ensemble,
//! never suprema.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{Generator, HamiltonianSpec};
use crate::probes::{band_limited_noise, ProbeDescription, ProbeSet};
use crate::spatial::{Grid, WaveFunction};

/// Relative change of successive power-iteration estimates at which the
/// iteration stops.
pub const POWER_TOL: f64 = 1e-7;
pub const POWER_MAX_ITER: usize = 20_000;

/// `W(s)` frozen at one time: a momentum symbol plus a multiplier.
struct Perturbation {
    grid: Grid,
    symbol: Vec<f64>,
    potential: Vec<f64>,
}

impl Perturbation {
    fn new(spec: &HamiltonianSpec, s: f64) -> Result<Self> {
        if !matches!(spec.generator(), Generator::DipoleVelocity(_)) {
            return Err(Error::UnsupportedSpec("relative bounds are taken for the velocity-gauge dipole generator".into()));
        }
        let grid = spec.grid().clone();
        let beta = spec.dipole_vector(s);
        let beta_sq: f64 = beta.iter().map(|b| b * b).sum();
        let ks = grid.wavenumber_arrays();
        // 2iβ·∇ has symbol −2β·k
        let symbol =
            (0..grid.len()).map(|i| beta_sq - 2.0 * ks.iter().zip(&beta).map(|(k, b)| k[i] * b).sum::<f64>()).collect();
        Ok(Self { grid, symbol, potential: spec.potential().samples().to_vec() })
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = x.to_vec();
        self.grid.fft_forward(&mut out);
        out.iter_mut().zip(&self.symbol).for_each(|(z, s)| *z *= s);
        self.grid.fft_inverse(&mut out);
        for ((o, z), v) in out.iter_mut().zip(x).zip(&self.potential) {
            *o += z * v;
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.symbol.iter().all(|&s| s == 0.0) && self.potential.iter().all(|&v| v == 0.0)
    }
}

fn euclid(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn resolvent(grid: &Grid, k2: &[f64], alpha: f64, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = x.to_vec();
    grid.fft_forward(&mut out);
    out.iter_mut().zip(k2).for_each(|(z, k)| *z /= k + alpha);
    grid.fft_inverse(&mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    pub alpha: f64,
    /// Estimate of `‖W(s)(−Δ + α)⁻¹‖`.
    pub q: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionScan {
    pub time: f64,
    pub estimates: Vec<ContractionEstimate>,
    /// Smallest sampled `α` with `q < 1`.
    pub alpha_star: Option<f64>,
    pub nonincreasing: bool,
}

/// Power iteration on `(WR)*(WR)` with `R = (−Δ + α)⁻¹`; both factors are
/// self-adjoint, so the normal operator is `R W W R`.
fn contraction_norm(w: &Perturbation, k2: &[f64], alpha: f64, seed: u64) -> Result<ContractionEstimate> {
    if w.is_zero() {
        return Ok(ContractionEstimate { alpha, q: 0.0, iterations: 0 });
    }
    let grid = &w.grid;
    let mut x = band_limited_noise(grid, 1, 1.0, seed).remove(0).into_values();
    let mut q_prev = 0.0;
    for it in 1..=POWER_MAX_ITER {
        let nx = euclid(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        let wr = w.apply(&resolvent(grid, k2, alpha, &x));
        let q = euclid(&wr);
        if q == 0.0 {
            return Ok(ContractionEstimate { alpha, q, iterations: it });
        }
        if (q - q_prev).abs() <= POWER_TOL * q {
            return Ok(ContractionEstimate { alpha, q, iterations: it });
        }
        q_prev = q;
        x = resolvent(grid, k2, alpha, &w.apply(&wr));
    }
    Err(Error::NotConverged(format!("power iteration stagnated at α = {alpha}")))
}

/// `q(α)` for each `α` at time `s`.
pub fn contraction_scan(spec: &HamiltonianSpec, s: f64, alphas: &[f64], seed: u64) -> Result<ContractionScan> {
    if alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Config("contraction scan needs positive α".into()));
    }
    let w = Perturbation::new(spec, s)?;
    let k2 = w.grid.k_squared();
    let estimates: Vec<ContractionEstimate> =
        alphas.par_iter().map(|&a| contraction_norm(&w, &k2, a, seed)).collect::<Result<_>>()?;
    let mut order: Vec<&ContractionEstimate> = estimates.iter().collect();
    order.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    // power-iteration estimates carry their stopping tolerance
    let nonincreasing = order.windows(2).all(|p| p[1].q <= p[0].q * (1.0 + 10.0 * POWER_TOL));
    let alpha_star = order.iter().find(|e| e.q < 1.0).map(|e| e.alpha);
    Ok(ContractionScan { time: s, estimates, alpha_star, nonincreasing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfinitesimalBound {
    pub epsilon: f64,
    /// Smallest `C` with `‖Wψ‖² ≤ ε‖Δψ‖² + C‖ψ‖²` over the probes.
    pub c_eps: f64,
}

/// `C_ε` for each `ε` over the probe states.
pub fn infinitesimal_bound_scan(
    spec: &HamiltonianSpec,
    s: f64,
    epsilons: &[f64],
    probes: &[WaveFunction],
) -> Result<Vec<InfinitesimalBound>> {
    let w = Perturbation::new(spec, s)?;
    let terms: Vec<(f64, f64, f64)> = probes
        .par_iter()
        .map(|p| {
            if p.grid() != &w.grid {
                return Err(Error::GridMismatch);
            }
            let dv = w.grid.cell_volume();
            let wp = euclid(&w.apply(p.values())).powi(2) * dv;
            let lap = p.spectral_laplacian().norm_sqr();
            Ok((wp, lap, p.norm_sqr()))
        })
        .collect::<Result<_>>()?;
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let c = terms.iter().map(|(wp, lap, n)| (wp - eps * lap) / n).fold(0.0, f64::max);
            InfinitesimalBound { epsilon: eps, c_eps: c }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNormInterval {
    pub alpha: f64,
    pub c_min: f64,
    pub c_max: f64,
}

/// Range over probes of `‖ψ‖_{2,2} / (‖ψ‖ + ‖(H(t) + α)ψ‖)` where
/// `‖ψ‖_{2,2} = ‖(1 + k² + k⁴)^{1/2} ψ̂‖`.
pub fn graph_norm_constants(
    spec: &HamiltonianSpec,
    t: f64,
    alpha: f64,
    probes: &[WaveFunction],
) -> Result<GraphNormInterval> {
    let grid = spec.grid();
    let frozen = spec.frozen(t);
    let k2 = grid.k_squared();
    let weight: Vec<f64> = k2.iter().map(|k| 1.0 + k + k * k).collect();
    let ratios: Vec<f64> = probes
        .par_iter()
        .map(|p| {
            if p.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let n = p.norm();
            if n == 0.0 {
                return Err(Error::InvalidState("zero-norm probe".into()));
            }
            let mut hat = p.values().to_vec();
            grid.fft_forward(&mut hat);
            // Parseval for the unnormalised transform
            let sobolev =
                (hat.iter().zip(&weight).map(|(z, w)| z.norm_sqr() * w).sum::<f64>() * grid.cell_volume()
                    / grid.len() as f64)
                    .sqrt();
            let mut hp = frozen.apply(p);
            hp.values_mut().iter_mut().zip(p.values()).for_each(|(h, z)| *h += z * alpha);
            Ok(sobolev / (n + hp.norm()))
        })
        .collect::<Result<_>>()?;
    let c_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(GraphNormInterval { alpha, c_min, c_max })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub grid_points: Vec<usize>,
    pub grid_lengths: Vec<f64>,
    pub time: f64,
    pub alphas: Vec<f64>,
    pub contraction: ContractionScan,
    pub epsilons: Vec<f64>,
    pub infinitesimal: Vec<InfinitesimalBound>,
    pub graph_norm: Vec<GraphNormInterval>,
    pub probes: ProbeDescription,
}

/// All three estimates for the dipole generator at time `s`.
pub fn bounds_report(
    spec: &HamiltonianSpec,
    s: f64,
    alphas: &[f64],
    epsilons: &[f64],
    graph_alphas: &[f64],
    probes: &ProbeSet,
) -> Result<BoundsReport> {
    let contraction = contraction_scan(spec, s, alphas, probes.description.seed.unwrap_or(0))?;
    let infinitesimal = infinitesimal_bound_scan(spec, s, epsilons, &probes.states)?;
    let graph_norm =
        graph_alphas.iter().map(|&a| graph_norm_constants(spec, s, a, &probes.states)).collect::<Result<_>>()?;
    Ok(BoundsReport {
        grid_points: spec.grid().points().to_vec(),
        grid_lengths: spec.grid().lengths().to_vec(),
        time: s,
        alphas: alphas.to_vec(),
        contraction,
        epsilons: epsilons.to_vec(),
        infinitesimal,
        graph_norm,
        probes: probes.description.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{LaserEnvelope, ScaledField};
    use crate::hamiltonians::PotentialModel;
    use crate::spatial::make_grid;
    use std::f64::consts::PI;

    fn dipole_spec(grid: &Grid, model: PotentialModel, amplitude: f64) -> HamiltonianSpec {
        let env = LaserEnvelope::plane_wave(amplitude, vec![1.0], vec![1.0]).unwrap();
        let field = ScaledField::new(env, grid.lengths()[0], 1.0).unwrap();
        HamiltonianSpec::new(Generator::DipoleVelocity(field), model.sample(grid).unwrap()).unwrap()
    }

    #[test]
    fn zero_perturbation() {
        let grid = make_grid(1, &[64], &[20.0]).unwrap();
        let spec = dipole_spec(&grid, PotentialModel::Zero, 0.0);
        let scan = contraction_scan(&spec, 0.3, &[1.0, 10.0], 1).unwrap();
        assert!(scan.estimates.iter().all(|e| e.q == 0.0));
        let probes = ProbeSet::standard(&grid, 64, 2);
        let c = infinitesimal_bound_scan(&spec, 0.3, &[0.0, 0.1], &probes.states).unwrap();
        assert!(c.iter().all(|b| b.c_eps == 0.0));
    }

    #[test]
    fn free_constant_coupling_matches_symbol_maximum() {
        // β = 1: W has symbol 1 − 2k, so q(α) = max_k |1 − 2k|/(k² + α) = 2/(√(1 + 4α) − 1)
        let grid = make_grid(1, &[2048], &[400.0]).unwrap();
        // cw with E = ω = 1 at t = −π/2 gives a(0, ωt) = sin(π/2) = 1
        let spec = dipole_spec(&grid, PotentialModel::Zero, 1.0);
        let s = -PI / 2.0;
        assert!((spec.dipole_vector(s)[0] - 1.0).abs() < 1e-15);
        let alphas = [0.5, 2.0, 10.0];
        let scan = contraction_scan(&spec, s, &alphas, 5).unwrap();
        for e in &scan.estimates {
            let closed = 2.0 / ((1.0 + 4.0 * e.alpha).sqrt() - 1.0);
            let discrete = grid.wavenumbers(0).iter().map(|k| (1.0 - 2.0 * k).abs() / (k * k + e.alpha)).fold(0.0, f64::max);
            assert!((e.q - discrete).abs() <= 1e-3 * discrete, "{} vs {discrete}", e.q);
            assert!((e.q - closed).abs() <= 1e-3 * closed, "{} vs {closed}", e.q);
        }
        assert!(scan.nonincreasing);
    }

    #[test]
    fn soft_core_contraction_decays() {
        let grid = make_grid(1, &[256], &[80.0]).unwrap();
        let spec = dipole_spec(&grid, PotentialModel::SoftCoreCoulomb { z: 1.0, eps: 1.0 }, 1.0);
        let alphas = [0.1, 1.0, 10.0, 100.0, 1000.0];
        let scan = contraction_scan(&spec, 0.0, &alphas, 3).unwrap();
        assert!(scan.nonincreasing);
        let star = scan.alpha_star.unwrap();
        assert!(scan.estimates.iter().filter(|e| e.alpha >= star).all(|e| e.q < 1.0));
        let last = &scan.estimates[scan.estimates.len() - 2..];
        assert!(last[0].q >= 5.0 * last[1].q, "{last:?}");
    }

    #[test]
    fn infinitesimal_bound_of_bounded_potential() {
        let grid = make_grid(1, &[256], &[80.0]).unwrap();
        let spec = dipole_spec(&grid, PotentialModel::SoftCoreCoulomb { z: 1.0, eps: 1.0 }, 1.0);
        let probes = ProbeSet::standard(&grid, 64, 4);
        let vmax = spec.potential().samples().iter().map(|v| v.abs()).fold(0.0, f64::max);
        let eps = [0.0, 0.01, 0.1, 1.0];
        let c = infinitesimal_bound_scan(&spec, 0.0, &eps, &probes.states).unwrap();
        assert!(c[0].c_eps <= vmax * vmax);
        assert!(c.windows(2).all(|w| w[1].c_eps <= w[0].c_eps));
    }

    #[test]
    fn free_graph_norm_matches_symbol() {
        let grid = make_grid(1, &[64], &[20.0]).unwrap();
        let spec = dipole_spec(&grid, PotentialModel::Zero, 0.0);
        let waves = ProbeSet::plane_waves(&grid, usize::MAX);
        for alpha in [10.0, 100.0] {
            let got = graph_norm_constants(&spec, 0.0, alpha, &waves.states).unwrap();
            let symbol: Vec<f64> =
                grid.wavenumbers(0).iter().map(|k| (1.0 + k * k + k.powi(4)).sqrt() / (1.0 + k * k + alpha)).collect();
            let lo = symbol.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = symbol.iter().copied().fold(0.0, f64::max);
            assert!((got.c_min - lo).abs() < 1e-6 && (got.c_max - hi).abs() < 1e-6, "{got:?} vs [{lo}, {hi}]");
        }
    }

    #[test]
    fn reproducible_and_positive_on_probes() {
        let grid = make_grid(1, &[256], &[80.0]).unwrap();
        let spec = dipole_spec(&grid, PotentialModel::SoftCoreCoulomb { z: 1.0, eps: 1.0 }, 1.0);
        let probes = ProbeSet::standard(&grid, 64, 9);
        let a = bounds_report(&spec, 0.0, &[1.0, 10.0], &[0.0, 0.5], &[1.0, 10.0], &probes).unwrap();
        let b = bounds_report(&spec, 0.0, &[1.0, 10.0], &[0.0, 0.5], &[1.0, 10.0], &probes).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.graph_norm.iter().all(|g| g.c_min > 0.0 && g.c_max.is_finite()));
    }
}
