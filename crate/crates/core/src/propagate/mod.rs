//! Time evolution: Strang splitting for dipole generators, Lanczos
//! exponentiation for any generator, imaginary-time relaxation and a
//! dense-matrix reference propagator for tiny grids.
//!
//! Every real-time step freezes the generator at the step midpoint.

mod dense;
mod imaginary;
mod krylov;

pub use dense::{dense_hamiltonian, dense_oracle_evolve, DENSE_MAX_POINTS};
pub use imaginary::{ground_state_imaginary_time, GroundState};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{hermiticity_defect, FrozenHamiltonian, HamiltonianSpec};
use crate::probes::band_limited_noise;
use crate::spatial::WaveFunction;

/// Per-step norm drift allowed for the split-operator stepper.
pub const SPLIT_DRIFT_LIMIT: f64 = 1e-10;
/// Hermiticity defect above which Krylov propagation refuses to start.
pub const HERMITICITY_LIMIT: f64 = 1e-8;
/// How many times a non-converged Krylov step may be halved.
pub const MAX_HALVINGS: usize = 6;

const GUARD_PROBES: usize = 8;
const GUARD_SEED: u64 = 0x5eed_0f_9a4d;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    SplitStrang,
    Krylov { dim: usize, tol: f64 },
}

impl Method {
    pub const fn krylov_default() -> Self {
        Method::Krylov { dim: 24, tol: 1e-10 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::SplitStrang => "split-strang",
            Method::Krylov { .. } => "krylov",
        }
    }

    fn drift_limit(&self) -> f64 {
        match *self {
            Method::SplitStrang => SPLIT_DRIFT_LIMIT,
            Method::Krylov { tol, .. } => tol.max(SPLIT_DRIFT_LIMIT),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub method: Method,
    pub t0: f64,
    pub t_final: f64,
}

impl StepperConfig {
    pub fn new(dt: f64, method: Method, t0: f64, t_final: f64) -> Result<Self> {
        let cfg = Self { dt, method, t0, t_final };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t0 >= 0.0) || !(self.t_final >= self.t0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!(
                "need t_final >= t0 >= 0, got t0 = {}, t_final = {}",
                self.t0, self.t_final
            )));
        }
        if let Method::Krylov { dim, tol } = self.method {
            if !(8..=64).contains(&dim) {
                return Err(Error::Config(format!("Krylov dimension must lie in [8, 64], got {dim}")));
            }
            if !(tol > 0.0) {
                return Err(Error::Config(format!("Krylov tolerance must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub generator: String,
    pub method: Method,
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
    pub halvings: usize,
    /// Largest `|‖ψ_{n+1}‖ − ‖ψ_n‖|` over all steps.
    pub max_step_drift: f64,
    /// `‖ψ(t_final)‖ − ‖ψ0‖`.
    pub terminal_norm_drift: f64,
    pub sample_times: Vec<f64>,
    pub observables: Vec<ObservableRecord>,
    pub final_state: WaveFunction,
}

impl Trajectory {
    /// Writes the observable series as CSV with columns `t,observable,value`.
    pub fn write_observables_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,observable,value")?;
        for r in &self.observables {
            writeln!(w, "{:.17e},{},{:.17e}", r.t, r.name, r.value)?;
        }
        Ok(())
    }
}

/// Callback invoked at each requested sample time.
pub type Observer<'a> = dyn FnMut(f64, &WaveFunction) -> std::result::Result<(), String> + 'a;

fn norm_of(values: &[Complex64], dv: f64) -> f64 {
    (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv).sqrt()
}

fn split_in_place(frozen: &FrozenHamiltonian, values: &mut [Complex64], dt: f64) -> Result<()> {
    let (symbol, potential) = frozen
        .diagonal_parts()
        .ok_or_else(|| Error::UnsupportedSpec("split-operator stepping needs a dipole generator".into()))?;
    let half: Vec<Complex64> = potential.iter().map(|v| Complex64::from_polar(1.0, -0.5 * dt * v)).collect();
    values.iter_mut().zip(&half).for_each(|(z, h)| *z *= h);
    let grid = frozen.grid();
    grid.fft_forward(values);
    values.iter_mut().zip(symbol).for_each(|(z, s)| *z *= Complex64::from_polar(1.0, -dt * s));
    grid.fft_inverse(values);
    values.iter_mut().zip(&half).for_each(|(z, h)| *z *= h);
    Ok(())
}

fn krylov_in_place(frozen: &FrozenHamiltonian, values: &mut [Complex64], dt: f64, dim: usize, tol: f64) -> Result<()> {
    let mut op = |x: &[Complex64], y: &mut [Complex64]| frozen.apply_into(x, y);
    let out = krylov::expm_apply(&mut op, values, Complex64::new(0.0, -dt), dim, tol)
        .map_err(|residual| Error::KrylovNotConverged { residual, tol, dt })?;
    values.copy_from_slice(&out.vector);
    Ok(())
}

fn check_grid(spec: &HamiltonianSpec, psi: &WaveFunction) -> Result<()> {
    if psi.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// One Strang step `e^{−i dt/2 V_eff} e^{−i dt K(t_mid)} e^{−i dt/2 V_eff}`.
pub fn step_split(spec: &HamiltonianSpec, psi: &WaveFunction, t: f64, dt: f64) -> Result<WaveFunction> {
    check_grid(spec, psi)?;
    if !spec.generator().is_dipole() {
        return Err(Error::UnsupportedSpec("split-operator stepping needs a dipole generator".into()));
    }
    let mut values = psi.values().to_vec();
    split_in_place(&spec.frozen(t + 0.5 * dt), &mut values, dt)?;
    Ok(WaveFunction::from_parts(psi.grid().clone(), values))
}

/// Hermiticity defect of the generator at `t` on fixed band-limited probes.
pub fn hermiticity_guard(spec: &HamiltonianSpec, t: f64) -> Result<f64> {
    let probes = band_limited_noise(spec.grid(), GUARD_PROBES, 0.5, GUARD_SEED);
    let defect = hermiticity_defect(spec, t, &probes)?;
    if !(defect <= HERMITICITY_LIMIT) {
        return Err(Error::HermiticityGuard { defect, limit: HERMITICITY_LIMIT });
    }
    Ok(defect)
}

/// One Lanczos step `exp(−i dt H(t + dt/2))ψ`; fails rather than halving.
pub fn step_krylov(
    spec: &HamiltonianSpec,
    psi: &WaveFunction,
    t: f64,
    dt: f64,
    dim: usize,
    tol: f64,
) -> Result<WaveFunction> {
    check_grid(spec, psi)?;
    hermiticity_guard(spec, t + 0.5 * dt)?;
    let mut values = psi.values().to_vec();
    krylov_in_place(&spec.frozen(t + 0.5 * dt), &mut values, dt, dim, tol)?;
    Ok(WaveFunction::from_parts(psi.grid().clone(), values))
}

/// Krylov step over `[t, t + dt]`, recursively splitting into halves when
/// the subspace does not resolve it. Returns the number of halvings.
fn krylov_advance(
    spec: &HamiltonianSpec,
    values: &mut Vec<Complex64>,
    t: f64,
    dt: f64,
    dim: usize,
    tol: f64,
    depth: usize,
) -> Result<usize> {
    let mut trial = values.clone();
    match krylov_in_place(&spec.frozen(t + 0.5 * dt), &mut trial, dt, dim, tol) {
        Ok(()) => {
            *values = trial;
            Ok(0)
        }
        Err(e @ Error::KrylovNotConverged { .. }) if depth >= MAX_HALVINGS => Err(e),
        Err(Error::KrylovNotConverged { .. }) => {
            let h = 0.5 * dt;
            let a = krylov_advance(spec, values, t, h, dim, tol, depth + 1)?;
            let b = krylov_advance(spec, values, t + h, h, dim, tol, depth + 1)?;
            Ok(1 + a + b)
        }
        Err(e) => Err(e),
    }
}

/// Step boundaries: the lattice `t0 + i·dt`, the final time and any sample
/// times that fall between lattice points. Sample times within `1e-9·dt`
/// of a lattice point are snapped onto it.
fn event_times(cfg: &StepperConfig, samples: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let span = cfg.t_final - cfg.t0;
    let snap = 1e-9 * cfg.dt;
    let n = ((span + snap) / cfg.dt).floor() as usize;
    let mut events: Vec<f64> = (0..=n).map(|i| cfg.t0 + i as f64 * cfg.dt).collect();
    if cfg.t_final - events[n] > snap {
        events.push(cfg.t_final);
    } else {
        events[n] = cfg.t_final;
    }
    let mut snapped = Vec::with_capacity(samples.len());
    for &s in samples {
        if !(s >= cfg.t0 - snap && s <= cfg.t_final + snap) {
            return Err(Error::Config(format!("sample time {s} outside [{}, {}]", cfg.t0, cfg.t_final)));
        }
        let nearest = events
            .iter()
            .copied()
            .min_by(|a, b| (a - s).abs().total_cmp(&(b - s).abs()))
            .expect("lattice is non-empty");
        if (nearest - s).abs() <= snap {
            snapped.push(nearest);
        } else {
            events.push(s);
            snapped.push(s);
        }
    }
    events.sort_by(f64::total_cmp);
    events.dedup();
    snapped.sort_by(f64::total_cmp);
    snapped.dedup();
    Ok((events, snapped))
}

fn record_observables(out: &mut Vec<ObservableRecord>, t: f64, psi: &WaveFunction) {
    out.push(ObservableRecord { t, name: "norm".into(), value: psi.norm() });
    let e = psi.expectations();
    for (axis, (x, p)) in e.position.iter().zip(&e.momentum).enumerate() {
        out.push(ObservableRecord { t, name: format!("x{axis}"), value: *x });
        out.push(ObservableRecord { t, name: format!("p{axis}"), value: *p });
    }
}

/// Propagates `psi0` from `cfg.t0` to `cfg.t_final`. The observer (if
/// any) sees the state at every time in `samples`.
pub fn evolve(
    spec: &HamiltonianSpec,
    psi0: &WaveFunction,
    cfg: &StepperConfig,
    samples: &[f64],
    mut observer: Option<&mut Observer<'_>>,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_grid(spec, psi0)?;
    if !((psi0.norm() - 1.0).abs() <= 1e-10) {
        return Err(Error::InvalidState(format!("initial state has norm {}", psi0.norm())));
    }
    match cfg.method {
        Method::SplitStrang if !spec.generator().is_dipole() => {
            return Err(Error::UnsupportedSpec("split-operator stepping needs a dipole generator".into()))
        }
        Method::Krylov { .. } => {
            hermiticity_guard(spec, cfg.t0)?;
        }
        _ => {}
    }
    let (events, sample_times) = event_times(cfg, samples)?;
    let grid = psi0.grid().clone();
    let dv = grid.cell_volume();
    let limit = cfg.method.drift_limit();
    let mut values = psi0.values().to_vec();
    let mut observables = Vec::new();
    let mut steps = 0;
    let mut halvings = 0;
    let mut max_drift: f64 = 0.0;
    let mut next_sample = 0;
    let start_norm = norm_of(&values, dv);

    let mut visit = |t: f64, values: &[Complex64], next: &mut usize, obs: &mut Vec<ObservableRecord>| -> Result<()> {
        if *next < sample_times.len() && sample_times[*next] == t {
            let psi = WaveFunction::from_parts(grid.clone(), values.to_vec());
            record_observables(obs, t, &psi);
            if let Some(f) = observer.as_mut() {
                f(t, &psi).map_err(|message| Error::Observer { t, message })?;
            }
            *next += 1;
        }
        Ok(())
    };

    visit(events[0], &values, &mut next_sample, &mut observables)?;
    for w in events.windows(2) {
        let (t, dt) = (w[0], w[1] - w[0]);
        let before = norm_of(&values, dv);
        match cfg.method {
            Method::SplitStrang => split_in_place(&spec.frozen(t + 0.5 * dt), &mut values, dt)?,
            Method::Krylov { dim, tol } => {
                halvings += krylov_advance(spec, &mut values, t, dt, dim, tol, 0)?;
            }
        }
        let drift = (norm_of(&values, dv) - before).abs();
        if !(drift <= limit) {
            return Err(Error::NormDrift { drift, limit, t });
        }
        max_drift = max_drift.max(drift);
        steps += 1;
        visit(w[1], &values, &mut next_sample, &mut observables)?;
    }

    let terminal = norm_of(&values, dv) - start_norm;
    Ok(Trajectory {
        generator: spec.generator().name().to_string(),
        method: cfg.method,
        t0: cfg.t0,
        t_final: cfg.t_final,
        dt: cfg.dt,
        steps,
        halvings,
        max_step_drift: max_drift,
        terminal_norm_drift: terminal,
        sample_times,
        observables,
        final_state: WaveFunction::from_parts(grid, values),
    })
}
