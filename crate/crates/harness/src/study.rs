//! Study orchestration: the λ sweep, gauge check, certificate comparison,
//! operator bounds and field diagnostics for one normalised config.

use std::f64::consts::PI;
use std::time::Instant;

use dipole_core::bounds::{bounds_report, BoundsReport};
use dipole_core::cook::{cook_bounds, CookReport};
use dipole_core::fields::{
    check_divergence_free, check_transversality, pulse_asymptote, EnvelopeKind, LaserEnvelope, ScaledField,
    TransversalityReport, PULSE_WINDOW,
};
use dipole_core::gauge::{cross_gauge_check, GaugeCheckReport, GaugeDirection};
use dipole_core::hamiltonians::{Generator, HamiltonianSpec, Potential};
use dipole_core::probes::ProbeSet;
use dipole_core::propagate::{evolve, ground_state_imaginary_time, Method, StepperConfig, Trajectory};
use dipole_core::quadrature;
use dipole_core::spatial::{gaussian_packet, Grid, WaveFunction};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitialState, StudyConfig};
use crate::error::Result;

/// A normalised config with everything every operation needs.
#[derive(Clone, Debug)]
pub struct Study {
    pub config: StudyConfig,
    pub hash: String,
    pub grid: Grid,
    pub potential: Potential,
    pub envelope: LaserEnvelope,
    pub fields: Vec<ScaledField>,
    pub psi0: WaveFunction,
    pub ground_energy: Option<f64>,
}

impl Study {
    pub fn prepare(config: StudyConfig) -> Result<Self> {
        let config = config.normalized()?;
        let hash = config.hash();
        let grid = Grid::new(&config.grid.points, &config.grid.lengths)?;
        let potential = config.potential.sample(&grid)?;
        let envelope = config.envelope()?;
        let fields = config
            .field
            .lambdas
            .iter()
            .map(|&l| ScaledField::new(envelope.clone(), l, config.field.omega))
            .collect::<dipole_core::Result<Vec<_>>>()?;
        let (psi0, ground_energy) = match &config.initial {
            InitialState::GroundState { tol } => {
                let gs = ground_state_imaginary_time(&potential, *tol)?;
                (gs.state, Some(gs.energy))
            }
            InitialState::Packet { center, sigma, momentum } => {
                (gaussian_packet(&grid, center, *sigma, momentum)?, None)
            }
        };
        Ok(Self { config, hash, grid, potential, envelope, fields, psi0, ground_energy })
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let run = &self.config.run;
        let method = Method::Krylov { dim: run.krylov_dim, tol: run.krylov_tol };
        Ok(StepperConfig::new(run.dt, method, self.config.t0(), run.t_final)?)
    }

    /// The dipole field; `b(0, t)` does not depend on λ.
    pub fn dipole_field(&self) -> &ScaledField {
        &self.fields[0]
    }

    pub fn spec(&self, generator: Generator) -> Result<HamiltonianSpec> {
        Ok(HamiltonianSpec::new(generator, self.potential.clone())?)
    }

    pub fn dipole_spec(&self) -> Result<HamiltonianSpec> {
        self.spec(Generator::DipoleVelocity(self.dipole_field().clone()))
    }

    /// Evenly spaced times from `t0` to `t_final`.
    pub fn sample_times(&self, count: usize) -> Vec<f64> {
        let (t0, t1) = (self.config.t0(), self.config.run.t_final);
        (0..count)
            .map(|i| if i + 1 == count { t1 } else { t0 + (t1 - t0) * i as f64 / (count - 1) as f64 })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub generator: String,
    pub steps: usize,
    pub halvings: usize,
    pub max_step_drift: f64,
    pub terminal_norm_drift: f64,
}

impl From<&Trajectory> for TrajectorySummary {
    fn from(t: &Trajectory) -> Self {
        Self {
            generator: t.generator.clone(),
            steps: t.steps,
            halvings: t.halvings,
            max_step_drift: t.max_step_drift,
            terminal_norm_drift: t.terminal_norm_drift,
        }
    }
}

/// One row of `sweep.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub config_hash: String,
    pub lambda: f64,
    pub c_derived: f64,
    pub error: Option<f64>,
    pub cook_bound: Option<f64>,
    pub cook_panels: Option<usize>,
    pub cook_resolved: Option<bool>,
    pub steps: Option<usize>,
    pub halvings: Option<usize>,
    pub max_step_drift: Option<f64>,
    pub terminal_norm_drift: Option<f64>,
    pub status: String,
    pub diagnostic: String,
    /// Wall-clock seconds; kept out of the persisted outputs so they stay
    /// reproducible.
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config_hash: String,
    pub records: Vec<SweepRecord>,
    pub dipole: TrajectorySummary,
    pub cook: Vec<CookReport>,
    /// `−d log e / d log λ` fitted over the top decade of λ.
    pub decay_exponent: Option<f64>,
    pub partial: bool,
    pub dipole_final: WaveFunction,
    pub full_finals: Vec<Option<WaveFunction>>,
}

impl SweepResult {
    pub fn errors(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.error).collect()
    }
}

/// Least-squares decay exponent of `e(λ)` over `λ ≥ λ_max/10`.
pub fn fit_decay_exponent(lambdas: &[f64], errors: &[Option<f64>]) -> Option<f64> {
    let top = lambdas.iter().copied().fold(0.0, f64::max) / 10.0;
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(errors)
        .filter_map(|(&l, e)| e.filter(|e| *e > 0.0 && l >= top).map(|e| (l.ln(), e.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

struct FullRun {
    summary: TrajectorySummary,
    state: WaveFunction,
    runtime_s: f64,
}

pub fn run_sweep(study: &Study) -> Result<SweepResult> {
    let cfg = study.stepper()?;
    let dipole_spec = study.dipole_spec()?;
    let started = Instant::now();
    let dipole = evolve(&dipole_spec, &study.psi0, &cfg, &[], None)?;
    eprintln!("dipole trajectory: {:.2} s", started.elapsed().as_secs_f64());

    let full: Vec<std::result::Result<FullRun, String>> = study
        .fields
        .par_iter()
        .map(|f| {
            let started = Instant::now();
            let spec = study.spec(Generator::FullCoupling(f.clone())).map_err(|e| e.to_string())?;
            let traj = evolve(&spec, &study.psi0, &cfg, &[], None).map_err(|e| e.to_string())?;
            Ok(FullRun {
                summary: TrajectorySummary::from(&traj),
                state: traj.final_state,
                runtime_s: started.elapsed().as_secs_f64(),
            })
        })
        .collect();

    let started = Instant::now();
    let cook = cook_bounds(&study.fields, &study.psi0, &dipole_spec, &cfg, study.config.run.cook_panels);
    eprintln!("certificates: {:.2} s", started.elapsed().as_secs_f64());
    let (mut cook, cook_failure) = match cook {
        Ok(c) => (c.into_iter().map(Some).collect::<Vec<_>>(), None),
        Err(e) => (vec![None; study.fields.len()], Some(e.to_string())),
    };

    let mut records = Vec::with_capacity(study.fields.len());
    let mut full_finals = Vec::with_capacity(study.fields.len());
    let mut partial = cook_failure.is_some();
    for ((field, run), rep) in study.fields.iter().zip(full).zip(cook.iter_mut()) {
        let mut record = SweepRecord {
            config_hash: study.hash.clone(),
            lambda: field.lambda(),
            c_derived: field.c_derived(),
            error: None,
            cook_bound: rep.as_ref().map(|r| r.bound),
            cook_panels: rep.as_ref().map(|r| r.panels),
            cook_resolved: rep.as_ref().map(|r| r.resolved),
            steps: None,
            halvings: None,
            max_step_drift: None,
            terminal_norm_drift: None,
            status: "ok".into(),
            diagnostic: cook_failure.clone().map(|e| format!("certificate: {e}")).unwrap_or_default(),
            runtime_s: 0.0,
        };
        match run {
            Ok(run) => {
                let e = run.state.distance(&dipole.final_state)?;
                record.error = Some(e);
                record.steps = Some(run.summary.steps);
                record.halvings = Some(run.summary.halvings);
                record.max_step_drift = Some(run.summary.max_step_drift);
                record.terminal_norm_drift = Some(run.summary.terminal_norm_drift);
                record.runtime_s = run.runtime_s;
                if let Some(r) = rep.take() {
                    *rep = Some(r.with_measured_error(e));
                }
                full_finals.push(Some(run.state));
            }
            Err(msg) => {
                partial = true;
                record.status = "failed".into();
                record.diagnostic = msg;
                full_finals.push(None);
            }
        }
        if cook_failure.is_some() && record.status == "ok" {
            record.status = "partial".into();
        }
        eprintln!("λ = {}: full coupling {:.2} s", record.lambda, record.runtime_s);
        records.push(record);
    }
    let decay_exponent =
        fit_decay_exponent(&study.config.field.lambdas, &records.iter().map(|r| r.error).collect::<Vec<_>>());
    Ok(SweepResult {
        config_hash: study.hash.clone(),
        records,
        dipole: TrajectorySummary::from(&dipole),
        cook: cook.into_iter().flatten().collect(),
        decay_exponent,
        partial,
        dipole_final: dipole.final_state,
        full_finals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeStudy {
    pub config_hash: String,
    pub reports: Vec<GaugeCheckReport>,
    pub min_fidelity: f64,
}

/// Cross-gauge check in both directions at `gauge_samples` evenly spaced
/// times.
pub fn run_gauge_check(study: &Study) -> Result<GaugeStudy> {
    let cfg = study.stepper()?;
    let samples = study.sample_times(study.config.run.gauge_samples);
    let reports = [GaugeDirection::VelocityToLength, GaugeDirection::LengthToVelocity]
        .par_iter()
        .map(|&d| cross_gauge_check(study.dipole_field(), &study.potential, &study.psi0, &cfg, &samples, d))
        .collect::<dipole_core::Result<Vec<_>>>()?;
    let min_fidelity = reports.iter().map(|r| r.min_fidelity).fold(1.0, f64::min);
    Ok(GaugeStudy { config_hash: study.hash.clone(), reports, min_fidelity })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsStudy {
    pub config_hash: String,
    pub reports: Vec<BoundsReport>,
}

pub fn run_bounds(study: &Study) -> Result<BoundsStudy> {
    let spec = study.dipole_spec()?;
    let b = &study.config.bounds;
    let probes = ProbeSet::standard(&study.grid, b.probes, study.config.seed);
    let reports = b
        .times
        .iter()
        .map(|&s| bounds_report(&spec, s, &b.alphas, &b.epsilons, &b.graph_alphas, &probes))
        .collect::<dipole_core::Result<Vec<_>>>()?;
    Ok(BoundsStudy { config_hash: study.hash.clone(), reports })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceEntry {
    pub lambda: f64,
    pub max_defect: f64,
    pub commensurate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseCheck {
    /// Limit of the tabulated primitive times `E`.
    pub asymptote_table: f64,
    /// `−√π e^{−1/4} E`.
    pub asymptote_closed_form: f64,
    pub asymptote_deviation: f64,
    /// Extremes of the dipole envelope over the run, from the table.
    pub extrema_table: [f64; 2],
    /// The same extremes by direct adaptive quadrature at each time.
    pub extrema_quadrature: [f64; 2],
    pub max_profile_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryCheck {
    /// `max |V(…r_a…r_b…) − V(…r_b…r_a…)|` over all particle pairs.
    pub potential_exchange_defect: f64,
    /// `‖ψ0 − Pψ0‖` for the first pair swap.
    pub initial_state_exchange_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldCheck {
    pub config_hash: String,
    pub kind: EnvelopeKind,
    pub transversality: TransversalityReport,
    pub divergence: Vec<DivergenceEntry>,
    pub pulse: Option<PulseCheck>,
    pub symmetry: Option<SymmetryCheck>,
}

fn pulse_check(study: &Study) -> PulseCheck {
    let env = &study.envelope;
    let e = env.amplitude();
    let asymptote_table = e * pulse_asymptote();
    let asymptote_closed_form = -PI.sqrt() * (-0.25f64).exp() * e;
    let omega = study.config.field.omega;
    let integrand = |s: f64| (-s * s).exp() * s.cos();
    let n = ((study.config.run.t_final - study.config.t0()) / study.config.run.dt).round() as usize;
    let times = study.sample_times(n.max(1) + 1);
    let mut table = [f64::INFINITY, f64::NEG_INFINITY];
    let mut direct = [f64::INFINITY, f64::NEG_INFINITY];
    let mut max_dev: f64 = 0.0;
    for t in times {
        let u = -(omega * t - env.delay());
        let a = e * env.profile(u, 0);
        let b = if u >= PULSE_WINDOW {
            0.0
        } else {
            -e * quadrature::integrate(integrand, u.max(-PULSE_WINDOW), PULSE_WINDOW, 1e-14).0
        };
        table = [table[0].min(a), table[1].max(a)];
        direct = [direct[0].min(b), direct[1].max(b)];
        max_dev = max_dev.max((a - b).abs());
    }
    PulseCheck {
        asymptote_table,
        asymptote_closed_form,
        asymptote_deviation: (asymptote_table - asymptote_closed_form).abs(),
        extrema_table: table,
        extrema_quadrature: direct,
        max_profile_deviation: max_dev,
    }
}

/// Flat index of the configuration with particles `a` and `b` swapped.
fn swapped_index(grid: &Grid, flat: usize, d: usize, a: usize, b: usize) -> usize {
    let mut idx: Vec<usize> = (0..grid.dim()).map(|ax| grid.axis_index(flat, ax)).collect();
    for c in 0..d {
        idx.swap(a * d + c, b * d + c);
    }
    idx.iter().enumerate().map(|(ax, i)| i * grid.stride(ax)).sum()
}

fn symmetry_check(study: &Study, particles: usize) -> Option<SymmetryCheck> {
    let grid = &study.grid;
    let d = grid.dim() / particles;
    let same_axes = (1..particles).all(|k| {
        grid.points()[k * d..(k + 1) * d] == grid.points()[..d] && grid.lengths()[k * d..(k + 1) * d] == grid.lengths()[..d]
    });
    if !same_axes {
        return None;
    }
    let v = study.potential.samples();
    let psi = study.psi0.values();
    let mut pot: f64 = 0.0;
    let mut state = 0.0;
    for a in 0..particles {
        for b in a + 1..particles {
            for i in 0..grid.len() {
                let j = swapped_index(grid, i, d, a, b);
                pot = pot.max((v[i] - v[j]).abs());
                if (a, b) == (0, 1) {
                    state += (psi[i] - psi[j]).norm_sqr();
                }
            }
        }
    }
    Some(SymmetryCheck {
        potential_exchange_defect: pot,
        initial_state_exchange_defect: (state * grid.cell_volume()).sqrt(),
    })
}

/// Transversality, spectral divergence of the envelope at every λ on the
/// box (in envelope coordinates), pulse table diagnostics and, for
/// several particles, exchange symmetry.
pub fn run_field_check(study: &Study) -> Result<FieldCheck> {
    let env = &study.envelope;
    let d = env.dim();
    let points = &study.grid.points()[..d];
    let times = study.sample_times(study.config.run.gauge_samples);
    let omega = study.config.field.omega;
    let envelope_times: Vec<f64> = times.iter().map(|t| omega * t).collect();
    let divergence = study
        .fields
        .iter()
        .map(|f| {
            let lengths: Vec<f64> = study.grid.lengths()[..d].iter().map(|l| l / f.lambda()).collect();
            let grid = Grid::new(points, &lengths)?;
            let rep = check_divergence_free(env, &grid, &envelope_times)?;
            Ok(DivergenceEntry { lambda: f.lambda(), max_defect: rep.max_defect, commensurate: rep.commensurate })
        })
        .collect::<Result<Vec<_>>>()?;
    let pulse = (env.kind() == EnvelopeKind::GaussianPulse).then(|| pulse_check(study));
    let particles = study.potential.particles();
    let symmetry = if particles > 1 { symmetry_check(study, particles) } else { None };
    Ok(FieldCheck {
        config_hash: study.hash.clone(),
        kind: env.kind(),
        transversality: check_transversality(env),
        divergence,
        pulse,
        symmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    fn small(kind: EnvelopeKind) -> StudyConfig {
        let mut cfg = preset("cw-1d").unwrap();
        cfg.grid.points = vec![256];
        cfg.grid.lengths = vec![80.0];
        cfg.field.kind = kind;
        cfg.field.lambdas = vec![20.0, 40.0, 80.0];
        cfg.run.t_final = 0.5;
        cfg.run.gauge_samples = 3;
        cfg
    }

    #[test]
    fn decay_exponent_of_power_law() {
        let l = [1.0, 20.0, 40.0, 80.0, 160.0];
        let mut e: Vec<Option<f64>> = l.iter().map(|x: &f64| Some(3.0 * x.powf(-1.5))).collect();
        // below the top decade, so ignored
        e[0] = Some(1e3);
        assert!((fit_decay_exponent(&l, &e).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(fit_decay_exponent(&l, &[None, None, None, None, Some(1.0)]), None);
    }

    #[test]
    fn zero_envelope_sweep_has_zero_error() {
        let study = Study::prepare(small(EnvelopeKind::Zero)).unwrap();
        let sweep = run_sweep(&study).unwrap();
        assert_eq!(sweep.records.len(), 3);
        assert!(!sweep.partial);
        for r in &sweep.records {
            assert_eq!(r.error, Some(0.0));
            assert_eq!(r.cook_bound, Some(0.0));
            assert_eq!(r.config_hash, study.hash);
        }
    }

    #[test]
    fn exchange_swap_index_is_an_involution() {
        let grid = Grid::new(&[8, 16, 8, 16], &[1.0, 2.0, 1.0, 2.0]).unwrap();
        for i in (0..grid.len()).step_by(37) {
            let j = swapped_index(&grid, i, 2, 0, 1);
            assert_eq!(swapped_index(&grid, j, 2, 0, 1), i);
        }
    }
}
