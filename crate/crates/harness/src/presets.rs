//! Built-in studies. Field magnitudes (`ω = 1`, `E ≤ 1`) are conventions
//! in natural units and are recorded as such in every manifest.

use dipole_core::fields::EnvelopeKind;
use dipole_core::hamiltonians::PotentialModel;

use crate::config::{BoundsSpec, FieldSpec, GridSpec, InitialState, RunSpec, StudyConfig};
use crate::error::{HarnessError, Result};

pub const PRESETS: [&str; 3] = ["cw-1d", "pulse-1d", "two-body-1d"];

const SEED: u64 = 20_240_917;

fn run(t_final: f64) -> RunSpec {
    RunSpec {
        dt: 0.01,
        t0: Some(0.01),
        t_final,
        krylov_dim: 24,
        krylov_tol: 1e-10,
        cook_panels: 16,
        gauge_samples: 9,
    }
}

fn bounds(times: Vec<f64>, probes: usize) -> BoundsSpec {
    BoundsSpec {
        times,
        alphas: vec![1.0, 10.0, 100.0, 1000.0, 10000.0],
        epsilons: vec![1e-3, 1e-2, 1e-1, 1.0],
        graph_alphas: vec![1.0, 10.0],
        probes,
    }
}

fn one_dim(kind: EnvelopeKind, delay: f64, t_final: f64) -> StudyConfig {
    StudyConfig {
        preset: String::new(),
        seed: SEED,
        grid: GridSpec { points: vec![1024], lengths: vec![160.0] },
        potential: PotentialModel::SoftCoreCoulomb { z: 1.0, eps: 1.0 },
        field: FieldSpec {
            kind,
            amplitude: 1.0,
            k_hat: vec![1.0],
            eps_hat: vec![1.0],
            delay,
            omega: 1.0,
            lambdas: vec![20.0, 40.0, 80.0, 160.0],
        },
        run: run(t_final),
        initial: InitialState::GroundState { tol: 1e-9 },
        bounds: bounds(vec![0.0, 0.5 * t_final], 64),
    }
}

pub fn preset(name: &str) -> Result<StudyConfig> {
    let mut cfg = match name {
        "cw-1d" => one_dim(EnvelopeKind::PlaneWaveCw, 0.0, 2.0),
        "pulse-1d" => one_dim(EnvelopeKind::GaussianPulse, 4.0, 8.0),
        "two-body-1d" => StudyConfig {
            preset: String::new(),
            seed: SEED,
            grid: GridSpec { points: vec![128, 128], lengths: vec![64.0, 64.0] },
            potential: PotentialModel::NBodySoftCore { particles: 2, eps: 1.0 },
            field: FieldSpec {
                kind: EnvelopeKind::PlaneWaveCw,
                amplitude: 0.5,
                k_hat: vec![1.0],
                eps_hat: vec![1.0],
                delay: 0.0,
                omega: 1.0,
                lambdas: vec![8.0, 16.0, 32.0, 64.0],
            },
            run: run(2.0),
            initial: InitialState::GroundState { tol: 1e-9 },
            bounds: bounds(vec![0.0], 64),
        },
        other => {
            return Err(HarnessError::Config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.preset = name.to_string();
    Ok(cfg)
}
