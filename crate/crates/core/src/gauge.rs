//! The unitary map between velocity- and length-gauge dipole dynamics,
//! `ψ_L(t) = exp(−i b(0, t)·r) ψ_V(t)`, and phase-insensitive comparison.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScaledField;
use crate::hamiltonians::{Generator, HamiltonianSpec, Potential};
use crate::propagate::{evolve, StepperConfig};
use crate::spatial::WaveFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeDirection {
    VelocityToLength,
    LengthToVelocity,
}

impl GaugeDirection {
    pub fn inverse(self) -> Self {
        match self {
            GaugeDirection::VelocityToLength => GaugeDirection::LengthToVelocity,
            GaugeDirection::LengthToVelocity => GaugeDirection::VelocityToLength,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeMap {
    pub field: ScaledField,
    pub direction: GaugeDirection,
}

impl GaugeMap {
    pub fn new(field: ScaledField, direction: GaugeDirection) -> Self {
        Self { field, direction }
    }

    pub fn inverse(&self) -> Self {
        Self { field: self.field.clone(), direction: self.direction.inverse() }
    }

    /// Multiplies `psi` by `exp(∓i b(0, t)·r)`, with `b(0, t)` applied to
    /// every particle's coordinates.
    pub fn apply(&self, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
        let grid = psi.grid();
        let d = self.field.dim();
        if d == 0 || grid.dim() % d != 0 {
            return Err(Error::Config(format!(
                "{d}-component field does not tile a {}-dimensional grid",
                grid.dim()
            )));
        }
        let beta = self.field.dipole_coupling(t).repeat(grid.dim() / d);
        let sign = match self.direction {
            GaugeDirection::VelocityToLength => -1.0,
            GaugeDirection::LengthToVelocity => 1.0,
        };
        let mut out = psi.clone();
        if beta.iter().all(|&b| b == 0.0) {
            return Ok(out);
        }
        let mut x = vec![0.0; grid.dim()];
        for (i, z) in out.values_mut().iter_mut().enumerate() {
            grid.position_into(i, &mut x);
            let phase: f64 = beta.iter().zip(&x).map(|(b, x)| b * x).sum();
            *z *= Complex64::from_polar(1.0, sign * phase);
        }
        Ok(out)
    }
}

pub fn velocity_to_length(field: &ScaledField, psi_v: &WaveFunction, t: f64) -> Result<WaveFunction> {
    GaugeMap::new(field.clone(), GaugeDirection::VelocityToLength).apply(psi_v, t)
}

pub fn length_to_velocity(field: &ScaledField, psi_l: &WaveFunction, t: f64) -> Result<WaveFunction> {
    GaugeMap::new(field.clone(), GaugeDirection::LengthToVelocity).apply(psi_l, t)
}

/// `|⟨ψ1, ψ2⟩| / (‖ψ1‖‖ψ2‖)`, clamped to `[0, 1]`.
pub fn phase_fidelity(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<f64> {
    let ip = psi1.inner_product(psi2)?;
    let den = psi1.norm() * psi2.norm();
    if den == 0.0 {
        return Err(Error::InvalidState("fidelity of a zero state".into()));
    }
    Ok((ip.norm() / den).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeSample {
    pub t: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeCheckReport {
    pub direction: GaugeDirection,
    pub samples: Vec<GaugeSample>,
    pub min_fidelity: f64,
}

/// Evolves `psi0` in the source gauge, and its image under the map at
/// `t0` in the target gauge, then compares the target trajectory mapped
/// back with the source trajectory at every sample time.
pub fn cross_gauge_check(
    field: &ScaledField,
    potential: &Potential,
    psi0: &WaveFunction,
    cfg: &StepperConfig,
    samples: &[f64],
    direction: GaugeDirection,
) -> Result<GaugeCheckReport> {
    let velocity = HamiltonianSpec::new(Generator::DipoleVelocity(field.clone()), potential.clone())?;
    let length = velocity.with_generator(Generator::DipoleLength(field.clone()))?;
    let (source, target) = match direction {
        GaugeDirection::VelocityToLength => (&velocity, &length),
        GaugeDirection::LengthToVelocity => (&length, &velocity),
    };
    let forward = GaugeMap::new(field.clone(), direction);
    let back = forward.inverse();

    let mut source_states = Vec::new();
    let mut record = |_: f64, psi: &WaveFunction| {
        source_states.push(psi.clone());
        Ok(())
    };
    let src = evolve(source, psi0, cfg, samples, Some(&mut record))?;

    let mapped0 = forward.apply(psi0, cfg.t0)?;
    let mut target_states = Vec::new();
    let mut record = |_: f64, psi: &WaveFunction| {
        target_states.push(psi.clone());
        Ok(())
    };
    evolve(target, &mapped0, cfg, samples, Some(&mut record))?;

    let mut out = Vec::with_capacity(src.sample_times.len());
    for ((t, a), b) in src.sample_times.iter().zip(&source_states).zip(&target_states) {
        let fidelity = phase_fidelity(a, &back.apply(b, *t)?)?;
        out.push(GaugeSample { t: *t, fidelity });
    }
    let min_fidelity = out.iter().map(|s| s.fidelity).fold(1.0, f64::min);
    Ok(GaugeCheckReport { direction, samples: out, min_fidelity })
}
