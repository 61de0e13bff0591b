//! Study configuration, read from TOML (or from the `config` entry of a
//! previously written manifest).

use std::path::Path;

use dipole_core::fields::{EnvelopeKind, LaserEnvelope, ScaledField};
use dipole_core::hamiltonians::PotentialModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub preset: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub potential: PotentialModel,
    pub field: FieldSpec,
    pub run: RunSpec,
    pub initial: InitialState,
    pub bounds: BoundsSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: EnvelopeKind,
    pub amplitude: f64,
    pub k_hat: Vec<f64>,
    pub eps_hat: Vec<f64>,
    #[serde(default)]
    pub delay: f64,
    pub omega: f64,
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub dt: f64,
    /// Defaults to one time step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub t_final: f64,
    #[serde(default = "default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    #[serde(default = "default_cook_panels")]
    pub cook_panels: usize,
    #[serde(default = "default_gauge_samples")]
    pub gauge_samples: usize,
}

fn default_krylov_dim() -> usize {
    24
}

fn default_krylov_tol() -> f64 {
    1e-10
}

fn default_cook_panels() -> usize {
    16
}

fn default_gauge_samples() -> usize {
    9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    GroundState { tol: f64 },
    Packet { center: Vec<f64>, sigma: f64, momentum: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub graph_alphas: Vec<f64>,
    pub probes: usize,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| config_err(e.to_string()))
    }

    /// Reads a TOML config, or the `config` entry of a manifest when the
    /// file has a `.json` extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let config = value
                .get("config")
                .ok_or_else(|| config_err(format!("{} has no `config` entry", path.display())))?;
            serde_json::from_value(config.clone()).map_err(|e| config_err(format!("{}: {e}", path.display())))
        } else {
            Self::from_toml_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        }
    }

    pub fn envelope(&self) -> Result<LaserEnvelope> {
        let f = &self.field;
        let env = LaserEnvelope::new(f.kind, f.amplitude, f.k_hat.clone(), f.eps_hat.clone())?;
        Ok(env.with_delay(f.delay)?)
    }

    /// Lengths of the box seen by one particle.
    fn particle_lengths(&self) -> Result<Vec<f64>> {
        let d = self.field.k_hat.len();
        let dim = self.grid.points.len().max(self.grid.lengths.len());
        let lengths: Vec<f64> = if self.grid.lengths.len() == 1 { vec![self.grid.lengths[0]; dim] } else { self.grid.lengths.clone() };
        if d == 0 || lengths.len() < d {
            return Err(config_err("field has more components than the grid has axes"));
        }
        Ok(lengths[..d].to_vec())
    }

    /// Fills defaults and snaps each wavelength to the nearest `L/m`
    /// along the dominant axis of `k̂`. The result is what gets hashed.
    pub fn normalized(mut self) -> Result<Self> {
        let run = &mut self.run;
        if !(run.dt > 0.0) {
            return Err(config_err(format!("dt must be positive, got {}", run.dt)));
        }
        let t0 = *run.t0.get_or_insert(run.dt);
        if !(t0 > 0.0) {
            return Err(config_err(format!("t0 must be positive, got {t0}")));
        }
        if !(run.t_final > t0) {
            return Err(config_err(format!("t_final {} must exceed t0 {t0}", run.t_final)));
        }
        if run.gauge_samples < 2 {
            return Err(config_err("gauge_samples must be at least 2"));
        }
        if !(self.field.omega > 0.0) {
            return Err(config_err("omega must be positive"));
        }
        if self.field.lambdas.is_empty() {
            return Err(config_err("lambda list is empty"));
        }
        if self.bounds.probes == 0 {
            return Err(config_err("bounds need at least one probe"));
        }
        let env = self.envelope()?;
        let lengths = self.particle_lengths()?;
        if !env.is_zero() {
            let (axis, k) = env
                .k_hat()
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty k_hat");
            let span = k.abs() * lengths[axis];
            for lambda in self.field.lambdas.iter_mut() {
                if !(*lambda > 0.0) {
                    return Err(config_err(format!("wavelength {lambda} must be positive")));
                }
                let m = (span / *lambda).round().max(1.0);
                *lambda = span / m;
                let field = ScaledField::new(env.clone(), *lambda, self.field.omega)?;
                if !field.is_commensurate(&lengths) {
                    return Err(dipole_core::Error::NonCommensurate(format!(
                        "no L/m wavelength near {lambda} fits the box {lengths:?} along k̂ = {:?}",
                        env.k_hat()
                    ))
                    .into());
                }
            }
        }
        if self.field.lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err(format!(
                "wavelengths must be strictly increasing after snapping, got {:?}",
                self.field.lambdas
            )));
        }
        Ok(self)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn t0(&self) -> f64 {
        self.run.t0.unwrap_or(self.run.dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in crate::presets::PRESETS {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml_string().unwrap();
            assert_eq!(StudyConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn snapping_and_defaults() {
        let mut cfg = preset("cw-1d").unwrap();
        cfg.run.t0 = None;
        cfg.field.lambdas = vec![19.0, 41.0, 79.0, 150.0];
        let n = cfg.clone().normalized().unwrap();
        assert_eq!(n.field.lambdas, vec![160.0 / 8.0, 160.0 / 4.0, 160.0 / 2.0, 160.0]);
        assert_eq!(n.run.t0, Some(n.run.dt));
        assert_eq!(n.hash(), n.clone().normalized().unwrap().hash());
        assert_ne!(n.hash(), preset("pulse-1d").unwrap().normalized().unwrap().hash());
    }

    #[test]
    fn rejects_bad_input() {
        let base = preset("cw-1d").unwrap();
        let mut c = base.clone();
        c.field.lambdas = vec![40.0, 20.0];
        assert!(c.normalized().is_err());
        let mut c = base.clone();
        c.field.lambdas = vec![40.0, 41.0];
        assert!(c.normalized().is_err());
        let mut c = base.clone();
        c.run.t0 = Some(0.0);
        assert!(c.normalized().is_err());
        assert!(StudyConfig::from_toml_str("preset = 3").is_err());
        let mut text = base.to_toml_string().unwrap();
        text.push_str("\nunknown_key = 1\n");
        assert!(StudyConfig::from_toml_str(&text).is_err());
    }
}
