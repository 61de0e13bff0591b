//! On-disk layout: `<out>/<preset>/<hash-prefix>/` holding CSV tables,
//! JSON reports, binary snapshots and `manifest.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use dipole_core::cook::CookReport;
use dipole_core::spatial::WaveFunction;
use serde::Serialize;

use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};
use crate::study::{BoundsStudy, FieldCheck, GaugeStudy, Study, SweepResult, TrajectorySummary};

pub const HASH_PREFIX: usize = 16;

pub struct OutputDir {
    root: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    config: &'a StudyConfig,
    seed: u64,
    versions: Versions,
    created_at: String,
    conventions: Conventions,
    ground_energy: Option<f64>,
    partial: bool,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Versions {
    harness: &'static str,
    core: &'static str,
}

#[derive(Serialize)]
struct Conventions {
    units: &'static str,
    coupling: &'static str,
    field_magnitudes: &'static str,
    initial_time: &'static str,
    boundary: &'static str,
}

const CONVENTIONS: Conventions = Conventions {
    units: "hbar = e = 1, m = 1/2; kinetic operator -Laplacian",
    coupling: "b(r,t) = (1/omega) a(r/lambda, omega t); c = omega lambda / (2 pi) is derived",
    field_magnitudes: "omega and amplitude are natural-unit conventions chosen per preset",
    initial_time: "t0 defaults to one time step",
    boundary: "periodic box; wavelengths snapped to L/m",
};

/// `SOURCE_DATE_EPOCH` when set, otherwise the current time.
fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Serialize)]
struct CookRow<'a> {
    config_hash: &'a str,
    lambda: f64,
    s: f64,
    g: f64,
    weight: f64,
}

#[derive(Serialize)]
struct GaugeRow<'a> {
    config_hash: &'a str,
    direction: &'a str,
    t: f64,
    fidelity: f64,
}

#[derive(Serialize)]
struct CookFile<'a> {
    config_hash: &'a str,
    reports: &'a [CookReport],
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config_hash: &'a str,
    decay_exponent: Option<f64>,
    partial: bool,
    dipole: &'a TrajectorySummary,
}

impl OutputDir {
    pub fn create(out: &Path, study: &Study) -> Result<Self> {
        let root = out.join(&study.config.preset).join(&study.hash[..HASH_PREFIX]);
        fs::create_dir_all(root.join("snapshots")).map_err(|e| HarnessError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn create_file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
    }

    fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.root.join(name);
        let mut w = self.create_file(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::io(&path, e.into()))?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
    }

    fn write_csv<T: Serialize>(&self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let path = self.root.join(name);
        let err = |e: csv::Error| HarnessError::io(&path, e.into());
        let mut w = csv::Writer::from_writer(self.create_file(name)?);
        for row in rows {
            w.serialize(row).map_err(err)?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))
    }

    fn write_snapshot(&self, name: &str, psi: &WaveFunction) -> Result<()> {
        let name = format!("snapshots/{name}.bin");
        let mut w = self.create_file(&name)?;
        psi.write_snapshot(&mut w)?;
        w.flush().map_err(|e| HarnessError::io(self.root.join(name), e))
    }

    pub fn write_sweep(&self, sweep: &SweepResult, study: &Study) -> Result<()> {
        self.write_csv("sweep.csv", &sweep.records)?;
        self.write_json(
            "sweep.json",
            &SweepSummary {
                config_hash: &sweep.config_hash,
                decay_exponent: sweep.decay_exponent,
                partial: sweep.partial,
                dipole: &sweep.dipole,
            },
        )?;
        self.write_cook(&sweep.cook, &sweep.config_hash)?;
        self.write_snapshot("initial", &study.psi0)?;
        self.write_snapshot("dipole_final", &sweep.dipole_final)?;
        for (i, psi) in sweep.full_finals.iter().enumerate() {
            if let Some(psi) = psi {
                self.write_snapshot(&format!("full_final_{i:02}"), psi)?;
            }
        }
        Ok(())
    }

    pub fn write_cook(&self, reports: &[CookReport], hash: &str) -> Result<()> {
        let rows = reports.iter().flat_map(|r| {
            r.nodes.iter().zip(&r.integrand).zip(&r.weights).map(move |((s, g), w)| CookRow {
                config_hash: hash,
                lambda: r.lambda,
                s: *s,
                g: *g,
                weight: *w,
            })
        });
        self.write_csv("cook.csv", rows)?;
        self.write_json("cook.json", &CookFile { config_hash: hash, reports })
    }

    pub fn write_gauge(&self, gauge: &GaugeStudy) -> Result<()> {
        let rows = gauge.reports.iter().flat_map(|r| {
            let direction = match r.direction {
                dipole_core::gauge::GaugeDirection::VelocityToLength => "velocity-to-length",
                dipole_core::gauge::GaugeDirection::LengthToVelocity => "length-to-velocity",
            };
            r.samples.iter().map(move |s| GaugeRow { config_hash: &gauge.config_hash, direction, t: s.t, fidelity: s.fidelity })
        });
        self.write_csv("gauge.csv", rows)?;
        self.write_json("gauge.json", gauge)
    }

    pub fn write_bounds(&self, bounds: &BoundsStudy) -> Result<()> {
        self.write_json("bounds.json", bounds)
    }

    pub fn write_field_check(&self, check: &FieldCheck) -> Result<()> {
        self.write_json("field_check.json", check)
    }

    /// Rewrites `manifest.json`, listing every file currently in the directory.
    pub fn write_manifest(&self, study: &Study, partial: bool) -> Result<()> {
        let mut files = Vec::new();
        collect_files(&self.root, &self.root, &mut files)?;
        files.retain(|f| f != "manifest.json");
        files.sort();
        let manifest = Manifest {
            config_hash: &study.hash,
            config: &study.config,
            seed: study.config.seed,
            versions: Versions { harness: env!("CARGO_PKG_VERSION"), core: dipole_core::VERSION },
            created_at: timestamp(),
            conventions: CONVENTIONS,
            ground_energy: study.ground_energy,
            partial,
            files,
        };
        self.write_json("manifest.json", &manifest)
    }
}

fn collect_files(base: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(base, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(base) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}
