//! Laser envelopes `a(x, t)` and their scaled realisation
//! `(1/c)·A_λ(r, t) = (1/ω)·a(r/λ, ωt)`.
//!
//! Every supported envelope is a travelling profile
//! `a(x, t) = E·f(u)·ε̂` with phase `u = 2π k̂·x − (t − delay)`, so all
//! time and space derivatives reduce to derivatives of the scalar
//! profile `f`.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::LazyLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spatial::Grid;

/// Half-width of the tabulated window for the pulse primitive. Outside
/// `[-PULSE_WINDOW, PULSE_WINDOW]` the primitive is extended by its
/// asymptotic constants.
pub const PULSE_WINDOW: f64 = 9.0;
const PULSE_TABLE_STEP: f64 = 1.0 / 512.0;
const PULSE_QUAD_TOL: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-12;
const TRANSVERSE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeKind {
    PlaneWaveCw,
    GaussianPulse,
    Zero,
}

impl FromStr for EnvelopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane-wave-cw" | "cw" => Ok(Self::PlaneWaveCw),
            "gaussian-pulse" | "pulse" => Ok(Self::GaussianPulse),
            "zero" => Ok(Self::Zero),
            other => Err(Error::Config(format!("unknown envelope kind '{other}'"))),
        }
    }
}

/// Dimensionless envelope `a(x, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserEnvelope {
    kind: EnvelopeKind,
    amplitude: f64,
    k_hat: Vec<f64>,
    eps_hat: Vec<f64>,
    delay: f64,
}

impl LaserEnvelope {
    pub fn new(kind: EnvelopeKind, amplitude: f64, k_hat: Vec<f64>, eps_hat: Vec<f64>) -> Result<Self> {
        if k_hat.is_empty() || k_hat.len() != eps_hat.len() {
            return Err(Error::Config(format!(
                "k_hat and eps_hat need the same non-zero dimension (got {} and {})",
                k_hat.len(),
                eps_hat.len()
            )));
        }
        if !amplitude.is_finite() {
            return Err(Error::Config("field amplitude must be finite".into()));
        }
        for (name, v) in [("k_hat", &k_hat), ("eps_hat", &eps_hat)] {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !((n - 1.0).abs() <= UNIT_TOL) {
                return Err(Error::Config(format!("{name} must be a unit vector (norm {n})")));
            }
        }
        Ok(Self { kind, amplitude, k_hat, eps_hat, delay: 0.0 })
    }

    pub fn plane_wave(amplitude: f64, k_hat: Vec<f64>, eps_hat: Vec<f64>) -> Result<Self> {
        Self::new(EnvelopeKind::PlaneWaveCw, amplitude, k_hat, eps_hat)
    }

    pub fn gaussian_pulse(amplitude: f64, k_hat: Vec<f64>, eps_hat: Vec<f64>) -> Result<Self> {
        Self::new(EnvelopeKind::GaussianPulse, amplitude, k_hat, eps_hat)
    }

    pub fn zero(dim: usize) -> Self {
        let mut e = vec![0.0; dim.max(1)];
        e[0] = 1.0;
        Self { kind: EnvelopeKind::Zero, amplitude: 0.0, k_hat: e.clone(), eps_hat: e, delay: 0.0 }
    }

    /// Shifts the envelope in dimensionless time: `a(x, t − delay)`.
    pub fn with_delay(mut self, delay: f64) -> Result<Self> {
        if !delay.is_finite() {
            return Err(Error::Config("delay must be finite".into()));
        }
        self.delay = delay;
        Ok(self)
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn k_hat(&self) -> &[f64] {
        &self.k_hat
    }

    pub fn eps_hat(&self) -> &[f64] {
        &self.eps_hat
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn dim(&self) -> usize {
        self.k_hat.len()
    }

    pub fn is_zero(&self) -> bool {
        self.kind == EnvelopeKind::Zero || self.amplitude == 0.0
    }

    /// Phase `u = 2π k̂·x − (t − delay)`.
    pub fn phase(&self, x: &[f64], t: f64) -> f64 {
        2.0 * PI * dot(&self.k_hat, x) - (t - self.delay)
    }

    /// `d^order f / du^order` of the unit-amplitude scalar profile.
    pub fn profile(&self, u: f64, order: u32) -> f64 {
        match self.kind {
            EnvelopeKind::Zero => 0.0,
            EnvelopeKind::PlaneWaveCw => match order % 4 {
                0 => u.sin(),
                1 => u.cos(),
                2 => -u.sin(),
                _ => -u.cos(),
            },
            EnvelopeKind::GaussianPulse => match order {
                0 => PULSE_TABLE.eval(u),
                1 => (-u * u).exp() * u.cos(),
                2 => -(-u * u).exp() * (2.0 * u * u.cos() + u.sin()),
                _ => unimplemented!("pulse profile derivatives beyond second order"),
            },
        }
    }

    /// `a(x, t)`.
    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let s = self.amplitude * self.profile(self.phase(x, t), 0);
        self.eps_hat.iter().map(|e| s * e).collect()
    }

    /// `∂ₜʲ a(x, t)` for `j ∈ {1, 2}`.
    pub fn eval_dt(&self, x: &[f64], t: f64, order: u32) -> Result<Vec<f64>> {
        if !(order == 1 || order == 2) {
            return Err(Error::Config(format!("time-derivative order {order} not in {{1, 2}}")));
        }
        // ∂ₜ = −∂ᵤ
        let sign = if order == 1 { -1.0 } else { 1.0 };
        let s = sign * self.amplitude * self.profile(self.phase(x, t), order);
        Ok(self.eps_hat.iter().map(|e| s * e).collect())
    }

    /// `∇·a(x, t) = 2π E f'(u) k̂·ε̂`.
    pub fn divergence(&self, x: &[f64], t: f64) -> f64 {
        2.0 * PI * self.amplitude * self.profile(self.phase(x, t), 1) * dot(&self.k_hat, &self.eps_hat)
    }
}

/// Free-function form of [`LaserEnvelope::eval`].
pub fn eval_envelope(env: &LaserEnvelope, x: &[f64], t: f64) -> Vec<f64> {
    env.eval(x, t)
}

/// Free-function form of [`LaserEnvelope::eval_dt`].
pub fn eval_envelope_dt(env: &LaserEnvelope, x: &[f64], t: f64, order: u32) -> Result<Vec<f64>> {
    env.eval_dt(x, t, order)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Envelope realised at wavelength `λ` and angular frequency `ω`. The
/// speed of light is derived as `ωλ/2π` and never set independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledField {
    envelope: LaserEnvelope,
    lambda: f64,
    omega: f64,
}

impl ScaledField {
    pub fn new(envelope: LaserEnvelope, lambda: f64, omega: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("wavelength {lambda} must be positive")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Config(format!("angular frequency {omega} must be positive")));
        }
        Ok(Self { envelope, lambda, omega })
    }

    /// Builds the field from a nominal speed of light: `λ = 2πc/ω`.
    pub fn from_speed_of_light(envelope: LaserEnvelope, c: f64, omega: f64) -> Result<Self> {
        Self::new(envelope, 2.0 * PI * c / omega, omega)
    }

    pub fn envelope(&self) -> &LaserEnvelope {
        &self.envelope
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn c_derived(&self) -> f64 {
        self.omega * self.lambda / (2.0 * PI)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.envelope.clone(), lambda, self.omega)
    }

    pub fn dim(&self) -> usize {
        self.envelope.dim()
    }

    /// Envelope phase at `(r/λ, ωt)`.
    pub fn phase(&self, r: &[f64], t: f64) -> f64 {
        let kr: f64 = dot(&self.envelope.k_hat, r);
        2.0 * PI * kr / self.lambda - (self.omega * t - self.envelope.delay)
    }

    /// Scalar profile `(E/ω) f(u)` so that the coupling is this times `ε̂`.
    pub fn coupling_scalar(&self, r: &[f64], t: f64) -> f64 {
        self.envelope.amplitude / self.omega * self.envelope.profile(self.phase(r, t), 0)
    }

    /// `(1/c)·A_λ(r, t) = (1/ω)·a(r/λ, ωt)`.
    pub fn coupling(&self, r: &[f64], t: f64) -> Vec<f64> {
        let s = self.coupling_scalar(r, t);
        self.envelope.eps_hat.iter().map(|e| s * e).collect()
    }

    /// `A_λ(r, t)` itself, i.e. the coupling times `c`.
    pub fn vector_potential(&self, r: &[f64], t: f64) -> Vec<f64> {
        let c = self.c_derived();
        self.coupling(r, t).into_iter().map(|v| v * c).collect()
    }

    /// Dipole coupling `(1/ω)·a(0, ωt)`.
    pub fn dipole_coupling(&self, t: f64) -> Vec<f64> {
        self.coupling(&vec![0.0; self.dim()], t)
    }

    /// `d/dt (1/ω)·a(0, ωt) = ∂ₜa(0, ωt)`, the length-gauge force field
    /// (equal to `−E(0, t)`).
    pub fn dipole_coupling_rate(&self, t: f64) -> Vec<f64> {
        let u = self.phase(&vec![0.0; self.dim()], t);
        let s = -self.envelope.amplitude * self.envelope.profile(u, 1);
        self.envelope.eps_hat.iter().map(|e| s * e).collect()
    }

    /// `E(r, t) = −(1/c)∂ₜA_λ = −∂ₜa(r/λ, ωt)`.
    pub fn electric_field(&self, r: &[f64], t: f64) -> Vec<f64> {
        let s = self.envelope.amplitude * self.envelope.profile(self.phase(r, t), 1);
        self.envelope.eps_hat.iter().map(|e| s * e).collect()
    }

    /// `∇·[(1/ω)·a(r/λ, ωt)]`.
    pub fn coupling_divergence(&self, r: &[f64], t: f64) -> f64 {
        let e = &self.envelope;
        2.0 * PI * e.amplitude * e.profile(self.phase(r, t), 1) * dot(&e.k_hat, &e.eps_hat)
            / (self.omega * self.lambda)
    }

    /// Whether the phase `2π k̂·r/λ` wraps by whole cycles across the box
    /// along every axis, i.e. `k̂_j L_j/λ ∈ ℤ`.
    pub fn is_commensurate(&self, lengths: &[f64]) -> bool {
        self.envelope.is_zero() || commensurate(&self.envelope.k_hat, lengths, self.lambda)
    }
}

fn commensurate(k_hat: &[f64], lengths: &[f64], scale: f64) -> bool {
    k_hat.iter().zip(lengths).all(|(k, l)| {
        let cycles = k * l / scale;
        (cycles - cycles.round()).abs() <= 1e-9 * cycles.abs().max(1.0)
    })
}

/// Free-function form of [`ScaledField::coupling`].
pub fn eval_scaled_a(field: &ScaledField, r: &[f64], t: f64) -> Vec<f64> {
    field.coupling(r, t)
}

/// Free-function form of [`ScaledField::electric_field`].
pub fn eval_e_field(field: &ScaledField, r: &[f64], t: f64) -> Vec<f64> {
    field.electric_field(r, t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub defect: f64,
    pub pass: bool,
}

pub fn check_transversality(env: &LaserEnvelope) -> TransversalityReport {
    let defect = dot(&env.k_hat, &env.eps_hat).abs();
    TransversalityReport { defect, pass: defect <= TRANSVERSE_TOL }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub max_defect: f64,
    pub commensurate: bool,
    pub times: Vec<f64>,
}

/// Maximum spectral divergence of `a(·, t)` sampled on `grid` (in
/// envelope coordinates) at each of `times`. A grid that does not hold
/// a whole number of envelope periods is flagged rather than rejected.
pub fn check_divergence_free(env: &LaserEnvelope, grid: &Grid, times: &[f64]) -> Result<DivergenceReport> {
    let n = grid.dim();
    if env.dim() != n {
        return Err(Error::Config(format!("{}-component envelope on a {n}-dimensional grid", env.dim())));
    }
    let commensurate = env.is_zero() || commensurate(&env.k_hat, grid.lengths(), 1.0);
    let ks = grid.wavenumber_arrays();
    let mut x = vec![0.0; n];
    let mut max_defect: f64 = 0.0;
    for &t in times {
        let mut div = vec![Complex64::default(); grid.len()];
        for (axis, k) in ks.iter().enumerate() {
            let mut comp: Vec<Complex64> = (0..grid.len())
                .map(|i| {
                    grid.position_into(i, &mut x);
                    Complex64::new(env.eval(&x, t)[axis], 0.0)
                })
                .collect();
            grid.fft_forward(&mut comp);
            for ((d, c), &ki) in div.iter_mut().zip(&comp).zip(k) {
                *d += c * Complex64::new(0.0, ki);
            }
        }
        grid.fft_inverse(&mut div);
        max_defect = div.iter().fold(max_defect, |m, z| m.max(z.norm()));
    }
    Ok(DivergenceReport { max_defect, commensurate, times: times.to_vec() })
}

/// Unit-amplitude pulse primitive `g(u) = −∫_u^∞ e^{−s²} cos s ds`,
/// tabulated once and interpolated with cubic Hermite segments that use
/// the exact derivative `g'(u) = e^{−u²} cos u`.
struct PulseTable {
    values: Vec<f64>,
}

static PULSE_TABLE: LazyLock<PulseTable> = LazyLock::new(PulseTable::build);

impl PulseTable {
    fn build() -> Self {
        let n = (2.0 * PULSE_WINDOW / PULSE_TABLE_STEP).round() as usize;
        let integrand = |s: f64| (-s * s).exp() * s.cos();
        let mut values = vec![0.0; n + 1];
        // accumulate from the right edge, where the tail is below 1e-35
        for i in (0..n).rev() {
            let a = node(i);
            let b = node(i + 1);
            let tol = PULSE_QUAD_TOL / n as f64;
            let (piece, _) = quadrature::integrate(integrand, a, b, tol);
            values[i] = values[i + 1] - piece;
        }
        Self { values }
    }

    fn eval(&self, u: f64) -> f64 {
        let n = self.values.len() - 1;
        if u <= -PULSE_WINDOW {
            return self.values[0];
        }
        if u >= PULSE_WINDOW {
            return self.values[n];
        }
        let pos = (u + PULSE_WINDOW) / PULSE_TABLE_STEP;
        let i = (pos.floor() as usize).min(n - 1);
        let s = pos - i as f64;
        let h = PULSE_TABLE_STEP;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let d = |u: f64| (-u * u).exp() * u.cos();
        let (m0, m1) = (d(node(i)) * h, d(node(i + 1)) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }
}

fn node(i: usize) -> f64 {
    -PULSE_WINDOW + i as f64 * PULSE_TABLE_STEP
}

/// Asymptotic value of the unit pulse primitive as `u → −∞`, as stored in
/// the table.
pub fn pulse_asymptote() -> f64 {
    PULSE_TABLE.values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::make_grid;

    fn cw(eps: Vec<f64>) -> LaserEnvelope {
        LaserEnvelope::plane_wave(1.0, vec![1.0, 0.0, 0.0], eps).unwrap()
    }

    fn pulse() -> LaserEnvelope {
        LaserEnvelope::gaussian_pulse(1.0, vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    // Composite Simpson on a fine lattice: independent of the GK table path.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn rejects_non_unit_vectors_and_unknown_kinds() {
        assert!(LaserEnvelope::plane_wave(1.0, vec![1.0, 0.1], vec![0.0, 1.0]).is_err());
        assert!(LaserEnvelope::plane_wave(1.0, vec![1.0], vec![0.0, 1.0]).is_err());
        assert!("laser-beam".parse::<EnvelopeKind>().is_err());
        assert_eq!("cw".parse::<EnvelopeKind>().unwrap(), EnvelopeKind::PlaneWaveCw);
    }

    #[test]
    fn plane_wave_values() {
        let env = cw(vec![0.0, 1.0, 0.0]);
        assert!(close(&env.eval(&[0.0; 3], 0.0), &[0.0; 3], 0.0));
        assert!(close(&env.eval(&[0.0; 3], PI / 2.0), &[0.0, -1.0, 0.0], 1e-15));
        let d1 = env.eval_dt(&[0.0; 3], 0.0, 1).unwrap();
        assert!(close(&d1, &[0.0, -1.0, 0.0], 1e-15));
        assert!(env.eval_dt(&[0.0; 3], 0.0, 3).is_err());
        assert!(env.eval_dt(&[0.0; 3], 0.0, 0).is_err());
    }

    #[test]
    fn zero_envelope_vanishes() {
        let env = LaserEnvelope::zero(3);
        assert!(close(&env.eval(&[0.3, 1.0, 2.0], 5.0), &[0.0; 3], 0.0));
        assert!(close(&env.eval_dt(&[0.3, 1.0, 2.0], 5.0, 1).unwrap(), &[0.0; 3], 0.0));
        let f = ScaledField::new(env, 10.0, 1.0).unwrap();
        assert!(close(&f.coupling(&[1.0, 2.0, 3.0], 1.0), &[0.0; 3], 0.0));
        assert!(close(&f.electric_field(&[1.0, 2.0, 3.0], 1.0), &[0.0; 3], 0.0));
    }

    #[test]
    fn pulse_asymptote_matches_quadrature_oracle() {
        let oracle = simpson(|s| (-s * s).exp() * s.cos(), -12.0, 12.0, 200_000);
        let closed = PI.sqrt() * (-0.25f64).exp();
        assert!((oracle - closed).abs() < 1e-12);
        let env = pulse();
        let a = env.eval(&[0.0; 3], 1e3);
        assert!((a[1] + closed).abs() < 1e-10, "{}", a[1] + closed);
        assert!((pulse_asymptote() + closed).abs() < 1e-10);
        // far past: zero
        assert!(env.eval(&[0.0; 3], -1e3)[1].abs() < 1e-15);
    }

    #[test]
    fn pulse_primitive_matches_simpson_inside_window() {
        let env = pulse();
        for &u in &[-3.0, -1.2, -0.1, 0.0, 0.37, 1.0, 2.5] {
            let oracle = -simpson(|s| (-s * s).exp() * s.cos(), u, 12.0, 100_000);
            let got = env.profile(u, 0);
            assert!((got - oracle).abs() < 1e-11, "u = {u}: {got} vs {oracle}");
        }
    }

    #[test]
    fn pulse_derivative_at_origin() {
        let env = pulse();
        let d = env.eval_dt(&[0.0; 3], 0.0, 1).unwrap();
        assert!(close(&d, &[0.0, -1.0, 0.0], 1e-15));
        // finite-difference oracle on eval
        let h = 1e-5;
        let fd = (env.eval(&[0.0; 3], h)[1] - env.eval(&[0.0; 3], -h)[1]) / (2.0 * h);
        assert!((fd + 1.0).abs() < 1e-8);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        let envs = [cw(vec![0.0, 0.0, 1.0]), pulse()];
        let xs = [[0.0, 0.0, 0.0], [0.13, -0.4, 2.0], [-0.31, 0.2, 0.0]];
        let ts = [-1.7, -0.2, 0.0, 0.45, 1.3, 3.0];
        for env in &envs {
            for x in &xs {
                for &t in &ts {
                    let fd1: Vec<f64> = env
                        .eval(x, t + h)
                        .iter()
                        .zip(env.eval(x, t - h))
                        .map(|(p, m)| (p - m) / (2.0 * h))
                        .collect();
                    let d1 = env.eval_dt(x, t, 1).unwrap();
                    assert!(close(&d1, &fd1, 1e-6 * (1.0 + d1.iter().map(|v| v.abs()).sum::<f64>())));
                    let fd2: Vec<f64> = env
                        .eval_dt(x, t + h, 1)
                        .unwrap()
                        .iter()
                        .zip(env.eval_dt(x, t - h, 1).unwrap())
                        .map(|(p, m)| (p - m) / (2.0 * h))
                        .collect();
                    let d2 = env.eval_dt(x, t, 2).unwrap();
                    assert!(close(&d2, &fd2, 1e-6 * (1.0 + d2.iter().map(|v| v.abs()).sum::<f64>())));
                }
            }
        }
    }

    #[test]
    fn pulse_is_antiderivative_of_its_field() {
        let env = pulse();
        let h = 1e-5;
        for &x0 in &[0.0, 0.1, -0.25] {
            for &t in &[-2.0, -0.5, 0.0, 0.8, 1.9] {
                let x = [x0, 0.0, 0.0];
                let u = 2.0 * PI * x0 - t;
                let fd = (env.eval(&x, t + h)[1] - env.eval(&x, t - h)[1]) / (2.0 * h);
                assert!((fd + (-u * u).exp() * u.cos()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn scaled_coupling_examples() {
        let env = cw(vec![0.0, 1.0, 0.0]);
        let f = ScaledField::new(env.clone(), 40.0, 1.0).unwrap();
        assert!(close(&f.coupling(&[0.0; 3], PI / 2.0), &[0.0, -1.0, 0.0], 1e-15));
        assert!(close(&f.electric_field(&[0.0; 3], 0.0), &[0.0, 1.0, 0.0], 1e-15));
        assert!((f.c_derived() - 40.0 / (2.0 * PI)).abs() < 1e-15);
        let a = f.vector_potential(&[0.0; 3], PI / 2.0);
        assert!((a[1] + f.c_derived()).abs() < 1e-12);

        // E = −c ∂ₜ[(1/ω)a] / c, checked by finite differences on the coupling
        let f2 = ScaledField::new(env, 25.0, 2.0).unwrap();
        let h = 1e-6;
        let r = [0.7, 0.0, 0.0];
        let fd = (f2.coupling(&r, 0.3 + h)[1] - f2.coupling(&r, 0.3 - h)[1]) / (2.0 * h);
        assert!((f2.electric_field(&r, 0.3)[1] + fd).abs() < 1e-8);
        assert!((f2.dipole_coupling_rate(0.3)[1]
            - (f2.dipole_coupling(0.3 + h)[1] - f2.dipole_coupling(0.3 - h)[1]) / (2.0 * h))
            .abs()
            < 1e-8);

        let p = ScaledField::new(pulse(), 30.0, 1.0).unwrap();
        assert!(close(&p.electric_field(&[0.0; 3], 0.0), &[0.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn dipole_value_is_independent_of_lambda() {
        for env in [cw(vec![0.0, 1.0, 0.0]), pulse()] {
            let a = ScaledField::new(env.clone(), 10.0, 1.3).unwrap();
            let b = ScaledField::new(env, 1e4, 1.3).unwrap();
            for &t in &[0.1, 0.7, 2.2] {
                assert_eq!(a.dipole_coupling(t), b.dipole_coupling(t));
            }
        }
    }

    #[test]
    fn taylor_decay_bound() {
        let env = cw(vec![0.0, 1.0, 0.0]);
        let r_max = 5.0;
        for &lambda in &[20.0, 40.0, 80.0, 160.0] {
            let f = ScaledField::new(env.clone(), lambda, 2.0).unwrap();
            let bound = 2.0 * PI * r_max / lambda * 1.1;
            for &t in &[0.0, 0.4, 1.1, 2.7] {
                let a0 = env.eval(&[0.0; 3], 2.0 * t);
                for j in 0..=50 {
                    let r = -r_max + 2.0 * r_max * j as f64 / 50.0;
                    let x = [r / lambda, 0.0, 0.0];
                    let a = env.eval(&x, 2.0 * t);
                    let d = ((a[1] - a0[1]).powi(2)).sqrt();
                    assert!(d <= bound);
                    let b = f.coupling(&[r, 0.0, 0.0], t)[1] - f.dipole_coupling(t)[1];
                    assert!(b.abs() <= bound / 2.0);
                }
            }
        }
    }

    #[test]
    fn transversality() {
        let ok = check_transversality(&cw(vec![0.0, 1.0, 0.0]));
        assert!(ok.pass && ok.defect == 0.0);
        let bad = check_transversality(&cw(vec![1.0, 0.0, 0.0]));
        assert!(!bad.pass && bad.defect == 1.0);
        let theta: f64 = 1e-3;
        let tilted = cw(vec![theta.sin(), theta.cos(), 0.0]);
        let r = check_transversality(&tilted);
        assert!(!r.pass && (r.defect - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn divergence_checks() {
        let grid = make_grid(2, &[32], &[2.0]).unwrap();
        let times = [0.0, 0.6, 1.9];
        let zero = check_divergence_free(&LaserEnvelope::zero(2), &grid, &times).unwrap();
        assert_eq!(zero.max_defect, 0.0);
        let good = LaserEnvelope::plane_wave(1.0, vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let r = check_divergence_free(&good, &grid, &times).unwrap();
        assert!(r.commensurate && r.max_defect <= 1e-10, "{}", r.max_defect);
        let bad = LaserEnvelope::plane_wave(1.0, vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        let r = check_divergence_free(&bad, &grid, &times).unwrap();
        assert!(r.max_defect >= 0.1);
        // analytic: 2πE cos(u)
        assert!((r.max_defect - 2.0 * PI).abs() < 1e-8);
        let odd_box = make_grid(2, &[32], &[1.3]).unwrap();
        assert!(!check_divergence_free(&good, &odd_box, &times).unwrap().commensurate);
    }

    #[test]
    fn commensurability() {
        let env = LaserEnvelope::plane_wave(1.0, vec![1.0], vec![1.0]).unwrap();
        assert!(ScaledField::new(env.clone(), 20.0, 1.0).unwrap().is_commensurate(&[80.0]));
        assert!(!ScaledField::new(env, 30.0, 1.0).unwrap().is_commensurate(&[80.0]));
    }
}
