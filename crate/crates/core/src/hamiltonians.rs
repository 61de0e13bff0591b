//! Binding potentials and the three generators
//!
//! * full coupling `H_λ(t) = Σ_j (−i∂_j − b_j(r, t))² + V`,
//! * dipole velocity gauge `H_∞(t) = (−i∇ − b(0, t))² + V`,
//! * dipole length gauge `H_L(t) = −Δ + V + ḃ(0, t)·r`,
//!
//! all applied matrix-free with FFTs. For `N` particles the configuration
//! space is the product of `N` copies of the field's space and the
//! coupling acts on each particle with its own coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScaledField;
use crate::spatial::{Grid, WaveFunction};

/// Default soft-core smoothing length.
pub const DEFAULT_SOFTENING: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialModel {
    /// `−2Z/√(|r|² + eps²)`.
    SoftCoreCoulomb { z: f64, eps: f64 },
    /// `−depth·exp(−|r|²/width²)`.
    GaussianWell { depth: f64, width: f64 },
    /// `−Σ_k 2N/√(|r_k|² + eps²) + Σ_{k<l} 2/√(|r_k − r_l|² + eps²)`.
    NBodySoftCore { particles: usize, eps: f64 },
    Zero,
}

impl PotentialModel {
    pub fn particles(&self) -> usize {
        match self {
            PotentialModel::NBodySoftCore { particles, .. } => *particles,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match *self {
            PotentialModel::SoftCoreCoulomb { z, eps } => {
                if !(eps > 0.0) || !z.is_finite() {
                    return bad("soft-core potential needs eps > 0 and finite Z");
                }
            }
            PotentialModel::GaussianWell { depth, width } => {
                if !(width > 0.0) || !depth.is_finite() {
                    return bad("Gaussian well needs width > 0 and finite depth");
                }
            }
            PotentialModel::NBodySoftCore { particles, eps } => {
                if particles == 0 || !(eps > 0.0) {
                    return bad("N-body potential needs N >= 1 and eps > 0");
                }
            }
            PotentialModel::Zero => {}
        }
        Ok(())
    }

    /// Value at configuration `x` (all particles' coordinates).
    pub fn value(&self, x: &[f64]) -> f64 {
        let r2 = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
        match *self {
            PotentialModel::SoftCoreCoulomb { z, eps } => -2.0 * z / (r2(x) + eps * eps).sqrt(),
            PotentialModel::GaussianWell { depth, width } => -depth * (-r2(x) / (width * width)).exp(),
            PotentialModel::NBodySoftCore { particles, eps } => {
                let d = x.len() / particles;
                let charge = 2.0 * particles as f64;
                let mut v = 0.0;
                for k in 0..particles {
                    let rk = &x[k * d..(k + 1) * d];
                    v -= charge / (r2(rk) + eps * eps).sqrt();
                    for l in k + 1..particles {
                        let rl = &x[l * d..(l + 1) * d];
                        let sep: f64 = rk.iter().zip(rl).map(|(a, b)| (a - b) * (a - b)).sum();
                        v += 2.0 / (sep + eps * eps).sqrt();
                    }
                }
                v
            }
            PotentialModel::Zero => 0.0,
        }
    }

    /// Samples the potential on `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<Potential> {
        self.validate()?;
        if grid.dim() % self.particles() != 0 {
            return Err(Error::Config(format!(
                "{} particles do not tile a {}-dimensional grid",
                self.particles(),
                grid.dim()
            )));
        }
        let mut x = vec![0.0; grid.dim()];
        let samples = (0..grid.len())
            .map(|i| {
                grid.position_into(i, &mut x);
                self.value(&x)
            })
            .collect::<Vec<_>>();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("potential has non-finite samples".into()));
        }
        Ok(Potential { model: self.clone(), grid: grid.clone(), samples })
    }
}

/// Builds the `N`-electron soft-core potential on the product grid.
pub fn build_nbody(particles: usize, eps: f64, grid: &Grid) -> Result<Potential> {
    PotentialModel::NBodySoftCore { particles, eps }.sample(grid)
}

/// A potential model together with its samples on one grid.
#[derive(Clone, Debug)]
pub struct Potential {
    model: PotentialModel,
    grid: Grid,
    samples: Vec<f64>,
}

impl Potential {
    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn particles(&self) -> usize {
        self.model.particles()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    /// `⟨ψ|V|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &WaveFunction) -> f64 {
        let num: f64 = psi.values().iter().zip(&self.samples).map(|(z, v)| z.norm_sqr() * v).sum();
        let den: f64 = psi.values().iter().map(|z| z.norm_sqr()).sum();
        num / den
    }
}

/// Which generator, each carrying the laser field it is built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "field", rename_all = "kebab-case")]
pub enum Generator {
    FullCoupling(ScaledField),
    DipoleVelocity(ScaledField),
    DipoleLength(ScaledField),
}

impl Generator {
    pub fn field(&self) -> &ScaledField {
        match self {
            Generator::FullCoupling(f) | Generator::DipoleVelocity(f) | Generator::DipoleLength(f) => f,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::FullCoupling(_) => "full-coupling",
            Generator::DipoleVelocity(_) => "dipole-velocity",
            Generator::DipoleLength(_) => "dipole-length",
        }
    }

    pub fn is_dipole(&self) -> bool {
        !matches!(self, Generator::FullCoupling(_))
    }
}

/// How the full-coupling kinetic term is discretised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingForm {
    /// `Σ_j P_j P_j` with `P_j = −i∂_j − b_j`; Hermitian for any real `b`.
    #[default]
    MinimalSquare,
    /// `−Δ + 2i b·∇ + b²`; equal to the square only when `∇·b = 0`.
    CoulombExpanded,
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    generator: Generator,
    potential: Potential,
    form: CouplingForm,
}

impl HamiltonianSpec {
    pub fn new(generator: Generator, potential: Potential) -> Result<Self> {
        let grid = potential.grid();
        let field = generator.field();
        let particles = potential.particles();
        if field.dim() * particles != grid.dim() {
            return Err(Error::Config(format!(
                "{}-component field for {} particle(s) does not match a {}-dimensional grid",
                field.dim(),
                particles,
                grid.dim()
            )));
        }
        if let Generator::FullCoupling(f) = &generator {
            let d = f.dim();
            for k in 0..particles {
                if !f.is_commensurate(&grid.lengths()[k * d..(k + 1) * d]) {
                    return Err(Error::NonCommensurate(format!(
                        "λ = {} does not divide the box {:?} along k̂ = {:?}",
                        f.lambda(),
                        grid.lengths(),
                        f.envelope().k_hat()
                    )));
                }
            }
        }
        Ok(Self { generator, potential, form: CouplingForm::default() })
    }

    pub fn with_form(mut self, form: CouplingForm) -> Self {
        self.form = form;
        self
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn field(&self) -> &ScaledField {
        self.generator.field()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn form(&self) -> CouplingForm {
        self.form
    }

    pub fn particles(&self) -> usize {
        self.potential.particles()
    }

    /// Same potential and field, different generator kind.
    pub fn with_generator(&self, generator: Generator) -> Result<Self> {
        Ok(Self::new(generator, self.potential.clone())?.with_form(self.form))
    }

    /// Dipole coupling `b(0, t)` repeated for every particle.
    pub fn dipole_vector(&self, t: f64) -> Vec<f64> {
        self.field().dipole_coupling(t).repeat(self.particles())
    }

    /// `ḃ(0, t)` repeated for every particle.
    pub fn dipole_rate_vector(&self, t: f64) -> Vec<f64> {
        self.field().dipole_coupling_rate(t).repeat(self.particles())
    }

    /// Coupling components `b_j(r, t)` sampled on the grid, one array per axis.
    pub fn coupling_arrays(&self, t: f64) -> Vec<Vec<f64>> {
        let grid = self.grid();
        let field = self.field();
        let d = field.dim();
        let eps = field.envelope().eps_hat();
        let mut out = vec![vec![0.0; grid.len()]; grid.dim()];
        if field.envelope().is_zero() {
            return out;
        }
        let mut x = vec![0.0; grid.dim()];
        for i in 0..grid.len() {
            grid.position_into(i, &mut x);
            for k in 0..self.particles() {
                let s = field.coupling_scalar(&x[k * d..(k + 1) * d], t);
                for (c, e) in eps.iter().enumerate() {
                    out[k * d + c][i] = s * e;
                }
            }
        }
        out
    }

    /// `∇·b(r, t)` summed over particles, sampled on the grid.
    pub fn coupling_divergence_array(&self, t: f64) -> Vec<f64> {
        let grid = self.grid();
        let field = self.field();
        let d = field.dim();
        let mut x = vec![0.0; grid.dim()];
        (0..grid.len())
            .map(|i| {
                grid.position_into(i, &mut x);
                (0..self.particles()).map(|k| field.coupling_divergence(&x[k * d..(k + 1) * d], t)).sum()
            })
            .collect()
    }

    /// Freezes the generator at time `t` for repeated application.
    pub fn frozen(&self, t: f64) -> FrozenHamiltonian {
        let grid = self.grid().clone();
        let op = match &self.generator {
            Generator::FullCoupling(_) => FrozenOp::Full { b: self.coupling_arrays(t), form: self.form },
            Generator::DipoleVelocity(_) => {
                let beta = self.dipole_vector(t);
                let ks = grid.wavenumber_arrays();
                let symbol = (0..grid.len())
                    .map(|i| ks.iter().zip(&beta).map(|(k, b)| (k[i] - b).powi(2)).sum())
                    .collect();
                FrozenOp::Diagonalized { symbol, potential: self.potential.samples.clone() }
            }
            Generator::DipoleLength(_) => {
                let rate = self.dipole_rate_vector(t);
                let xs = grid.coordinate_arrays();
                let potential = self
                    .potential
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v + xs.iter().zip(&rate).map(|(x, r)| x[i] * r).sum::<f64>())
                    .collect();
                FrozenOp::Diagonalized { symbol: grid.k_squared(), potential }
            }
        };
        FrozenHamiltonian { grid, potential: self.potential.samples.clone(), op }
    }

    /// `H(t)ψ`.
    pub fn apply(&self, t: f64, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(self.frozen(t).apply(psi))
    }
}

/// Free-function form of [`HamiltonianSpec::apply`].
pub fn apply_hamiltonian(spec: &HamiltonianSpec, t: f64, psi: &WaveFunction) -> Result<WaveFunction> {
    spec.apply(t, psi)
}

enum FrozenOp {
    Full { b: Vec<Vec<f64>>, form: CouplingForm },
    /// `F⁻¹·symbol·F + diag(potential)`.
    Diagonalized { symbol: Vec<f64>, potential: Vec<f64> },
}

/// A generator frozen at one instant.
pub struct FrozenHamiltonian {
    grid: Grid,
    potential: Vec<f64>,
    op: FrozenOp,
}

impl FrozenHamiltonian {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Kinetic symbol and effective potential when the generator is
    /// diagonal in momentum space up to a multiplication operator.
    pub fn diagonal_parts(&self) -> Option<(&[f64], &[f64])> {
        match &self.op {
            FrozenOp::Diagonalized { symbol, potential } => Some((symbol, potential)),
            FrozenOp::Full { .. } => None,
        }
    }

    pub fn apply(&self, psi: &WaveFunction) -> WaveFunction {
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.apply_into(psi.values(), &mut out);
        WaveFunction::from_parts(self.grid.clone(), out)
    }

    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let grid = &self.grid;
        match &self.op {
            FrozenOp::Diagonalized { symbol, potential } => {
                out.copy_from_slice(psi);
                grid.fft_forward(out);
                out.iter_mut().zip(symbol).for_each(|(z, s)| *z *= s);
                grid.fft_inverse(out);
                for ((o, z), v) in out.iter_mut().zip(psi).zip(potential) {
                    *o += z * v;
                }
            }
            FrozenOp::Full { b, form } => {
                let mut hat = psi.to_vec();
                grid.fft_forward(&mut hat);
                let ks = grid.wavenumber_arrays();
                // axes without coupling reduce to a plain k² multiplier
                let mut plain = vec![0.0; grid.len()];
                let mut coupled = Vec::new();
                for (axis, bj) in b.iter().enumerate() {
                    if bj.iter().all(|&v| v == 0.0) {
                        plain.iter_mut().zip(&ks[axis]).for_each(|(p, k)| *p += k * k);
                    } else {
                        coupled.push(axis);
                    }
                }
                out.iter_mut().zip(&hat).zip(&plain).for_each(|((o, z), p)| *o = z * p);
                match form {
                    CouplingForm::MinimalSquare => {
                        let mut acc = vec![Complex64::default(); grid.len()];
                        for &axis in &coupled {
                            let (k, bj) = (&ks[axis], &b[axis]);
                            // φ = (−i∂ − b)ψ
                            let mut phi: Vec<Complex64> = hat.iter().zip(k).map(|(z, k)| z * k).collect();
                            grid.fft_inverse(&mut phi);
                            phi.iter_mut().zip(psi).zip(bj).for_each(|((p, z), b)| *p -= z * b);
                            let mut dphi = phi.clone();
                            grid.fft_forward(&mut dphi);
                            dphi.iter_mut().zip(k).for_each(|(z, k)| *z *= k);
                            grid.fft_inverse(&mut dphi);
                            for ((a, d), (p, b)) in acc.iter_mut().zip(&dphi).zip(phi.iter().zip(bj)) {
                                *a += d - p * b;
                            }
                        }
                        grid.fft_inverse(out);
                        out.iter_mut().zip(&acc).for_each(|(o, a)| *o += a);
                    }
                    CouplingForm::CoulombExpanded => {
                        let mut acc = vec![Complex64::default(); grid.len()];
                        for &axis in &coupled {
                            let (k, bj) = (&ks[axis], &b[axis]);
                            out.iter_mut().zip(&hat).zip(k).for_each(|((o, z), k)| *o += z * (k * k));
                            // 2i b ∂ψ = −2 b (−i∂ψ)
                            let mut d: Vec<Complex64> = hat.iter().zip(k).map(|(z, k)| z * k).collect();
                            grid.fft_inverse(&mut d);
                            for (((a, d), z), b) in acc.iter_mut().zip(&d).zip(psi).zip(bj) {
                                *a += -2.0 * b * d + b * b * z;
                            }
                        }
                        grid.fft_inverse(out);
                        out.iter_mut().zip(&acc).for_each(|(o, a)| *o += a);
                    }
                }
                for ((o, z), v) in out.iter_mut().zip(psi).zip(&self.potential) {
                    *o += z * v;
                }
            }
        }
    }
}

/// `max |⟨φ, Hψ⟩ − ⟨Hφ, ψ⟩|` over all pairs of probes (including each
/// probe with itself).
pub fn hermiticity_defect(spec: &HamiltonianSpec, t: f64, probes: &[WaveFunction]) -> Result<f64> {
    let frozen = spec.frozen(t);
    let mut images = Vec::with_capacity(probes.len());
    for p in probes {
        if p.grid() != spec.grid() {
            return Err(Error::GridMismatch);
        }
        images.push(frozen.apply(p));
    }
    let mut defect: f64 = 0.0;
    for i in 0..probes.len() {
        for j in i..probes.len() {
            let lhs = probes[i].inner_product(&images[j])?;
            let rhs = images[i].inner_product(&probes[j])?;
            defect = defect.max((lhs - rhs).norm());
        }
    }
    Ok(defect)
}
