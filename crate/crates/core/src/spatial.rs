//! Periodic tensor-product grids and wavefunctions on them.
//!
//! Every grid is a centred box `[-L/2, L/2)` per axis with a power-of-two
//! number of points, so the origin is always a grid node. Derivatives are
//! Fourier multipliers; the Nyquist mode keeps its signed wavenumber
//! `-π/dx`, which makes `(-i∂)²` and `-Δ` the same discrete operator.
//!
//! Norms include the volume element, so refining a grid leaves the norm
//! of a resolved state unchanged.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default cap on the total number of grid points.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 24;

const SNAPSHOT_MAGIC: &[u8; 4] = b"DPLW";
const SNAPSHOT_VERSION: u32 = 1;

struct SpectralCache {
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    coords: Vec<Vec<f64>>,
    wavenumbers: Vec<Vec<f64>>,
}

/// A periodic tensor grid. Cloning is cheap; FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    points: Vec<usize>,
    lengths: Vec<f64>,
    cache: Arc<SpectralCache>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("points", &self.points)
            .field("lengths", &self.lengths)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.lengths == other.lengths
    }
}

/// Builds an `n`-dimensional grid. Single-element `points` or `lengths`
/// slices are broadcast to every axis.
pub fn make_grid(n: usize, points: &[usize], lengths: &[f64]) -> Result<Grid> {
    let expand = |len: usize, what: &str| -> Result<()> {
        if len == 1 || len == n {
            Ok(())
        } else {
            Err(Error::Grid(format!("{what} has {len} entries for a {n}-dimensional grid")))
        }
    };
    expand(points.len(), "points")?;
    expand(lengths.len(), "lengths")?;
    let pts: Vec<usize> = (0..n).map(|a| points[a.min(points.len() - 1)]).collect();
    let lens: Vec<f64> = (0..n).map(|a| lengths[a.min(lengths.len() - 1)]).collect();
    Grid::new(&pts, &lens)
}

impl Grid {
    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Self> {
        Self::with_memory_cap(points, lengths, DEFAULT_MEMORY_CAP)
    }

    pub fn with_memory_cap(points: &[usize], lengths: &[f64], cap: usize) -> Result<Self> {
        if points.is_empty() || points.len() != lengths.len() {
            return Err(Error::Grid(format!(
                "need matching, non-empty points/lengths (got {} and {})",
                points.len(),
                lengths.len()
            )));
        }
        for (&p, &l) in points.iter().zip(lengths) {
            if p < 8 || !p.is_power_of_two() {
                return Err(Error::Grid(format!("{p} points per axis: need a power of two >= 8")));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Grid(format!("box length {l} must be positive")));
            }
        }
        let total = points
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p))
            .filter(|&t| t <= cap)
            .ok_or_else(|| Error::SizeCap(format!("grid {points:?} exceeds {cap} points")))?;
        let _ = total;

        let mut planner = FftPlanner::new();
        let mut forward = Vec::new();
        let mut inverse = Vec::new();
        let mut coords = Vec::new();
        let mut wavenumbers = Vec::new();
        for (&p, &l) in points.iter().zip(lengths) {
            forward.push(planner.plan_fft_forward(p));
            inverse.push(planner.plan_fft_inverse(p));
            let dx = l / p as f64;
            coords.push((0..p).map(|j| -0.5 * l + j as f64 * dx).collect());
            let half = (p / 2) as isize;
            wavenumbers.push(
                (0..p as isize)
                    .map(|j| {
                        let m = if j < half { j } else { j - p as isize };
                        2.0 * PI * m as f64 / l
                    })
                    .collect(),
            );
        }
        Ok(Self {
            points: points.to_vec(),
            lengths: lengths.to_vec(),
            cache: Arc::new(SpectralCache { forward, inverse, coords, wavenumbers }),
        })
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Momentum-space cell volume `Π 2π/L`.
    pub fn reciprocal_cell_volume(&self) -> f64 {
        self.lengths.iter().map(|l| 2.0 * PI / l).product()
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.cache.coords[axis]
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.cache.wavenumbers[axis]
    }

    /// Stride of `axis` in the row-major layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    /// Index along `axis` of flat index `flat`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.points[axis]
    }

    /// Coordinates of flat index `flat`, written into `out`.
    pub fn position_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            let p = self.points[axis];
            out[axis] = self.cache.coords[axis][rem % p];
            rem /= p;
        }
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.position_into(flat, &mut out);
        out
    }

    /// One coordinate array per axis, each of length `len()`.
    pub fn coordinate_arrays(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|axis| {
                let stride = self.stride(axis);
                let p = self.points[axis];
                let c = &self.cache.coords[axis];
                (0..self.len()).map(|i| c[(i / stride) % p]).collect()
            })
            .collect()
    }

    /// One wavenumber array per axis, in FFT order, each of length `len()`.
    pub fn wavenumber_arrays(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|axis| {
                let stride = self.stride(axis);
                let p = self.points[axis];
                let k = &self.cache.wavenumbers[axis];
                (0..self.len()).map(|i| k[(i / stride) % p]).collect()
            })
            .collect()
    }

    /// `|k|²` in FFT order.
    pub fn k_squared(&self) -> Vec<f64> {
        let ks = self.wavenumber_arrays();
        (0..self.len()).map(|i| ks.iter().map(|k| k[i] * k[i]).sum()).collect()
    }

    /// Unnormalised forward DFT over all axes, in place.
    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.cache.forward);
    }

    /// Inverse DFT over all axes including the `1/N` factor, in place.
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.cache.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        for (axis, plan) in plans.iter().enumerate() {
            let p = self.points[axis];
            let stride = self.stride(axis);
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = p * stride;
            let mut line = vec![Complex64::default(); p];
            for outer in data.chunks_mut(block) {
                for s in 0..stride {
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = outer[j * stride + s];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, z) in line.iter().enumerate() {
                        outer[j * stride + s] = *z;
                    }
                }
            }
        }
    }
}

/// A complex field on a grid.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidState(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(Self { grid, values })
    }

    /// Unchecked constructor for internal buffers that are finite by construction.
    pub(crate) fn from_parts(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.position_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero or non-finite state".into()));
        }
        self.scale(Complex64::new(1.0 / n, 0.0));
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.values.iter_mut().for_each(|z| *z *= factor);
    }

    /// `⟨self, other⟩ = Σ conj(self)·other·dV`.
    pub fn inner_product(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    pub fn check_same_grid(&self, other: &WaveFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `∂ψ/∂x_a` for each axis via the Fourier multiplier `i k_a`.
    pub fn spectral_gradient(&self) -> Vec<WaveFunction> {
        let mut hat = self.values.clone();
        self.grid.fft_forward(&mut hat);
        let ks = self.grid.wavenumber_arrays();
        ks.iter()
            .map(|k| {
                let mut d: Vec<Complex64> =
                    hat.iter().zip(k).map(|(z, &k)| z * Complex64::new(0.0, k)).collect();
                self.grid.fft_inverse(&mut d);
                WaveFunction::from_parts(self.grid.clone(), d)
            })
            .collect()
    }

    /// `Δψ` via the multiplier `−|k|²`.
    pub fn spectral_laplacian(&self) -> WaveFunction {
        let mut hat = self.values.clone();
        self.grid.fft_forward(&mut hat);
        for (z, k2) in hat.iter_mut().zip(self.grid.k_squared()) {
            *z *= -k2;
        }
        self.grid.fft_inverse(&mut hat);
        WaveFunction::from_parts(self.grid.clone(), hat)
    }

    /// Unitary continuous Fourier transform sampled on the reciprocal grid:
    /// `ψ̂(k) = (2π)^{-n/2} Σ ψ(x) e^{-ik·x} dV`.
    pub fn to_momentum(&self) -> MomentumWaveFunction {
        let mut hat = self.values.clone();
        self.grid.fft_forward(&mut hat);
        let scale = self.grid.cell_volume() / (2.0 * PI).powf(self.grid.dim() as f64 / 2.0);
        let offset = origin_phase(&self.grid);
        for (z, ph) in hat.iter_mut().zip(offset) {
            *z *= ph.conj() * scale;
        }
        MomentumWaveFunction { grid: self.grid.clone(), values: hat }
    }

    pub fn from_momentum(psi_hat: &MomentumWaveFunction) -> WaveFunction {
        let grid = &psi_hat.grid;
        let scale = (2.0 * PI).powf(grid.dim() as f64 / 2.0) / grid.cell_volume();
        let mut vals: Vec<Complex64> = psi_hat
            .values
            .iter()
            .zip(origin_phase(grid))
            .map(|(z, ph)| z * ph * scale)
            .collect();
        grid.fft_inverse(&mut vals);
        WaveFunction::from_parts(grid.clone(), vals)
    }

    pub fn expectations(&self) -> Expectations {
        let norm2 = self.norm_sqr();
        let dv = self.grid.cell_volume();
        let xs = self.grid.coordinate_arrays();
        let dim = self.grid.dim();
        let mut position = vec![0.0; dim];
        let mut position_sq = vec![0.0; dim];
        for (a, x) in xs.iter().enumerate() {
            for (z, &xi) in self.values.iter().zip(x) {
                let w = z.norm_sqr() * dv;
                position[a] += w * xi;
                position_sq[a] += w * xi * xi;
            }
        }
        let mut hat = self.values.clone();
        self.grid.fft_forward(&mut hat);
        let hat_norm2: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        let ks = self.grid.wavenumber_arrays();
        let mut momentum = vec![0.0; dim];
        let mut momentum_sq = vec![0.0; dim];
        for (a, k) in ks.iter().enumerate() {
            for (z, &ki) in hat.iter().zip(k) {
                let w = z.norm_sqr();
                momentum[a] += w * ki;
                momentum_sq[a] += w * ki * ki;
            }
            momentum[a] /= hat_norm2;
            momentum_sq[a] /= hat_norm2;
            position[a] /= norm2;
            position_sq[a] /= norm2;
        }
        Expectations { position, position_sq, momentum, momentum_sq }
    }

    /// Writes the binary snapshot: magic `DPLW`, version, dimension, points,
    /// box lengths, then interleaved little-endian `(re, im)` pairs.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        for &p in self.grid.points() {
            w.write_all(&(p as u32).to_le_bytes())?;
        }
        for &l in self.grid.lengths() {
            w.write_all(&l.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * self.values.len());
        for z in &self.values {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::InvalidState("not a snapshot file (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::InvalidState(format!("unsupported snapshot version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        if n == 0 || n > 16 {
            return Err(Error::InvalidState(format!("implausible dimension {n}")));
        }
        let points = (0..n).map(|_| read_u32(&mut r).map(|p| p as usize)).collect::<Result<Vec<_>>>()?;
        let lengths = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let grid = Grid::new(&points, &lengths)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            values.push(Complex64::new(re, im));
        }
        WaveFunction::new(grid, values)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// `e^{i k·x₀}` for the box corner `x₀ = −L/2`, in FFT order.
fn origin_phase(grid: &Grid) -> Vec<Complex64> {
    let ks = grid.wavenumber_arrays();
    (0..grid.len())
        .map(|i| {
            let phase: f64 = ks.iter().zip(grid.lengths()).map(|(k, l)| k[i] * (-0.5 * l)).sum();
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// A state in momentum representation, values in FFT order.
#[derive(Clone, Debug)]
pub struct MomentumWaveFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl MomentumWaveFunction {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.reciprocal_cell_volume())
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expectations {
    pub position: Vec<f64>,
    pub position_sq: Vec<f64>,
    pub momentum: Vec<f64>,
    pub momentum_sq: Vec<f64>,
}

/// Normalised isotropic Gaussian `(πσ²)^{-n/4} exp(−|x−c|²/2σ² + i k₀·x)`.
pub fn gaussian_packet(grid: &Grid, center: &[f64], sigma: f64, momentum: &[f64]) -> Result<WaveFunction> {
    let n = grid.dim();
    if center.len() != n || momentum.len() != n {
        return Err(Error::Config(format!("packet centre/momentum need {n} components")));
    }
    for axis in 0..n {
        let h = grid.spacing(axis);
        if !(sigma > 2.0 * h) {
            return Err(Error::Config(format!(
                "packet width {sigma} is not resolved by spacing {h} (need sigma > 2·dx)"
            )));
        }
        let half = 0.5 * grid.lengths()[axis];
        let gap = half - center[axis].abs();
        if gap <= 0.0 || (-(gap * gap) / (sigma * sigma)).exp() >= 1e-12 {
            return Err(Error::Config(format!(
                "packet tail reaches the box boundary along axis {axis}"
            )));
        }
    }
    let prefactor = (PI * sigma * sigma).powf(-(n as f64) / 4.0);
    let psi = WaveFunction::from_fn(grid, |x| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for a in 0..n {
            let d = x[a] - center[a];
            r2 += d * d;
            phase += momentum[a] * x[a];
        }
        Complex64::from_polar(prefactor * (-0.5 * r2 / (sigma * sigma)).exp(), phase)
    });
    // renormalise away the discretisation defect of the analytic prefactor
    psi.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d() -> Grid {
        make_grid(1, &[256], &[40.0]).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = grid1d();
        assert_eq!(g.spacing(0), 0.15625);
        assert_eq!(g.coords(0)[128], 0.0);
        let g2 = make_grid(2, &[64, 64], &[30.0, 30.0]).unwrap();
        assert_eq!(g2.len(), 4096);
        assert!(matches!(make_grid(1, &[7], &[40.0]), Err(Error::Grid(_))));
        assert!(matches!(make_grid(1, &[4], &[40.0]), Err(Error::Grid(_))));
        assert!(matches!(
            Grid::with_memory_cap(&[64, 64], &[1.0, 1.0], 1000),
            Err(Error::SizeCap(_))
        ));
    }

    #[test]
    fn nyquist_keeps_signed_wavenumber() {
        let g = make_grid(1, &[8], &[2.0 * PI]).unwrap();
        assert_eq!(g.wavenumbers(0), &[0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn packet_norm_and_moments() {
        let g = grid1d();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let e = psi.expectations();
        assert!(e.position[0].abs() < 1e-12);
        assert!(e.momentum[0].abs() < 1e-12);
        assert!((e.position_sq[0] - 0.5).abs() < 1e-8);

        let boosted = gaussian_packet(&g, &[0.0], 1.0, &[3.0]).unwrap();
        assert!((boosted.expectations().momentum[0] - 3.0).abs() < 1e-8);
        let two = gaussian_packet(&g, &[0.0], 1.0, &[2.0]).unwrap();
        assert!((two.expectations().momentum[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn packet_rejects_unresolved_or_clipped() {
        let g = make_grid(1, &[256], &[38.4]).unwrap();
        assert!(gaussian_packet(&g, &[0.0], 0.01, &[0.0]).is_err());
        assert!(gaussian_packet(&g, &[17.0], 1.0, &[0.0]).is_err());
    }

    #[test]
    fn parity_orthogonality() {
        let g = grid1d();
        let even = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap();
        let odd = WaveFunction::from_fn(&g, |x| Complex64::new(x[0] * (-x[0] * x[0] / 2.0).exp(), 0.0));
        assert!(even.inner_product(&odd).unwrap().norm() < 1e-12);
        assert!((even.inner_product(&even).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_rejects_other_grid() {
        let a = WaveFunction::zeros(&grid1d());
        let b = WaveFunction::zeros(&make_grid(1, &[128], &[40.0]).unwrap());
        assert!(matches!(a.inner_product(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn gradient_of_commensurate_plane_wave_is_exact() {
        let g = make_grid(2, &[32, 16], &[10.0, 8.0]).unwrap();
        let k = [2.0 * PI * 3.0 / 10.0, -2.0 * PI * 2.0 / 8.0];
        let psi = WaveFunction::from_fn(&g, |x| Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]));
        let grad = psi.spectral_gradient();
        for (a, d) in grad.iter().enumerate() {
            for (dz, z) in d.values().iter().zip(psi.values()) {
                assert!((dz - z * Complex64::new(0.0, k[a])).norm() < 1e-12);
            }
        }
        let lap = psi.spectral_laplacian();
        let k2 = k[0] * k[0] + k[1] * k[1];
        for (l, z) in lap.values().iter().zip(psi.values()) {
            assert!((l + z * k2).norm() < 1e-11);
        }
        let flat = WaveFunction::from_fn(&g, |_| Complex64::new(0.7, -0.2));
        assert!(flat.spectral_gradient().iter().all(|d| d.norm() < 1e-13));
    }

    #[test]
    fn gaussian_derivative_matches_closed_form() {
        let g = grid1d();
        let psi = WaveFunction::from_fn(&g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let d = &psi.spectral_gradient()[0];
        let lap = psi.spectral_laplacian();
        for (i, &x) in g.coords(0).iter().enumerate() {
            let e = (-x * x / 2.0).exp();
            assert!((d.values()[i].re + x * e).abs() < 1e-8);
            assert!((lap.values()[i].re - (x * x - 1.0) * e).abs() < 1e-8);
        }
    }

    #[test]
    fn shift_theorem_in_momentum_space() {
        let g = grid1d();
        let x0 = 1.5;
        let psi = gaussian_packet(&g, &[x0], 1.0, &[0.0]).unwrap();
        let hat = psi.to_momentum();
        // ψ̂(k) = π^{-1/4} e^{-k²/2} e^{-ik x0} for σ = 1
        for (z, &k) in hat.values().iter().zip(g.wavenumbers(0)) {
            let expect = Complex64::from_polar(PI.powf(-0.25) * (-k * k / 2.0).exp(), -k * x0);
            assert!((z - expect).norm() < 1e-10, "k = {k}");
        }
        assert!((hat.norm() - psi.norm()).abs() < 1e-13);
        let back = WaveFunction::from_momentum(&hat);
        assert!(back.distance(&psi).unwrap() < 1e-13);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = make_grid(2, &[8, 16], &[3.0, 5.0]).unwrap();
        let psi = WaveFunction::from_fn(&g, |x| Complex64::new(x[0], x[1] * x[1]));
        let mut buf = Vec::new();
        psi.write_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"DPLW");
        assert_eq!(buf.len(), 4 + 4 + 4 + 2 * 4 + 2 * 8 + 16 * 128);
        let back = WaveFunction::read_snapshot(&buf[..]).unwrap();
        assert_eq!(back.grid(), psi.grid());
        assert_eq!(back.values(), psi.values());
        buf[0] = b'X';
        assert!(WaveFunction::read_snapshot(&buf[..]).is_err());
    }
}
