//! Fourier analysis on a uniform grid of the unit torus `[0, 1)`.
//!
//! Cell `i` has center `x_i = (i + ½)/n` and right face `x_{i+½} = (i + 1)/n`.
//! Coefficients follow the continuous convention
//! `f̂_k = ∫ f(x) e^{-2πikx} dx`, approximated by
//! `coeff_k = (1/n) Σ_i f_i e^{-2πik x_i}` for the representable frequencies
//! `k ∈ {-n/2, …, n/2 - 1}`.
//!
//! Norms and multipliers only see representable frequencies. Negative-order
//! norms are therefore grid-converged for any bounded density, while
//! positive-order norms are meaningful only for inputs that are
//! band-limited by construction.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether a spectrum represents a real function.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Uniform grid on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid1D {
    n_cells: usize,
}

impl TorusGrid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 8 || !n_cells.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n_cells));
        }
        Ok(Self { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_cells as f64
    }

    pub fn face(&self, i: usize) -> f64 {
        (i as f64 + 1.0) / self.n_cells as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Largest representable `|k|` (the Nyquist frequency `n/2`).
    pub fn nyquist(&self) -> usize {
        self.n_cells / 2
    }

    /// Signed frequency stored at FFT slot `m`.
    pub fn frequency(&self, m: usize) -> i64 {
        let n = self.n_cells as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    fn slot(&self, k: i64) -> Option<usize> {
        let n = self.n_cells as i64;
        if k < -n / 2 || k >= n / 2 {
            None
        } else {
            Some(k.rem_euclid(n) as usize)
        }
    }
}

/// Nonnegative cell averages on a [`TorusGrid1D`].
///
/// The mean of the values is the total mass (the torus has unit length).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: TorusGrid1D,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: TorusGrid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::LengthMismatch { expected: grid.n_cells(), got: values.len() });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if value < 0.0 {
                return Err(Error::NegativeDensity { index, value });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn uniform(grid: TorusGrid1D) -> Self {
        Self { grid, values: vec![1.0; grid.n_cells()] }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: TorusGrid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.centers().map(f).collect())
    }

    pub fn grid(&self) -> TorusGrid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise difference `self - other` as a signed sample array.
    pub fn difference(&self, other: &DensityField) -> Result<Vec<f64>> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.n_cells(), other.grid.n_cells()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }
}

/// Fourier coefficients on a [`TorusGrid1D`], stored in FFT order.
#[derive(Clone, PartialEq)]
pub struct Spectrum {
    grid: TorusGrid1D,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrum")
            .field("n_cells", &self.grid.n_cells())
            .field("coeff_0", &self.coeffs[0])
            .finish_non_exhaustive()
    }
}

impl Spectrum {
    pub fn zeros(grid: TorusGrid1D) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n_cells()] }
    }

    /// Builds the spectrum of a real function from its nonnegative
    /// frequencies; the conjugate partners are filled in.
    ///
    /// `k = 0` must be real. `k = n/2` is rejected because its partner is
    /// not representable.
    pub fn from_real_modes(grid: TorusGrid1D, modes: &[(usize, Complex64)]) -> Result<Self> {
        let mut s = Self::zeros(grid);
        for &(k, c) in modes {
            if k >= grid.nyquist() {
                return Err(Error::param(format!("mode {k} is not below the Nyquist frequency {}", grid.nyquist())));
            }
            if k == 0 {
                s.coeffs[0] += Complex64::new(c.re, 0.0);
            } else {
                let k = k as i64;
                let (p, m) = (grid.slot(k).unwrap(), grid.slot(-k).unwrap());
                s.coeffs[p] += c;
                s.coeffs[m] += c.conj();
            }
        }
        Ok(s)
    }

    pub fn grid(&self) -> TorusGrid1D {
        self.grid
    }

    /// Coefficient of frequency `k`, or `None` when `k` is not representable.
    pub fn get(&self, k: i64) -> Option<Complex64> {
        self.grid.slot(k).map(|m| self.coeffs[m])
    }

    /// Mutable access to the coefficient of frequency `k`.
    pub fn get_mut(&mut self, k: i64) -> Option<&mut Complex64> {
        self.grid.slot(k).map(move |m| &mut self.coeffs[m])
    }

    /// `(k, coeff_k)` pairs in FFT order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(m, &c)| (self.grid.frequency(m), c))
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Largest violation of `coeff_{-k} = conj(coeff_k)`, with the frequency where it occurs.
    ///
    /// `coeff_0` must be real and, because of the half-cell offset of the
    /// sampling points, the Nyquist coefficient of a real function is purely
    /// imaginary.
    pub fn symmetry_defect(&self) -> (i64, f64) {
        let n = self.grid.n_cells() as i64;
        let mut worst = (0, self.coeffs[0].im.abs());
        let nyq = self.get(-n / 2).unwrap().re.abs();
        if nyq > worst.1 {
            worst = (-n / 2, nyq);
        }
        for k in 1..n / 2 {
            let d = (self.get(k).unwrap() - self.get(-k).unwrap().conj()).norm();
            if d > worst.1 {
                worst = (k, d);
            }
        }
        worst
    }

    fn check_symmetry(&self) -> Result<()> {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
        let (frequency, defect) = self.symmetry_defect();
        if defect > SYMMETRY_TOLERANCE * scale {
            return Err(Error::BrokenSymmetry { frequency, defect });
        }
        Ok(())
    }
}

/// Riesz exponent `s ≥ 1`; the kernel symbol is `(2π|k|)^{-2s}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RieszParams {
    s: f64,
}

impl RieszParams {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s < 1.0 {
            return Err(Error::param(format!("Riesz exponent must be >= 1, got {s}")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `K̂_s(k) = (2π|k|)^{-2s}`, zero at `k = 0`.
    pub fn symbol(&self, k: i64) -> f64 {
        if k == 0 {
            0.0
        } else {
            (2.0 * PI * k.unsigned_abs() as f64).powf(-2.0 * self.s)
        }
    }
}

/// Cached FFT plans and scratch space for repeated transforms on one grid.
pub struct FourierPlan {
    grid: TorusGrid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
    /// `e^{iπk/n}` per slot: the half-cell phase between FFT nodes and cell
    /// centers, and again between cell centers and right faces.
    half_shift: Vec<Complex64>,
}

impl FourierPlan {
    pub fn new(grid: TorusGrid1D) -> Self {
        let n = grid.n_cells();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let half_shift = (0..n).map(|m| Complex64::from_polar(1.0, PI * grid.frequency(m) as f64 / n as f64)).collect();
        Self {
            grid,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            half_shift,
        }
    }

    pub fn grid(&self) -> TorusGrid1D {
        self.grid
    }

    /// Transforms real cell samples into `out`.
    pub fn forward_into(&mut self, samples: &[f64], out: &mut Spectrum) -> Result<()> {
        let n = self.grid.n_cells();
        if samples.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: samples.len() });
        }
        if out.grid != self.grid {
            return Err(Error::GridMismatch(out.grid.n_cells(), n));
        }
        for (b, &v) in self.buffer.iter_mut().zip(samples) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let inv_n = 1.0 / n as f64;
        for ((c, b), h) in out.coeffs.iter_mut().zip(&self.buffer).zip(&self.half_shift) {
            *c = b * h.conj() * inv_n;
        }
        Ok(())
    }

    pub fn forward(&mut self, samples: &[f64]) -> Result<Spectrum> {
        let mut out = Spectrum::zeros(self.grid);
        self.forward_into(samples, &mut out)?;
        Ok(out)
    }

    /// Evaluates `Σ_k m(k) coeff_k e^{2πikx}` at cell centers (`at_faces = false`)
    /// or at right faces (`at_faces = true`), writing the real part into `out`.
    ///
    /// The caller is responsible for `m(k) coeff_k` being conjugate symmetric.
    pub fn synthesize_into(
        &mut self,
        spectrum: &Spectrum,
        multiplier: impl Fn(i64) -> Complex64,
        at_faces: bool,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.grid.n_cells();
        if out.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: out.len() });
        }
        if spectrum.grid != self.grid {
            return Err(Error::GridMismatch(spectrum.grid.n_cells(), n));
        }
        for m in 0..n {
            let k = self.grid.frequency(m);
            let mut phase = self.half_shift[m];
            if at_faces {
                phase *= self.half_shift[m];
            }
            self.buffer[m] = spectrum.coeffs[m] * multiplier(k) * phase;
        }
        self.inverse.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re;
        }
        Ok(())
    }
}

/// Fourier coefficients of a density field.
pub fn forward_transform(f: &DensityField) -> Spectrum {
    transform_samples(f.grid(), f.values()).expect("field length matches its grid")
}

/// Fourier coefficients of an arbitrary real sample array (for example `μ − ν`).
pub fn transform_samples(grid: TorusGrid1D, samples: &[f64]) -> Result<Spectrum> {
    FourierPlan::new(grid).forward(samples)
}

/// Cell-center values of the real function represented by `spectrum`.
///
/// Fails with [`Error::BrokenSymmetry`] when the spectrum is not the
/// spectrum of a real function (relative defect above `1e-10`).
pub fn inverse_transform(spectrum: &Spectrum) -> Result<Vec<f64>> {
    spectrum.check_symmetry()?;
    let mut out = vec![0.0; spectrum.grid.n_cells()];
    FourierPlan::new(spectrum.grid).synthesize_into(spectrum, |_| Complex64::new(1.0, 0.0), false, &mut out)?;
    Ok(out)
}

/// Homogeneous Sobolev seminorm `(Σ_{k≠0} (2π|k|)^{2γ} |coeff_k|²)^{1/2}`.
pub fn sobolev_seminorm(spectrum: &Spectrum, gamma: f64) -> f64 {
    spectrum
        .iter()
        .filter(|&(k, _)| k != 0)
        .map(|(k, c)| (2.0 * PI * k.unsigned_abs() as f64).powf(2.0 * gamma) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Multiplier of `v = -∇K_s * σ`: `-(2πik)(2π|k|)^{-2s}`, zero at `k = 0`
/// and at the unpaired Nyquist slot.
pub(crate) fn velocity_multiplier(params: RieszParams, grid: TorusGrid1D) -> impl Fn(i64) -> Complex64 {
    let nyq = -(grid.nyquist() as i64);
    move |k| {
        if k == 0 || k == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -2.0 * PI * k as f64) * params.symbol(k)
        }
    }
}

/// Face velocities `v_{i+½}` of the Riesz flow driven by `sigma = μ − ν`.
///
/// Entry `i` is the velocity at `x = (i + 1)/n`, obtained by an exact Fourier
/// phase shift rather than interpolation.
pub fn riesz_velocity(sigma: &Spectrum, params: RieszParams) -> Result<Vec<f64>> {
    sigma.check_symmetry()?;
    let grid = sigma.grid;
    let mut out = vec![0.0; grid.n_cells()];
    FourierPlan::new(grid).synthesize_into(sigma, velocity_multiplier(params, grid), true, &mut out)?;
    Ok(out)
}

/// Riesz discrepancy `½ Σ_{k≠0} (2π|k|)^{-2s} |σ̂_k|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszEnergy {
    pub value: f64,
    /// `σ̂_0`; nonzero means the two measures carry different mass and
    /// `value` only accounts for the zero-mean part.
    pub mean: f64,
}

impl RieszEnergy {
    pub fn is_balanced(&self) -> bool {
        self.mean.abs() <= 1e-10
    }
}

pub fn hminus_s_energy(sigma: &Spectrum, params: RieszParams) -> RieszEnergy {
    let value = 0.5 * sigma.iter().map(|(k, c)| params.symbol(k) * c.norm_sqr()).sum::<f64>();
    RieszEnergy { value, mean: sigma.mean().re }
}
