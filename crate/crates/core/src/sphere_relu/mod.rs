//! Particle flows of the arccos (ReLU) kernel discrepancy on the circle.
//!
//! Angles are in radians on `[0, 2π)`. For a signed measure `η = μ − ν` the
//! potential is `Φ(x) = Σ_j q_j J(d(x, φ_j))`, the Wasserstein velocity is
//! `v = −Φ'`, and in Wasserstein–Fisher–Rao mode the weights follow
//! `dw_i/dt = −4Φ(θ_i) w_i`.
//!
//! Sign convention: with `Δ = x − φ` wrapped into `(−π, π]`, the geodesic
//! distance is `|Δ|` and `∂_x J(d(x, φ)) = J'(|Δ|) sign(Δ)`.

mod flow;
mod sum;

pub use flow::run_relu_flow;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::densities::quantile_diracs;
use crate::error::{Error, Result};
use crate::spectral::DensityField;
use sum::KernelSum;

/// `J(θ) = c(sin θ + (π − θ) cos θ)` on geodesic distances `θ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArccosKernel {
    c: f64,
}

impl Default for ArccosKernel {
    /// `c = ½`, so that `J(0) = ∫(x·ξ)₊² dξ = π/2` on the circle.
    fn default() -> Self {
        Self { c: 0.5 }
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::param(format!("geodesic distance {theta} outside [0, π]")));
    }
    Ok(())
}

impl ArccosKernel {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param(format!("kernel constant must be positive, got {c}")));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn value(&self, theta: f64) -> Result<f64> {
        check_angle(theta)?;
        Ok(self.c * (theta.sin() + (PI - theta) * theta.cos()))
    }

    /// `J'(θ) = −c(π − θ) sin θ`.
    pub fn derivative(&self, theta: f64) -> Result<f64> {
        check_angle(theta)?;
        Ok(-self.c * (PI - theta) * theta.sin())
    }

    /// `J(d(x, y))` for arbitrary angles.
    pub fn between(&self, x: f64, y: f64) -> f64 {
        self.value(geodesic(x, y)).expect("geodesic distance lies in [0, π]")
    }
}

pub fn kernel_value(kernel: &ArccosKernel, theta: f64) -> Result<f64> {
    kernel.value(theta)
}

pub fn kernel_derivative(kernel: &ArccosKernel, theta: f64) -> Result<f64> {
    kernel.derivative(theta)
}

/// Geodesic distance on the unit circle, in `[0, π]`.
pub fn geodesic(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Eigenvalue `λ_k` of the arccos kernel on the Fourier mode `k`, normalized so
/// that `∫_{−π}^{π} J(|θ|) cos(kθ) dθ = λ_k`.
pub fn spectral_lambda(k: u64) -> f64 {
    match k {
        0 => 4.0,
        1 => PI * PI / 4.0,
        k if k % 2 == 0 => {
            let kk = (k * k) as f64;
            4.0 / ((kk - 1.0) * (kk - 1.0))
        }
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowMode {
    #[serde(rename = "W")]
    Wasserstein,
    #[serde(rename = "WFR")]
    Wfr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    angles: Vec<f64>,
    weights: Vec<f64>,
    mode: FlowMode,
}

impl ParticleSystem {
    pub fn new(angles: Vec<f64>, weights: Vec<f64>, mode: FlowMode) -> Result<Self> {
        if angles.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: angles.len(), got: weights.len() });
        }
        for (i, (a, w)) in angles.iter().zip(&weights).enumerate() {
            if !a.is_finite() || !w.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if *w < 0.0 {
                return Err(Error::NegativeDensity { index: i, value: *w });
            }
        }
        let angles = angles.into_iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
        Ok(Self { angles, weights, mode })
    }

    /// `n` equal masses `1/n` at equispaced angles `2π(j + ½)/n`.
    pub fn uniform(n: usize, mode: FlowMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("need at least one particle"));
        }
        let angles = (0..n).map(|j| 2.0 * PI * (j as f64 + 0.5) / n as f64).collect();
        Self::new(angles, vec![1.0 / n as f64; n], mode)
    }

    /// `n` equal masses at the midpoint angle quantiles of a density on `[0, 1)`
    /// mapped to angles by `x ↦ 2πx`.
    pub fn from_density_quantiles(f: &DensityField, n: usize, mode: FlowMode) -> Result<Self> {
        let q = quantile_diracs(f, n)?;
        let angles = q.locations().iter().map(|x| 2.0 * PI * x).collect();
        Self::new(angles, q.weights().to_vec(), mode)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> FlowMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same particles rotated by `delta`.
    pub fn rotated(&self, delta: f64) -> Self {
        Self {
            angles: self.angles.iter().map(|a| (a + delta).rem_euclid(2.0 * PI)).collect(),
            weights: self.weights.clone(),
            mode: self.mode,
        }
    }

    /// Even version: every particle is split into itself and its antipode,
    /// each carrying half the weight.
    pub fn symmetrized(&self) -> Self {
        let mut angles = self.angles.clone();
        angles.extend(self.angles.iter().map(|a| (a + PI).rem_euclid(2.0 * PI)));
        let half: Vec<f64> = self.weights.iter().map(|w| 0.5 * w).collect();
        let mut weights = half.clone();
        weights.extend(half);
        Self { angles, weights, mode: self.mode }
    }

    pub(crate) fn set(&mut self, angles: Vec<f64>, weights: Vec<f64>) {
        self.angles = angles;
        self.weights = weights;
    }
}

/// Potential of `μ − ν` as a kernel-sum evaluator.
fn discrepancy_sum(mu: &ParticleSystem, nu: &ParticleSystem, kernel: &ArccosKernel) -> KernelSum {
    let mut angles = mu.angles.clone();
    angles.extend_from_slice(&nu.angles);
    let mut charges = mu.weights.clone();
    charges.extend(nu.weights.iter().map(|w| -w));
    KernelSum::new(kernel.c(), &angles, &charges)
}

/// `(Φ(θ_i), Φ'(θ_i))` at the μ-particles, `Φ = K(μ − ν)`.
pub fn potential_at_particles(mu: &ParticleSystem, nu: &ParticleSystem, kernel: &ArccosKernel) -> Vec<(f64, f64)> {
    let sum = discrepancy_sum(mu, nu, kernel);
    mu.angles.iter().map(|&x| sum.eval(x)).collect()
}

/// `dθ_i/dt = −Φ'(θ_i)`.
pub fn particle_velocity(mu: &ParticleSystem, nu: &ParticleSystem, kernel: &ArccosKernel) -> Vec<f64> {
    potential_at_particles(mu, nu, kernel).into_iter().map(|(_, d)| -d).collect()
}

/// `dw_i/dt = −4Φ(θ_i) w_i`.
pub fn wfr_weight_rate(mu: &ParticleSystem, nu: &ParticleSystem, kernel: &ArccosKernel) -> Vec<f64> {
    potential_at_particles(mu, nu, kernel).into_iter().zip(&mu.weights).map(|((p, _), w)| -4.0 * p * w).collect()
}

/// `½ ∬ J d(μ − ν) d(μ − ν)`.
pub fn relu_energy(mu: &ParticleSystem, nu: &ParticleSystem, kernel: &ArccosKernel) -> f64 {
    let sum = discrepancy_sum(mu, nu, kernel);
    let plus: f64 = mu.angles.iter().zip(&mu.weights).map(|(&x, w)| w * sum.eval(x).0).sum();
    let minus: f64 = nu.angles.iter().zip(&nu.weights).map(|(&x, w)| w * sum.eval(x).0).sum();
    0.5 * (plus - minus)
}

/// Gram matrix `[J(d(θ_i, θ_j))]`, row-major.
pub fn gram_matrix(angles: &[f64], kernel: &ArccosKernel) -> Vec<f64> {
    let n = angles.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = kernel.between(angles[i], angles[j]);
        }
    }
    g
}

/// Fourier coefficients of a signed measure on the circle:
/// `a_0 = Σw/(2π)`, `a_k = Σ w cos(kθ)/π`, `b_k = Σ w sin(kθ)/π`.
///
/// With this normalization a measure with density `f` satisfies
/// `f(θ) = a_0 + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpectrum {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SphereSpectrum {
    pub fn zeros(k_max: usize) -> Self {
        Self { a: vec![0.0; k_max + 1], b: vec![0.0; k_max + 1] }
    }

    pub fn k_max(&self) -> usize {
        self.a.len() - 1
    }

    /// Adds `sign · Σ_j w_j δ_{θ_j}` to the coefficients.
    pub fn add_particles(&mut self, angles: &[f64], weights: &[f64], sign: f64) {
        for (&t, &w) in angles.iter().zip(weights) {
            self.a[0] += sign * w / (2.0 * PI);
            // recurrence for cos(kθ), sin(kθ)
            let (s1, c1) = t.sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for k in 1..self.a.len() {
                let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
                s = sn;
                c = cn;
                self.a[k] += sign * w * c / PI;
                self.b[k] += sign * w * s / PI;
            }
        }
    }

    /// Coefficients of `μ − ν`.
    pub fn of_difference(mu: &ParticleSystem, nu: &ParticleSystem, k_max: usize) -> Self {
        let mut s = Self::zeros(k_max);
        s.add_particles(&mu.angles, &mu.weights, 1.0);
        s.add_particles(&nu.angles, &nu.weights, -1.0);
        s
    }

    /// Coefficients of a density sampled at `values.len()` equispaced angles
    /// `2π(i + ½)/n`, by the midpoint rule.
    pub fn of_density_samples(values: &[f64], k_max: usize) -> Self {
        let n = values.len();
        let h = 2.0 * PI / n as f64;
        let angles: Vec<f64> = (0..n).map(|i| h * (i as f64 + 0.5)).collect();
        let weights: Vec<f64> = values.iter().map(|v| v * h).collect();
        let mut s = Self::zeros(k_max);
        s.add_particles(&angles, &weights, 1.0);
        s
    }

    /// Total mass `2π a_0`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.a[0]
    }

    /// Truncated kernel energy `½[λ_0 2π a_0² + π Σ λ_k (a_k² + b_k²)]`.
    pub fn energy(&self) -> f64 {
        let tail: f64 =
            (1..self.a.len()).map(|k| spectral_lambda(k as u64) * (self.a[k].powi(2) + self.b[k].powi(2))).sum();
        0.5 * (spectral_lambda(0) * 2.0 * PI * self.a[0].powi(2) + PI * tail)
    }

    /// `‖·‖²_{Ḣ^{-s}} = π Σ_{k≥1} k^{-2s} (a_k² + b_k²)`.
    pub fn hminus_sq(&self, s: f64) -> f64 {
        PI * (1..self.a.len()).map(|k| (k as f64).powf(-2.0 * s) * (self.a[k].powi(2) + self.b[k].powi(2))).sum::<f64>()
    }

    /// `E / ((Δ mass)² + ‖·‖²_{Ḣ^{-2}})`.
    pub fn comparability_ratio(&self) -> f64 {
        self.energy() / (self.mass().powi(2) + self.hminus_sq(2.0))
    }
}
