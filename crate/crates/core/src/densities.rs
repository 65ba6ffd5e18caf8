//! Random densities with prescribed Sobolev regularity, CDFs and quantile
//! discretizations.
//!
//! A random density is built in three steps:
//!
//! 1. draw a band-limited trigonometric polynomial whose coefficient at
//!    frequency `k` has standard deviation `k^{-(γ + ½ + δ)}`, `δ = 0.01`,
//!    so that `Σ k^{2γ'} |ĝ_k|²` stays bounded as the band limit grows
//!    exactly when `γ' < γ + δ`;
//! 2. shift and scale it into a probability density with minimum `0`;
//! 3. mix with the uniform density, `(1 − m) ν̃ + m`, so the minimum is `m`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{self, DensityField, Spectrum, TorusGrid1D};

/// Offset added to the decay exponent of the random Fourier coefficients.
pub const DECAY_OFFSET: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensitySpec {
    /// Regularity label: the output lies in `Ḣ^{γ'}` for `γ' < γ + 0.01`
    /// uniformly in the band limit.
    pub gamma: f64,
    /// Minimum value of the produced density, in `[0, 1)`.
    pub min_value: f64,
    pub band_limit: usize,
    pub seed: u64,
}

impl DensitySpec {
    pub fn new(gamma: f64, min_value: f64, band_limit: usize, seed: u64) -> Self {
        Self { gamma, min_value, band_limit, seed }
    }

    pub fn validate(&self, grid: TorusGrid1D) -> Result<()> {
        if !(self.gamma > 0.5) || !self.gamma.is_finite() {
            return Err(Error::param(format!("regularity gamma must be finite and > 1/2, got {}", self.gamma)));
        }
        if !(0.0..1.0).contains(&self.min_value) {
            return Err(Error::param(format!("min_value must lie in [0, 1), got {}", self.min_value)));
        }
        if self.band_limit == 0 || self.band_limit > grid.nyquist() {
            return Err(Error::param(format!(
                "band limit must lie in [1, {}], got {}",
                grid.nyquist(),
                self.band_limit
            )));
        }
        Ok(())
    }
}

/// Exact cell averages of the random trigonometric polynomial for `spec`.
fn random_profile(spec: &DensitySpec, grid: TorusGrid1D) -> Result<Vec<f64>> {
    spec.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h = grid.spacing();
    let nyq = grid.nyquist();
    let mut modes = Vec::with_capacity(spec.band_limit);
    let mut nyquist_sine = 0.0;
    for k in 1..=spec.band_limit {
        let std = (k as f64).powf(-(spec.gamma + 0.5 + DECAY_OFFSET));
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        // averaging e^{2πikx} over a cell multiplies it by sinc(πkh)
        let arg = PI * k as f64 * h;
        let sinc = arg.sin() / arg;
        if k < nyq {
            // a cos + b sin = Re((a - ib) e^{2πikx})
            modes.push((k, Complex64::new(a, -b) * (0.5 * std * sinc)));
        } else {
            // at k = n/2 the cosine vanishes at every cell center
            nyquist_sine = b * std * sinc;
        }
    }
    let mut values = spectral::inverse_transform(&Spectrum::from_real_modes(grid, &modes)?)?;
    if nyquist_sine != 0.0 {
        for (i, v) in values.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *v += nyquist_sine * sign;
        }
    }
    Ok(values)
}

/// Shift/scale to a probability density of minimum 0, then mix with uniform.
fn normalize_and_mix(mut values: Vec<f64>, min_value: f64) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    for v in values.iter_mut() {
        *v -= lo;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Degenerate("random profile is constant".into()));
    }
    for v in values.iter_mut() {
        *v = (1.0 - min_value) * (*v / mean) + min_value;
    }
    let achieved = values.iter().copied().fold(f64::INFINITY, f64::min);
    if (achieved - min_value).abs() > 1e-12 {
        return Err(Error::Degenerate(format!("mixture minimum {achieved} misses the requested {min_value}")));
    }
    Ok(values)
}

/// Random probability density with regularity label `spec.gamma` and
/// minimum exactly `spec.min_value`. Deterministic in `spec.seed`.
pub fn random_density(spec: &DensitySpec, grid: TorusGrid1D) -> Result<DensityField> {
    let values = normalize_and_mix(random_profile(spec, grid)?, spec.min_value)?;
    DensityField::new(grid, values)
}

/// Random density that vanishes identically on an arc.
///
/// The random density for `spec` is multiplied by a cutoff that is zero on
/// the arc of length `width` centered at `center`, rises to one over a
/// smooth ramp of length `ramp` on each side, and the result is renormalized
/// to unit mass.
pub fn planted_hole_density(
    spec: &DensitySpec,
    grid: TorusGrid1D,
    center: f64,
    width: f64,
    ramp: f64,
) -> Result<DensityField> {
    if !(width > 0.0 && ramp >= 0.0 && width + 2.0 * ramp < 1.0) {
        return Err(Error::param(format!("hole width {width} with ramps {ramp} does not fit on the torus")));
    }
    let base = random_density(spec, grid)?;
    let cutoff = |x: f64| {
        let d = (x - center).rem_euclid(1.0);
        let d = d.min(1.0 - d) - 0.5 * width;
        if d <= 0.0 {
            0.0
        } else if d >= ramp {
            1.0
        } else {
            let u = d / ramp;
            u * u * (3.0 - 2.0 * u)
        }
    };
    let mut values: Vec<f64> = grid.centers().zip(base.values()).map(|(x, &v)| v * cutoff(x)).collect();
    let mass = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v /= mass;
    }
    DensityField::new(grid, values)
}

/// Sobolev seminorms of the fluctuation `f − mean(f)` used to label regularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    pub gamma: f64,
    pub seminorm: f64,
    pub seminorm_plus_one: f64,
}

pub fn regularity_report(f: &DensityField, gamma: f64) -> RegularityReport {
    let s = spectral::forward_transform(f);
    RegularityReport {
        gamma,
        seminorm: spectral::sobolev_seminorm(&s, gamma),
        seminorm_plus_one: spectral::sobolev_seminorm(&s, gamma + 1.0),
    }
}

/// Piecewise-linear CDF of a cell-average density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    /// `F(j/n)` for `j = 0..=n`.
    edges: Vec<f64>,
}

impl Cdf {
    pub fn n_cells(&self) -> usize {
        self.edges.len() - 1
    }

    /// Values at the cell edges `j/n`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.n_cells();
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let pos = x * n as f64;
        let j = (pos.floor() as usize).min(n - 1);
        let frac = pos - j as f64;
        self.edges[j] + frac * (self.edges[j + 1] - self.edges[j])
    }

    /// Left-continuous inverse `inf{x : F(x) ≥ q}`.
    pub fn inverse(&self, q: f64) -> f64 {
        let n = self.n_cells();
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            // last edge where F reaches 1
            let e = self.edges.partition_point(|&v| v < 1.0);
            return e.min(n) as f64 / n as f64;
        }
        let e = self.edges.partition_point(|&v| v < q);
        let j = e - 1;
        let (lo, hi) = (self.edges[j], self.edges[j + 1]);
        (j as f64 + (q - lo) / (hi - lo)) / n as f64
    }
}

/// CDF of a probability density. Masses off by more than `1e-9` are rejected.
pub fn cdf(f: &DensityField) -> Result<Cdf> {
    let n = f.values().len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(0.0);
    let mut acc = 0.0;
    for (index, &v) in f.values().iter().enumerate() {
        if v < 0.0 {
            return Err(Error::NegativeDensity { index, value: v });
        }
        acc += v / n as f64;
        edges.push(acc);
    }
    if (acc - 1.0).abs() > 1e-9 {
        return Err(Error::MassMismatch(acc, 1.0));
    }
    for e in edges.iter_mut() {
        *e /= acc;
    }
    edges[n] = 1.0;
    Ok(Cdf { edges })
}

/// Weighted Dirac masses on the unit torus.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracMeasure {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl DiracMeasure {
    /// Locations are wrapped into `[0, 1)` and sorted together with their weights.
    pub fn new(locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: locations.len(), got: weights.len() });
        }
        if locations.is_empty() {
            return Err(Error::Degenerate("empty atom list".into()));
        }
        let mut pairs = Vec::with_capacity(locations.len());
        for (i, (x, w)) in locations.into_iter().zip(weights).enumerate() {
            if !x.is_finite() || !w.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if w < 0.0 {
                return Err(Error::NegativeDensity { index: i, value: w });
            }
            let mut x = x.rem_euclid(1.0);
            if x >= 1.0 {
                x = 0.0;
            }
            pairs.push((x, w));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (locations, weights) = pairs.into_iter().unzip();
        Ok(Self { locations, weights })
    }

    pub fn equal_weights(locations: Vec<f64>) -> Result<Self> {
        let w = 1.0 / locations.len().max(1) as f64;
        let n = locations.len();
        Self::new(locations, vec![w; n])
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `n_particles` equal masses at the midpoint quantiles `F^{-1}((j − ½)/N)`.
pub fn quantile_diracs(f: &DensityField, n_particles: usize) -> Result<DiracMeasure> {
    if n_particles == 0 {
        return Err(Error::param("need at least one particle"));
    }
    let cdf = cdf(f)?;
    let n = n_particles as f64;
    let locations = (0..n_particles).map(|j| cdf.inverse((j as f64 + 0.5) / n)).collect();
    DiracMeasure::equal_weights(locations)
}
