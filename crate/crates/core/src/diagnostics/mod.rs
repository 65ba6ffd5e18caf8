//! Observables along flows: circle W₂, sublevel ("hole") measures, energy
//! balance residuals, rate fits and the decay rates they are compared to.

mod fit;
mod w2;

pub use fit::{fit_exponential, fit_power_law, FitKind, FitWindow, RateFit};
pub use w2::{w2_torus_1d, CircleMeasure};

use crate::error::{Error, Result};
use crate::series::FlowTimeSeries;
use crate::spectral::DensityField;

/// Lower clamp for the dissipation used to normalize residuals.
pub const DISSIPATION_FLOOR: f64 = 1e-20;

/// Lebesgue measure of `{μ ≤ a}` for a cell-average density.
pub fn sublevel_measure(mu: &DensityField, a: f64) -> f64 {
    let count = mu.values().iter().filter(|&&v| v <= a).count();
    count as f64 * mu.grid().spacing()
}

/// Energy-balance defect between samples `i < j`:
/// `|ΔE/Δt + D̄| / max(|D̄|, ε)` with `D̄` the mean dissipation over the window.
pub fn dissipation_residual(series: &FlowTimeSeries, window: (usize, usize)) -> Result<f64> {
    let (i, j) = window;
    let rows = &series.rows;
    if i >= j || j >= rows.len() {
        return Err(Error::Degenerate(format!("window ({i}, {j}) invalid for {} samples", rows.len())));
    }
    let dt = rows[j].t - rows[i].t;
    if !(dt > 0.0) {
        return Err(Error::Degenerate(format!("window ({i}, {j}) has zero length")));
    }
    let d_mean = (rows[j].dissipated - rows[i].dissipated) / dt;
    let e_rate = (rows[j].energy - rows[i].energy) / dt;
    Ok((e_rate + d_mean).abs() / d_mean.abs().max(DISSIPATION_FLOOR))
}

/// Exponential rate for the `Ḣ^{-1}` distance in the Coulomb case:
/// the minimum of the target density.
pub fn coulomb_rate(min_nu: f64) -> f64 {
    min_nu
}

/// Power-law exponent for `‖μ_t − ν‖_{Ḣ^{-s}}`, `s > 1`:
/// `(min(γ₀, γ_ν − s) + s) / (2(s − 1))`.
pub fn riesz_norm_exponent(s: f64, gamma0: f64, gamma_nu: f64) -> f64 {
    (gamma0.min(gamma_nu - s) + s) / (2.0 * (s - 1.0))
}

/// Power-law exponent for the ReLU energy on the circle, where the kernel
/// behaves like a Riesz kernel with `s = 2`: `(min(γ₀, γ_ν − 1) + 2)`.
/// `γ₀ = ∞` is allowed.
pub fn relu_energy_exponent(gamma0: f64, gamma_nu: f64) -> f64 {
    let s = 2.0;
    (gamma0.min(gamma_nu - 1.0) + s) / (s - 1.0)
}

/// Upper bound for `|{μ_t ≤ a}|` given its initial value, `λ = min ν > a`.
pub fn hole_filling_bound(initial: f64, lambda: f64, a: f64, t: f64) -> f64 {
    initial * (-(lambda - a) * t).exp()
}
