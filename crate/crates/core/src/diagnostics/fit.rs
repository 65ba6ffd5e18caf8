//! Least-squares rate fits in log coordinates.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `y ≈ C e^{−κ t}`, `value = κ`.
    Exponential,
    /// `y ≈ C t^{−p}`, `value = p`.
    PowerLaw,
}

/// Which samples enter a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitWindow {
    /// Last half of the samples (exponential) or the last decade in `t`
    /// (power law).
    Default,
    /// Samples with `t_lo ≤ t ≤ t_hi`.
    Time(f64, f64),
    /// Samples with indices in `lo..hi`.
    Indices(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub kind: FitKind,
    pub value: f64,
    /// Fitted `log C`.
    pub intercept: f64,
    pub fit_window: (f64, f64),
    /// RMS of the log residuals.
    pub residual: f64,
    pub n_points: usize,
    pub prediction: Option<f64>,
    pub within_tolerance: Option<bool>,
}

impl RateFit {
    /// Attach a predicted value and whether the fitted value lies in
    /// `[prediction + lo, prediction + hi]`.
    pub fn judge(mut self, prediction: f64, lo: f64, hi: f64) -> Self {
        self.prediction = Some(prediction);
        self.within_tolerance = Some(self.value >= prediction + lo && self.value <= prediction + hi);
        self
    }
}

fn select(t: &[f64], kind: FitKind, window: FitWindow) -> Result<Vec<usize>> {
    let n = t.len();
    let idx: Vec<usize> = match window {
        FitWindow::Default => match kind {
            FitKind::Exponential => (n / 2..n).collect(),
            FitKind::PowerLaw => {
                let t_hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (0..n).filter(|&i| t[i] >= t_hi / 10.0).collect()
            }
        },
        FitWindow::Time(lo, hi) => (0..n).filter(|&i| t[i] >= lo && t[i] <= hi).collect(),
        FitWindow::Indices(lo, hi) => (lo.min(n)..hi.min(n)).collect(),
    };
    if idx.len() < 2 {
        return Err(Error::Degenerate(format!("fit window holds {} samples, need at least 2", idx.len())));
    }
    Ok(idx)
}

fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, intercept, rms))
}

fn fit(t: &[f64], y: &[f64], kind: FitKind, window: FitWindow) -> Result<RateFit> {
    if t.len() != y.len() {
        return Err(Error::LengthMismatch { expected: t.len(), got: y.len() });
    }
    let idx = select(t, kind, window)?;
    let mut xs = Vec::with_capacity(idx.len());
    let mut ys = Vec::with_capacity(idx.len());
    for &i in &idx {
        if !(y[i] > 0.0) || !y[i].is_finite() {
            return Err(Error::param(format!("fit needs finite y > 0, got {} at t = {}", y[i], t[i])));
        }
        let x = match kind {
            FitKind::Exponential => t[i],
            FitKind::PowerLaw => {
                if !(t[i] > 0.0) {
                    return Err(Error::param("power-law fit needs t > 0"));
                }
                t[i].ln()
            }
        };
        xs.push(x);
        ys.push(y[i].ln());
    }
    let (slope, intercept, residual) = least_squares(&xs, &ys)?;
    let (t_lo, t_hi) = (t[idx[0]], t[*idx.last().unwrap()]);
    Ok(RateFit {
        kind,
        value: -slope,
        intercept,
        fit_window: (t_lo, t_hi),
        residual,
        n_points: idx.len(),
        prediction: None,
        within_tolerance: None,
    })
}

/// Fit `y ≈ C e^{−κ t}` by least squares on `log y`.
pub fn fit_exponential(t: &[f64], y: &[f64], window: FitWindow) -> Result<RateFit> {
    fit(t, y, FitKind::Exponential, window)
}

/// Fit `y ≈ C t^{−p}` by least squares on `log y` against `log t`.
pub fn fit_power_law(t: &[f64], y: &[f64], window: FitWindow) -> Result<RateFit> {
    fit(t, y, FitKind::PowerLaw, window)
}
