//! Quadratic Wasserstein distance on the unit circle `R/Z`.
//!
//! Both measures are reduced to their quantile functions on `[0, 1]`, which
//! are piecewise linear (cell densities) or piecewise constant (atoms). The
//! circular problem is the line problem against the periodically extended
//! target quantile `Q̃(p + 1) = Q̃(p) + 1`, minimized over a real offset `α`:
//!
//! `W₂² = min_α ∫₀¹ |Q_μ(q) − Q̃_ν(q + α)|² dq`.
//!
//! For fixed `α` the integrand is a piecewise quadratic in `q`, integrated
//! exactly by merging the breakpoints. The cost is convex in `α`, so a
//! ternary search finds the minimum.

use crate::densities::DiracMeasure;
use crate::error::{Error, Result};
use crate::spectral::DensityField;

const SEARCH_ITERS: usize = 100;

/// A measure on the unit circle accepted by [`w2_torus_1d`].
#[derive(Debug, Clone, Copy)]
pub enum CircleMeasure<'a> {
    Density(&'a DensityField),
    Atoms(&'a DiracMeasure),
}

impl<'a> From<&'a DensityField> for CircleMeasure<'a> {
    fn from(f: &'a DensityField) -> Self {
        CircleMeasure::Density(f)
    }
}

impl<'a> From<&'a DiracMeasure> for CircleMeasure<'a> {
    fn from(m: &'a DiracMeasure) -> Self {
        CircleMeasure::Atoms(m)
    }
}

/// Quantile function on `[q0, q1]`, linear from `x0` to `x1`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    q0: f64,
    q1: f64,
    x0: f64,
    x1: f64,
}

impl Piece {
    fn at(&self, q: f64) -> f64 {
        if self.q1 == self.q0 {
            return self.x0;
        }
        self.x0 + (self.x1 - self.x0) * (q - self.q0) / (self.q1 - self.q0)
    }

    fn shifted(&self, dq: f64, dx: f64) -> Piece {
        Piece { q0: self.q0 + dq, q1: self.q1 + dq, x0: self.x0 + dx, x1: self.x1 + dx }
    }
}

impl CircleMeasure<'_> {
    fn mass(&self) -> f64 {
        match self {
            CircleMeasure::Density(f) => f.mass(),
            CircleMeasure::Atoms(m) => m.mass(),
        }
    }

    /// Quantile pieces of the normalized measure, covering `[0, 1]` in order.
    fn pieces(&self) -> Vec<Piece> {
        let mass = self.mass();
        let mut out = Vec::new();
        let mut q = 0.0;
        match self {
            CircleMeasure::Density(f) => {
                let n = f.values().len();
                let h = 1.0 / n as f64;
                for (j, &v) in f.values().iter().enumerate() {
                    let m = v * h / mass;
                    if m > 0.0 {
                        out.push(Piece { q0: q, q1: q + m, x0: j as f64 * h, x1: (j + 1) as f64 * h });
                        q += m;
                    }
                }
            }
            CircleMeasure::Atoms(a) => {
                for (&x, &w) in a.locations().iter().zip(a.weights()) {
                    let m = w / mass;
                    if m > 0.0 {
                        out.push(Piece { q0: q, q1: q + m, x0: x, x1: x });
                        q += m;
                    }
                }
            }
        }
        if let Some(last) = out.last_mut() {
            last.q1 = 1.0;
        }
        out
    }
}

/// `∫₀^L (a + b u)² du`.
fn square_integral(a: f64, b: f64, len: f64) -> f64 {
    len * (a * a + a * b * len + b * b * len * len / 3.0)
}

/// `∫₀¹ |Q_μ(q) − Q̃_ν(q + α)|² dq` with `Q̃_ν` the extended target quantile.
fn offset_cost(mu: &[Piece], nu_ext: &[Piece], alpha: f64) -> f64 {
    // target pieces as functions of q: shift the q-range by −α
    let mut j = nu_ext.partition_point(|p| p.q1 - alpha <= 0.0);
    let mut total = 0.0;
    for p in mu {
        let mut lo = p.q0;
        while lo < p.q1 && j < nu_ext.len() {
            let t = &nu_ext[j];
            let (t0, t1) = (t.q0 - alpha, t.q1 - alpha);
            let hi = p.q1.min(t1);
            if hi > lo {
                let len = hi - lo;
                let mid_a = p.at(lo) - t.at(lo + alpha);
                let slope_p = if p.q1 > p.q0 { (p.x1 - p.x0) / (p.q1 - p.q0) } else { 0.0 };
                let slope_t = if t1 > t0 { (t.x1 - t.x0) / (t1 - t0) } else { 0.0 };
                total += square_integral(mid_a, slope_p - slope_t, len);
                lo = hi;
            }
            if t1 <= p.q1 {
                j += 1;
            } else {
                break;
            }
        }
    }
    total
}

/// W₂ distance between two measures of equal mass on the unit circle.
pub fn w2_torus_1d<'a, 'b>(mu: impl Into<CircleMeasure<'a>>, nu: impl Into<CircleMeasure<'b>>) -> Result<f64> {
    let (mu, nu) = (mu.into(), nu.into());
    let (m_mu, m_nu) = (mu.mass(), nu.mass());
    if !(m_mu > 0.0) || (m_mu - m_nu).abs() > 1e-9 * m_mu.max(m_nu) {
        return Err(Error::MassMismatch(m_mu, m_nu));
    }
    let p_mu = mu.pieces();
    let base = nu.pieces();
    let mut nu_ext = Vec::with_capacity(5 * base.len());
    for period in -2..=2 {
        let d = period as f64;
        nu_ext.extend(base.iter().map(|p| p.shifted(d, d)));
    }
    let (mut a, mut b) = (-1.0f64, 1.0f64);
    for _ in 0..SEARCH_ITERS {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if offset_cost(&p_mu, &nu_ext, m1) <= offset_cost(&p_mu, &nu_ext, m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let cost = offset_cost(&p_mu, &nu_ext, 0.5 * (a + b)).max(0.0);
    Ok((m_mu * cost).sqrt())
}
