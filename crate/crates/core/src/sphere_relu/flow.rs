//! Explicit Euler integration of particle W / WFR flows on the circle.

use std::f64::consts::PI;

use super::sum::KernelSum;
use super::{ArccosKernel, FlowMode, ParticleSystem, SphereSpectrum};
use crate::diagnostics::DISSIPATION_FLOOR;
use crate::error::{Error, Result};
use crate::flow1d::{Sampling, SolverConfig};
use crate::series::{FlowTimeSeries, SampleRow};

/// Truncation of the Fourier series behind the `Ḣ^{-2}` column.
const NORM_MODES: usize = 512;

struct Eval {
    phi: Vec<f64>,
    dphi: Vec<f64>,
    energy: f64,
    dissipation: f64,
}

fn evaluate(mu: &ParticleSystem, nu: &ParticleSystem, kernel: &ArccosKernel) -> Eval {
    let sum = super::discrepancy_sum(mu, nu, kernel);
    let (phi, dphi): (Vec<f64>, Vec<f64>) = mu.angles().iter().map(|&x| sum.eval(x)).unzip();
    let energy = 0.5 * (dot(&phi, mu.weights()) - nu_side(&sum, nu));
    let mut dissipation: f64 = mu.weights().iter().zip(&dphi).map(|(w, d)| w * d * d).sum();
    if mu.mode() == FlowMode::Wfr {
        dissipation += 4.0 * mu.weights().iter().zip(&phi).map(|(w, p)| w * p * p).sum::<f64>();
    }
    Eval { phi, dphi, energy, dissipation }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn nu_side(sum: &KernelSum, nu: &ParticleSystem) -> f64 {
    nu.angles().iter().zip(nu.weights()).map(|(&x, w)| w * sum.eval(x).0).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn step_size(ev: &Eval, n: usize, mode: FlowMode, config: &SolverConfig, t: f64) -> Result<f64> {
    let spacing = 2.0 * PI / n.max(1) as f64;
    let mut dt = config.dt_max.min(config.cfl * spacing / (max_abs(&ev.dphi) + 1e-300));
    if mode == FlowMode::Wfr {
        dt = dt.min(config.cfl / (4.0 * max_abs(&ev.phi) + 1e-300));
    }
    if dt < config.dt_min {
        return Err(Error::VelocityBlowUp { t, dt, dt_min: config.dt_min });
    }
    Ok(dt)
}

fn row(
    t: f64,
    dt: f64,
    ev: &Eval,
    mu: &ParticleSystem,
    nu: &ParticleSystem,
    dissipated: f64,
    residual: f64,
) -> SampleRow {
    let spec = SphereSpectrum::of_difference(mu, nu, NORM_MODES);
    let w = mu.weights();
    SampleRow {
        t,
        dt,
        energy: ev.energy,
        hminus_s: spec.hminus_sq(2.0).sqrt(),
        hgamma: None,
        min_mu: w.iter().copied().fold(f64::INFINITY, f64::min),
        max_mu: w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mass: mu.mass(),
        w2: None,
        sublevel: None,
        dissipation_residual: residual,
        dissipated,
    }
}

/// Integrates the particle flow from `mu0` toward the fixed `nu`.
///
/// The step is `min(dt_max, cfl·(2π/N)/max|v|)`, further limited by
/// `cfl/(4 max|Φ|)` in WFR mode; steps that would make a weight negative are
/// halved. Rows store the minimum and maximum particle weight in the
/// `min_mu`/`max_mu` columns and `‖μ − ν‖_{Ḣ^{-2}}` in `hminus_s`.
/// Returns the sampled series and the final particle state.
pub fn run_relu_flow(
    mu0: &ParticleSystem,
    nu: &ParticleSystem,
    kernel: &ArccosKernel,
    config: &SolverConfig,
) -> Result<(FlowTimeSeries, ParticleSystem)> {
    config.validate()?;
    let mut mu = mu0.clone();
    let mode = mu.mode();
    let n = mu.len();
    let mut series = FlowTimeSeries::default();
    let mut t = 0.0;
    let mut dissipated = 0.0;
    let mut ev = evaluate(&mu, nu, kernel);
    let mut dt = step_size(&ev, n, mode, config, t)?;
    series.rows.push(row(t, dt, &ev, &mu, nu, dissipated, 0.0));
    let mut last = (t, ev.energy, dissipated);

    let eps_t = 1e-12 * config.t_end;
    let mut sample_index: u64 = 1;
    let mut since: u64 = 0;
    while t < config.t_end - eps_t {
        let mut target = config.t_end;
        if let Sampling::Interval(h) = config.sampling {
            target = target.min(sample_index as f64 * h);
        }
        let mut step = step_size(&ev, n, mode, config, t)?;
        let clipped = step + eps_t >= target - t;
        if clipped {
            step = target - t;
        }
        let new_weights = loop {
            let w: Vec<f64> = match mode {
                FlowMode::Wasserstein => mu.weights().to_vec(),
                FlowMode::Wfr => mu.weights().iter().zip(&ev.phi).map(|(w, p)| w * (1.0 - 4.0 * p * step)).collect(),
            };
            if w.iter().all(|&x| x >= 0.0) {
                break w;
            }
            step *= 0.5;
            if step < config.dt_min {
                return Err(Error::VelocityBlowUp { t, dt: step, dt_min: config.dt_min });
            }
        };
        let landed = clipped && step == target - t;
        let angles = mu.angles().iter().zip(&ev.dphi).map(|(a, d)| (a - step * d).rem_euclid(2.0 * PI)).collect();
        mu.set(angles, new_weights);
        dissipated += step * ev.dissipation;
        t = if landed { target } else { t + step };
        dt = step;
        series.steps += 1;
        since += 1;

        let next = evaluate(&mu, nu, kernel);
        series.max_step_energy_increase = series.max_step_energy_increase.max(next.energy - ev.energy);
        ev = next;
        if !ev.energy.is_finite() {
            return Err(Error::NonFinite(0));
        }

        let at_end = t >= config.t_end - eps_t;
        let due = match config.sampling {
            Sampling::Interval(h) => {
                let due = t >= sample_index as f64 * h - eps_t;
                if due {
                    while sample_index as f64 * h <= t + eps_t {
                        sample_index += 1;
                    }
                }
                due
            }
            Sampling::Stride(k) => since >= k,
        };
        if due || at_end {
            since = 0;
            let (t0, e0, d0) = last;
            let d_mean = (dissipated - d0) / (t - t0);
            let residual = ((ev.energy - e0) / (t - t0) + d_mean).abs() / d_mean.abs().max(DISSIPATION_FLOOR);
            series.rows.push(row(t, dt, &ev, &mu, nu, dissipated, residual));
            last = (t, ev.energy, dissipated);
        }
    }
    Ok((series, mu))
}
