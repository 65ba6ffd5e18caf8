//! Upwind finite-volume integrator for the Riesz-kernel Wasserstein flow
//! `∂_t μ = div(μ ∇K_s ∗ (μ − ν))` on the unit torus.
//!
//! Face velocities come from the spectral multiplier in [`crate::spectral`];
//! the update is explicit Euler with a CFL-limited step, written in
//! positive-coefficient form so `μ ≥ 0` holds exactly.

use rustfft::num_complex::Complex64;

use crate::diagnostics::{self, w2_torus_1d};
use crate::error::{Error, Result};
use crate::series::{FlowTimeSeries, SampleRow};
use crate::spectral::{self, DensityField, FourierPlan, RieszParams, Spectrum, TorusGrid1D};

/// Added to `max|v|` in the step-size formula so `v ≡ 0` gives `dt_max`.
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Sample at every multiple of the interval (steps are clipped to land on them).
    Interval(f64),
    /// Sample every `n` accepted steps.
    Stride(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub sampling: Sampling,
    pub dt_max: f64,
    /// Runs abort when the CFL step falls below this.
    pub dt_min: f64,
}

impl SolverConfig {
    /// `cfl = 0.45`, 400 samples, `dt_max = t_end/400`, `dt_min = 1e-12`.
    pub fn new(t_end: f64) -> Self {
        Self { cfl: 0.45, t_end, sampling: Sampling::Interval(t_end / 400.0), dt_max: t_end / 400.0, dt_min: 1e-12 }
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::param(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max) {
            return Err(Error::param(format!("need 0 < dt_min < dt_max, got {} and {}", self.dt_min, self.dt_max)));
        }
        match self.sampling {
            Sampling::Interval(h) if !(h > 0.0) => {
                Err(Error::param(format!("sampling interval must be positive, got {h}")))
            }
            Sampling::Stride(0) => Err(Error::param("sampling stride must be positive")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub mu: DensityField,
    pub nu: DensityField,
    pub params: RieszParams,
}

impl FlowState {
    pub fn new(mu: DensityField, nu: DensityField, params: RieszParams) -> Result<Self> {
        if mu.grid() != nu.grid() {
            return Err(Error::GridMismatch(mu.grid().n_cells(), nu.grid().n_cells()));
        }
        Ok(Self { t: 0.0, mu, nu, params })
    }

    pub fn grid(&self) -> TorusGrid1D {
        self.mu.grid()
    }

    /// Spectrum of `μ − ν`.
    pub fn discrepancy(&self) -> Spectrum {
        let sigma = self.mu.difference(&self.nu).expect("grids checked at construction");
        spectral::transform_samples(self.grid(), &sigma).expect("length matches grid")
    }

    /// Face velocities `v_{i+½}`.
    pub fn velocity(&self) -> Vec<f64> {
        spectral::riesz_velocity(&self.discrepancy(), self.params).expect("real data is symmetric")
    }

    pub fn energy(&self) -> f64 {
        spectral::hminus_s_energy(&self.discrepancy(), self.params).value
    }
}

/// One explicit upwind step with prescribed face velocities.
///
/// `faces[i]` is the velocity at the face between cells `i` and `i + 1`
/// (periodic). With `λ = dt/Δx`,
/// `μ'_i = μ_i (1 − λ(v⁺_{i+½} − v⁻_{i−½})) + λ(v⁺_{i−½} μ_{i−1} − v⁻_{i+½} μ_{i+1})`,
/// which is the flux form with `F_{i+½} = v⁺_{i+½} μ_i + v⁻_{i+½} μ_{i+1}`.
pub fn upwind_update(mu: &[f64], faces: &[f64], dt: f64, dx: f64, out: &mut [f64]) -> Result<()> {
    let n = mu.len();
    if faces.len() != n || out.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: if faces.len() != n { faces.len() } else { out.len() } });
    }
    let lambda = dt / dx;
    let worst = (0..n).map(|i| faces[i].max(0.0) - faces[(i + n - 1) % n].min(0.0)).fold(0.0, f64::max);
    if lambda * worst > 1.0 {
        return Err(Error::CflViolation { dt, bound: dx / worst });
    }
    for i in 0..n {
        let left = (i + n - 1) % n;
        let right = (i + 1) % n;
        let (vr, vl) = (faces[i], faces[left]);
        let stay = 1.0 - lambda * (vr.max(0.0) - vl.min(0.0));
        out[i] = mu[i] * stay + lambda * (vl.max(0.0) * mu[left] - vr.min(0.0) * mu[right]);
    }
    Ok(())
}

/// `Σ_f v_f² μ_upwind(f) Δx`, the discrete `∫|v|² dμ`.
pub fn discrete_dissipation(mu: &[f64], faces: &[f64], dx: f64) -> f64 {
    let n = mu.len();
    (0..n)
        .map(|i| {
            let v = faces[i];
            let donor = if v >= 0.0 { mu[i] } else { mu[(i + 1) % n] };
            v * v * donor
        })
        .sum::<f64>()
        * dx
}

/// Advances `state` by `dt` with velocities computed from the current `μ`.
pub fn upwind_step(state: &FlowState, dt: f64) -> Result<FlowState> {
    let faces = state.velocity();
    let mut out = vec![0.0; faces.len()];
    upwind_update(state.mu.values(), &faces, dt, state.grid().spacing(), &mut out)?;
    Ok(FlowState {
        t: state.t + dt,
        mu: DensityField::new(state.grid(), out)?,
        nu: state.nu.clone(),
        params: state.params,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dt_from_speed(max_speed: f64, dx: f64, config: &SolverConfig, t: f64) -> Result<f64> {
    let dt = config.dt_max.min(config.cfl * dx / (max_speed + TINY));
    if dt < config.dt_min {
        return Err(Error::VelocityBlowUp { t, dt, dt_min: config.dt_min });
    }
    Ok(dt)
}

/// `min(dt_max, cfl·Δx/(max|v| + tiny))`, or an abort below `dt_min`.
pub fn adaptive_dt(state: &FlowState, config: &SolverConfig) -> Result<f64> {
    dt_from_speed(max_abs(&state.velocity()), state.grid().spacing(), config, state.t)
}

/// Optional observables recorded at each sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Probes {
    /// Exponent of the `Ḣ^γ` distance column.
    pub gamma_report: Option<f64>,
    pub w2: bool,
    /// Threshold `a` of the sublevel measure `|{μ ≤ a}|`.
    pub sublevel: Option<f64>,
    /// Times at which full density profiles are kept; steps land on them.
    pub snapshot_times: Vec<f64>,
}

impl Probes {
    pub fn with_gamma(gamma: f64) -> Self {
        Self { gamma_report: Some(gamma), ..Self::default() }
    }
}

/// Scratch buffers for the spectral velocity.
struct Workspace {
    plan: FourierPlan,
    spectrum: Spectrum,
    sigma: Vec<f64>,
    faces: Vec<f64>,
    next: Vec<f64>,
    multiplier: Vec<Complex64>,
    symbol: Vec<f64>,
}

impl Workspace {
    fn new(grid: TorusGrid1D, params: RieszParams) -> Self {
        let n = grid.n_cells();
        let mult = spectral::velocity_multiplier(params, grid);
        Self {
            plan: FourierPlan::new(grid),
            spectrum: Spectrum::zeros(grid),
            sigma: vec![0.0; n],
            faces: vec![0.0; n],
            next: vec![0.0; n],
            multiplier: (0..n).map(|m| mult(grid.frequency(m))).collect(),
            symbol: (0..n).map(|m| params.symbol(grid.frequency(m))).collect(),
        }
    }

    /// Refreshes the spectrum of `μ − ν` and the face velocities; returns the energy.
    fn refresh(&mut self, mu: &[f64], nu: &[f64]) -> f64 {
        for ((s, a), b) in self.sigma.iter_mut().zip(mu).zip(nu) {
            *s = a - b;
        }
        self.plan.forward_into(&self.sigma, &mut self.spectrum).expect("buffer sizes match the grid");
        let grid = self.plan.grid();
        let n = grid.n_cells() as i64;
        let table = &self.multiplier;
        self.plan
            .synthesize_into(&self.spectrum, |k| table[k.rem_euclid(n) as usize], true, &mut self.faces)
            .expect("buffer sizes match the grid");
        0.5 * self.spectrum.iter().zip(&self.symbol).map(|((_, c), w)| w * c.norm_sqr()).sum::<f64>()
    }
}

struct Recorder<'a> {
    probes: &'a Probes,
    nu: &'a DensityField,
    params: RieszParams,
    last: Option<(f64, f64, f64)>,
}

impl Recorder<'_> {
    fn row(
        &mut self,
        t: f64,
        dt: f64,
        energy: f64,
        dissipated: f64,
        mu: &[f64],
        spectrum: &Spectrum,
    ) -> Result<SampleRow> {
        let field = DensityField::new(self.nu.grid(), mu.to_vec())?;
        let dissipation_residual = match self.last {
            Some((t0, e0, d0)) if t > t0 => {
                let d_mean = (dissipated - d0) / (t - t0);
                ((energy - e0) / (t - t0) + d_mean).abs() / d_mean.abs().max(diagnostics::DISSIPATION_FLOOR)
            }
            _ => 0.0,
        };
        self.last = Some((t, energy, dissipated));
        Ok(SampleRow {
            t,
            dt,
            energy,
            hminus_s: spectral::sobolev_seminorm(spectrum, -self.params.s()),
            hgamma: self.probes.gamma_report.map(|g| spectral::sobolev_seminorm(spectrum, g)),
            min_mu: field.min(),
            max_mu: field.max(),
            mass: field.mass(),
            w2: if self.probes.w2 { Some(w2_torus_1d(&field, self.nu)?) } else { None },
            sublevel: self.probes.sublevel.map(|a| diagnostics::sublevel_measure(&field, a)),
            dissipation_residual,
            dissipated,
        })
    }
}

/// Integrates the flow from `mu0` toward `nu` up to `config.t_end`.
///
/// Every step refreshes the velocity from the current density. A step that
/// violates positivity is retried with half the step; a CFL step below
/// `dt_min` aborts with [`Error::VelocityBlowUp`].
pub fn run_flow(
    mu0: &DensityField,
    nu: &DensityField,
    params: RieszParams,
    config: &SolverConfig,
    probes: &Probes,
) -> Result<FlowTimeSeries> {
    config.validate()?;
    let grid = mu0.grid();
    if nu.grid() != grid {
        return Err(Error::GridMismatch(grid.n_cells(), nu.grid().n_cells()));
    }
    for (m, what) in [(mu0.mass(), "initial"), (nu.mass(), "target")] {
        if (m - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("{what} density has mass {m}, expected 1")));
        }
    }
    let dx = grid.spacing();
    let mut ws = Workspace::new(grid, params);
    let mut mu = mu0.values().to_vec();
    let mut t = 0.0;
    let mut dissipated = 0.0;
    let mut series = FlowTimeSeries::default();
    let mut rec = Recorder { probes, nu, params, last: None };

    let mut snapshots: Vec<f64> =
        probes.snapshot_times.iter().copied().filter(|&s| (0.0..=config.t_end).contains(&s)).collect();
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    let mut next_snap = 0;
    let take_snapshots = |t: f64, mu: &[f64], next: &mut usize, out: &mut Vec<(f64, Vec<f64>)>| {
        while *next < snapshots.len() && snapshots[*next] <= t * (1.0 + 1e-12) + 1e-300 {
            out.push((snapshots[*next], mu.to_vec()));
            *next += 1;
        }
    };

    let mut energy = ws.refresh(&mu, nu.values());
    let mut dt = dt_from_speed(max_abs(&ws.faces), dx, config, t)?;
    series.rows.push(rec.row(t, dt, energy, dissipated, &mu, &ws.spectrum)?);
    take_snapshots(t, &mu, &mut next_snap, &mut series.snapshots);

    let mut sample_index: u64 = 1;
    let mut steps_since_sample: u64 = 0;
    let eps_t = 1e-12 * config.t_end;
    while t < config.t_end - eps_t {
        // next time we must land on exactly
        let mut target = config.t_end;
        if let Sampling::Interval(h) = config.sampling {
            target = target.min(sample_index as f64 * h);
        }
        if next_snap < snapshots.len() {
            target = target.min(snapshots[next_snap]);
        }
        let mut step = dt_from_speed(max_abs(&ws.faces), dx, config, t)?;
        let clipped = step + eps_t >= target - t;
        if clipped {
            step = target - t;
        }
        loop {
            match upwind_update(&mu, &ws.faces, step, dx, &mut ws.next) {
                Ok(()) => break,
                Err(Error::CflViolation { .. }) => {
                    step *= 0.5;
                    if step < config.dt_min {
                        return Err(Error::VelocityBlowUp { t, dt: step, dt_min: config.dt_min });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        let landed = clipped && step == target - t;
        dissipated += step * discrete_dissipation(&mu, &ws.faces, dx);
        std::mem::swap(&mut mu, &mut ws.next);
        t = if landed { target } else { t + step };
        dt = step;
        series.steps += 1;
        steps_since_sample += 1;

        let new_energy = ws.refresh(&mu, nu.values());
        series.max_step_energy_increase = series.max_step_energy_increase.max(new_energy - energy);
        energy = new_energy;
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(mu.iter().position(|v| !v.is_finite()).unwrap_or(0)));
        }

        take_snapshots(t, &mu, &mut next_snap, &mut series.snapshots);
        let at_end = t >= config.t_end - eps_t;
        let sample_now = match config.sampling {
            Sampling::Interval(h) => {
                let due = t >= sample_index as f64 * h - eps_t;
                if due {
                    while sample_index as f64 * h <= t + eps_t {
                        sample_index += 1;
                    }
                }
                due
            }
            Sampling::Stride(k) => steps_since_sample >= k,
        };
        if sample_now || at_end {
            steps_since_sample = 0;
            series.rows.push(rec.row(t, dt, energy, dissipated, &mu, &ws.spectrum)?);
        }
    }
    Ok(series)
}
