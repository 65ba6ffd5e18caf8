//! Sampled trajectories of flow diagnostics.

use serde::Serialize;

/// One diagnostic sample of a flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub t: f64,
    /// Most recent accepted time step (the first planned step at `t = 0`).
    pub dt: f64,
    pub energy: f64,
    /// `‖μ_t − ν‖_{Ḣ^{-s}}`.
    pub hminus_s: f64,
    /// `‖μ_t − ν‖_{Ḣ^γ}` for the reporting exponent, when meaningful.
    pub hgamma: Option<f64>,
    pub min_mu: f64,
    pub max_mu: f64,
    pub mass: f64,
    pub w2: Option<f64>,
    pub sublevel: Option<f64>,
    /// Normalized energy-balance defect over the window ending at this sample.
    pub dissipation_residual: f64,
    /// `∫_0^t D(τ) dτ`, the accumulated dissipation.
    pub dissipated: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTimeSeries {
    pub rows: Vec<SampleRow>,
    /// Density snapshots `(t, values)` taken at requested times.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    /// Largest single-step energy increase observed (0 when monotone).
    pub max_step_energy_increase: f64,
    pub steps: u64,
}

impl FlowTimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&SampleRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn last(&self) -> Option<&SampleRow> {
        self.rows.last()
    }
}
