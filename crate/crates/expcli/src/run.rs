//! Runs one experiment and writes its artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use kmdflow::densities::{planted_hole_density, random_density, DensitySpec};
use kmdflow::diagnostics::{
    coulomb_rate, fit_exponential, fit_power_law, relu_energy_exponent, riesz_norm_exponent, FitKind, FitWindow,
    RateFit,
};
use kmdflow::flow1d::{run_flow, Probes, Sampling, SolverConfig};
use kmdflow::sphere_relu::{run_relu_flow, ArccosKernel, FlowMode, ParticleSystem};
use kmdflow::{DensityField, FlowTimeSeries, RieszParams, SampleRow, TorusGrid1D};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Init, Preset};
use crate::CliError;

pub const SERIES_HEADER: &str = "t,dt,energy,hminus_s,hgamma,min_mu,max_mu,mass,w2,sublevel_a,dissipation_residual";

/// Accepted fitted values: `[prediction + lo, prediction + hi]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerance {
    pub lo: f64,
    pub hi: f64,
}

/// Predicted asymptotic rate for one column.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub quantity: &'static str,
    pub kind: FitKind,
    pub value: f64,
    pub tolerance: Tolerance,
}

/// What the experiment predicts for `config`: the distance column, then the
/// energy column.
pub fn predictions(config: &ExperimentConfig) -> Vec<Prediction> {
    let g0 = config.effective_gamma0();
    if config.preset == Preset::Relu {
        return vec![Prediction {
            quantity: "energy",
            kind: FitKind::PowerLaw,
            value: relu_energy_exponent(g0, config.gamma_nu),
            tolerance: Tolerance { lo: -0.2, hi: 0.5 },
        }];
    }
    if config.s == 1.0 {
        let rate = coulomb_rate(config.min_nu);
        vec![
            Prediction {
                quantity: "hminus_s",
                kind: FitKind::Exponential,
                value: rate,
                tolerance: Tolerance { lo: -0.02, hi: 0.25 },
            },
            Prediction {
                quantity: "energy",
                kind: FitKind::Exponential,
                value: 2.0 * rate,
                tolerance: Tolerance { lo: -0.04, hi: 0.5 },
            },
        ]
    } else {
        let p = riesz_norm_exponent(config.s, g0, config.gamma_nu);
        vec![
            Prediction {
                quantity: "hminus_s",
                kind: FitKind::PowerLaw,
                value: p,
                tolerance: Tolerance { lo: -0.3, hi: 0.3 },
            },
            Prediction {
                quantity: "energy",
                kind: FitKind::PowerLaw,
                value: 2.0 * p,
                tolerance: Tolerance { lo: -0.6, hi: 0.6 },
            },
        ]
    }
}

/// Outcome of a finished run.
#[derive(Debug)]
pub struct RunSummary {
    pub series: FlowTimeSeries,
    pub fits: Vec<(Prediction, Result<RateFit, String>)>,
}

fn density_spec(config: &ExperimentConfig, gamma: f64, min: f64, seed: u64) -> DensitySpec {
    DensitySpec::new(gamma, min, config.band_limit.expect("resolved"), seed)
}

fn build_densities(config: &ExperimentConfig) -> Result<(DensityField, DensityField), CliError> {
    let grid = TorusGrid1D::new(config.n_cells)?;
    let nu = random_density(&density_spec(config, config.gamma_nu, config.min_nu, 2 * config.seed + 1), grid)?;
    let spec0 = density_spec(config, config.gamma0, config.min0, 2 * config.seed);
    let mu = match config.init {
        Init::Random => random_density(&spec0, grid)?,
        Init::Uniform => DensityField::uniform(grid),
        Init::Hole => planted_hole_density(&spec0, grid, 0.5, config.hole_width, config.hole_ramp)?,
        Init::Target => nu.clone(),
    };
    Ok((mu, nu))
}

fn solver_config(config: &ExperimentConfig) -> SolverConfig {
    SolverConfig::new(config.t_end)
        .with_cfl(config.cfl)
        .with_dt_max(config.dt_max.expect("resolved"))
        .with_sampling(Sampling::Interval(config.sample_interval.expect("resolved")))
}

fn simulate(config: &ExperimentConfig) -> Result<FlowTimeSeries, CliError> {
    let (mu, nu) = build_densities(config)?;
    let solver = solver_config(config);
    if config.preset == Preset::Relu {
        let n = config.n_particles;
        let nu = ParticleSystem::from_density_quantiles(&nu, n, config.mode)?;
        let mu = match config.init {
            Init::Uniform => ParticleSystem::uniform(n, config.mode)?,
            Init::Target => nu.clone(),
            _ => ParticleSystem::from_density_quantiles(&mu, n, config.mode)?,
        };
        let (series, _) = run_relu_flow(&mu, &nu, &ArccosKernel::default(), &solver).map_err(CliError::Solver)?;
        return Ok(series);
    }
    let probes = Probes {
        gamma_report: config.hgamma,
        w2: config.w2,
        sublevel: config.sublevel_a,
        snapshot_times: config.snapshots.clone(),
    };
    run_flow(&mu, &nu, RieszParams::new(config.s)?, &solver, &probes).map_err(CliError::Solver)
}

/// Mass conservation (where it applies), positivity and finiteness of every
/// row.
pub fn check_rows(config: &ExperimentConfig, series: &FlowTimeSeries) -> Result<(), CliError> {
    let conserves_mass = !(config.preset == Preset::Relu && config.mode == FlowMode::Wfr);
    let mass0 = series.rows.first().map_or(1.0, |r| r.mass);
    for (i, r) in series.rows.iter().enumerate() {
        let fail = |what: &str| Err(CliError::Invariant(format!("row {i} (t = {}): {what}", r.t)));
        let values = [r.t, r.dt, r.energy, r.hminus_s, r.min_mu, r.max_mu, r.mass];
        if values.iter().chain(r.hgamma.iter()).chain(r.w2.iter()).chain(r.sublevel.iter()).any(|v| !v.is_finite()) {
            return fail("non-finite value");
        }
        if r.min_mu < 0.0 {
            return fail("negative density");
        }
        if conserves_mass && (r.mass - mass0).abs() > 1e-9 * mass0.max(1.0) {
            return fail("mass drift");
        }
    }
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:e}"))
}

fn csv_row(r: &SampleRow) -> String {
    [
        cell(Some(r.t)),
        cell(Some(r.dt)),
        cell(Some(r.energy)),
        cell(Some(r.hminus_s)),
        cell(r.hgamma),
        cell(Some(r.min_mu)),
        cell(Some(r.max_mu)),
        cell(Some(r.mass)),
        cell(r.w2),
        cell(r.sublevel),
        cell(Some(r.dissipation_residual)),
    ]
    .join(",")
}

pub fn write_series(path: &Path, series: &FlowTimeSeries) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{SERIES_HEADER}")?;
    for r in &series.rows {
        writeln!(w, "{}", csv_row(r))?;
    }
    w.flush()
}

/// One column per snapshot time, one row per cell center `x`.
pub fn write_snapshots(path: &Path, n_cells: usize, snapshots: &[(f64, Vec<f64>)]) -> std::io::Result<()> {
    let grid = TorusGrid1D::new(n_cells).expect("validated");
    let mut w = BufWriter::new(fs::File::create(path)?);
    let header: Vec<String> =
        std::iter::once("x".to_string()).chain(snapshots.iter().map(|(t, _)| format!("t={t:e}"))).collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, x) in grid.centers().enumerate() {
        let row: Vec<String> =
            std::iter::once(format!("{x:e}")).chain(snapshots.iter().map(|(_, v)| format!("{:e}", v[i]))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

fn fit(series: &FlowTimeSeries, p: &Prediction) -> Result<RateFit, String> {
    let t = series.times();
    let y = match p.quantity {
        "energy" => series.column(|r| r.energy),
        _ => series.column(|r| r.hminus_s),
    };
    let fitted = match p.kind {
        FitKind::Exponential => fit_exponential(&t, &y, FitWindow::Default),
        FitKind::PowerLaw => fit_power_law(&t, &y, FitWindow::Default),
    };
    fitted.map(|f| f.judge(p.value, p.tolerance.lo, p.tolerance.hi)).map_err(|e| e.to_string())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_manifest(
    config: &ExperimentConfig,
    status: &str,
    error: Option<String>,
    steps: Option<u64>,
) -> Result<(), CliError> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "software": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "status": status,
        "error": error,
        "steps": steps,
        "created_unix": created,
        "config": config,
    });
    write_json(&config.output_path.join("manifest.json"), &manifest)
}

/// Runs `config` (already resolved) and writes `manifest.json`,
/// `series.csv`, `rates.json` and, if snapshot times were requested,
/// `snapshots.csv` into `config.output_path`.
///
/// Solver aborts and invariant violations still write a manifest whose
/// `status` names the failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let dir = &config.output_path;
    fs::create_dir_all(dir)?;
    let series = match simulate(config).and_then(|s| check_rows(config, &s).map(|()| s)) {
        Ok(s) => s,
        Err(e) => {
            let status = match &e {
                CliError::Invariant(_) => "invariant_violation",
                CliError::Solver(_) => "solver_abort",
                _ => "error",
            };
            write_manifest(config, status, Some(e.to_string()), None)?;
            return Err(e);
        }
    };
    write_series(&dir.join("series.csv"), &series)?;
    if !config.snapshots.is_empty() {
        write_snapshots(&dir.join("snapshots.csv"), config.n_cells, &series.snapshots)?;
    }
    let fits: Vec<_> = predictions(config)
        .into_iter()
        .map(|p| {
            let f = fit(&series, &p);
            (p, f)
        })
        .collect();
    let entries: Vec<_> = fits
        .iter()
        .map(|(p, f)| match f {
            Ok(f) => json!({ "quantity": p.quantity, "predicted": p.value, "tolerance": p.tolerance, "fit": f }),
            Err(e) => json!({ "quantity": p.quantity, "predicted": p.value, "tolerance": p.tolerance, "fit": null, "error": e }),
        })
        .collect();
    write_json(&dir.join("rates.json"), &json!({ "preset": config.preset, "s": config.s, "fits": entries }))?;
    write_manifest(config, "ok", None, Some(series.steps))?;
    Ok(RunSummary { series, fits })
}
