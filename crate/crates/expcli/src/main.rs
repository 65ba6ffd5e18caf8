use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kmdflow_cli::sweep::{default_workers, parse_sweep, run_sweep};
use kmdflow_cli::{run_experiment, CliError, ExperimentConfig};

/// Simulate a kernel discrepancy flow and write manifest.json, series.csv,
/// rates.json and (optionally) snapshots.csv.
#[derive(Debug, Parser)]
#[command(name = "kmdflow", version)]
struct Args {
    /// coulomb, riesz_s, relu or custom
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long = "gamma-nu")]
    gamma_nu: Option<f64>,
    #[arg(long)]
    min0: Option<f64>,
    #[arg(long = "min-nu")]
    min_nu: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    /// W or WFR (relu preset)
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file, key=value lines or a JSON object
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep file: one line of key=value overrides per run
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Worker threads for --sweep
    #[arg(long)]
    jobs: Option<usize>,
    /// Extra overrides, any config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn build_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(&read(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &args.preset {
        let preset = p.parse()?;
        if preset != config.preset {
            // flags layered over a file keep the file's values; a bare
            // --preset starts from the preset defaults
            if args.config.is_none() {
                config = ExperimentConfig::preset(preset);
            } else {
                config.preset = preset;
            }
        }
    }
    let flags: [(&str, Option<String>); 11] = [
        ("s", args.s.map(|v| v.to_string())),
        ("gamma0", args.gamma0.map(|v| v.to_string())),
        ("gamma_nu", args.gamma_nu.map(|v| v.to_string())),
        ("min0", args.min0.map(|v| v.to_string())),
        ("min_nu", args.min_nu.map(|v| v.to_string())),
        ("n_cells", args.cells.map(|v| v.to_string())),
        ("n_particles", args.particles.map(|v| v.to_string())),
        ("mode", args.mode.clone()),
        ("t_end", args.tend.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("output_path", args.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            config.set(k, &v)?;
        }
    }
    for kv in &args.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config.set(k.trim(), v.trim())?;
    }
    Ok(config)
}

fn real_main(args: Args) -> Result<(), CliError> {
    let config = build_config(&args)?;
    match &args.sweep {
        None => {
            let config = config.resolve()?;
            let summary = run_experiment(&config)?;
            for (p, fit) in &summary.fits {
                match fit {
                    Ok(f) => eprintln!("{}: fitted {:.4}, predicted {:.4}", p.quantity, f.value, p.value),
                    Err(e) => eprintln!("{}: no fit ({e})", p.quantity),
                }
            }
            Ok(())
        }
        Some(path) => {
            let configs = parse_sweep(&config, &read(path)?)?;
            let results = run_sweep(&configs, args.jobs.unwrap_or_else(default_workers));
            let mut worst: Option<CliError> = None;
            for (c, r) in configs.iter().zip(results) {
                match r {
                    Ok(()) => eprintln!("{}: ok", c.output_path.display()),
                    Err(e) => {
                        eprintln!("{}: {e}", c.output_path.display());
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            worst.map_or(Ok(()), Err)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match real_main(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kmdflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
