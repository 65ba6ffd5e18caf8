//! Parameter sweeps: one line of `key=value` overrides per run.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::{run_experiment, CliError, ExperimentConfig};

/// Parses a sweep file against `base`. Each nonblank line holds
/// whitespace-separated `key=value` overrides; a run without its own `out`
/// writes to `<base out>/run_<index>`.
pub fn parse_sweep(base: &ExperimentConfig, text: &str) -> Result<Vec<ExperimentConfig>, CliError> {
    let mut configs = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut config = base.clone();
        config.output_path = base.output_path.join(format!("run_{}", configs.len()));
        let tokens: Vec<(&str, &str)> = line
            .split_whitespace()
            .map(|tok| {
                tok.split_once('=').ok_or_else(|| CliError::Config(format!("sweep entry `{tok}` is not key=value")))
            })
            .collect::<Result<_, _>>()?;
        // a preset switch resets the preset-dependent fields
        if let Some((_, p)) = tokens.iter().find(|(k, _)| *k == "preset") {
            let out = config.output_path.clone();
            config = ExperimentConfig::preset(p.parse()?);
            config.output_path = out;
        }
        for (k, v) in tokens {
            if k != "preset" {
                config.set(k, v)?;
            }
        }
        configs.push(config.resolve()?);
    }
    if configs.is_empty() {
        return Err(CliError::Config("sweep file lists no runs".into()));
    }
    Ok(configs)
}

/// Runs `configs` on up to `workers` threads. Results keep the input order.
pub fn run_sweep(configs: &[ExperimentConfig], workers: usize) -> Vec<Result<(), CliError>> {
    let workers = workers.clamp(1, configs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<(), CliError>>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(config) = configs.get(i) else { break };
                let outcome = run_experiment(config).map(|_| ());
                results.lock().expect("no worker panics while holding the lock")[i] = Some(outcome);
            });
        }
    });
    results.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every run was claimed")).collect()
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, NonZeroUsize::get)
}
