use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use super::config::{Cell, ScenarioConfig};
use crate::error::ConfigError;
use crate::metrics::RunResult;
use crate::world::{Recording, RunReport, World};

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub cell: Cell,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct MatrixReport {
    /// In canonical order: cells as expanded by the sweep, seeds as listed.
    pub results: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
}

/// Executes one (cell, seed) and returns the full report.
pub fn run_cell_report(
    cfg: &ScenarioConfig,
    cell: &Cell,
    seed: u64,
    recording: Recording,
) -> Result<RunReport, ConfigError> {
    let mut params = cfg.world_params(cell);
    params.recording = recording;
    Ok(World::new(params, seed)?.run())
}

pub fn result_row(cfg: &ScenarioConfig, cell: &Cell, seed: u64, r: &RunReport) -> RunResult {
    RunResult {
        scenario: cfg.name.clone(),
        seed,
        n_uavs: cell.n_uavs,
        malicious_ratio: cell.malicious_ratio,
        t_s: cell.t_s,
        attack: cell.attack.label(),
        defense: cell.defense.to_string(),
        sim_time: cell.sim_time,
        fpr: r.rates.fpr,
        fnr: r.rates.fnr,
        dr: r.rates.dr,
        pdr_mean: r.pdr_mean,
        pdr_eq8: r.pdr_eq8,
        sent: r.sent,
        received: r.received,
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "run panicked".to_string()
    }
}

/// Runs every (cell, seed) as an isolated world on `parallelism` threads. A
/// failing run is recorded and the rest of the matrix continues.
pub fn run_matrix(cfg: &ScenarioConfig, parallelism: usize) -> Result<MatrixReport, ConfigError> {
    cfg.validate()?;
    let jobs: Vec<(Cell, u64)> =
        cfg.cells()?.into_iter().flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| ConfigError::invalid("parallelism", e.to_string()))?;
    let outcomes: Vec<Result<RunResult, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|(cell, seed)| {
                catch_unwind(AssertUnwindSafe(|| {
                    run_cell_report(cfg, cell, *seed, Recording::default())
                        .map(|r| result_row(cfg, cell, *seed, &r))
                        .map_err(|e| e.to_string())
                }))
                .unwrap_or_else(|p| Err(panic_message(p)))
            })
            .collect()
    });
    let mut report = MatrixReport::default();
    for ((cell, seed), outcome) in jobs.into_iter().zip(outcomes) {
        match outcome {
            Ok(r) => report.results.push(r),
            Err(message) => {
                log::error!("run {} seed {seed} failed: {message}", cell.attack);
                report.failures.push(RunFailure { cell, seed, message });
            }
        }
    }
    Ok(report)
}
