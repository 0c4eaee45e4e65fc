use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use uav_immune::attacks::AttackMix;
use uav_immune::harness::{self, ScenarioConfig};
use uav_immune::security::{write_decision_log, Defense};
use uav_immune::world::Recording;
use uav_immune::ConfigError;

#[derive(Parser)]
#[command(name = "uavsim", version, about = "UAV swarm routing-attack simulator with immune-inspired route vetting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario matrix and write results.csv, plots and a summary table.
    Run(RunArgs),
    /// Check a scenario file and report the size of its matrix.
    Validate {
        /// Scenario file or preset name.
        scenario: String,
    },
    /// List the built-in presets, or print one as TOML.
    Presets {
        /// Print this preset as a scenario file.
        #[arg(long)]
        show: Option<String>,
        /// Print the fully commented reference configuration.
        #[arg(long)]
        reference: bool,
    },
    /// Redraw plots and the summary table from an existing results.csv.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file or preset name.
    #[arg(long, default_value = "scenario-desk")]
    scenario: String,
    /// Run a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seed count (seeds 1..=N) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Surveillance threshold(s), comma-separated.
    #[arg(long)]
    ts: Option<String>,
    /// Attack mix(es): mixed, bh, gh, wh, fid; comma-separated.
    #[arg(long)]
    attack: Option<String>,
    /// Defense(s): suas-his, none; comma-separated.
    #[arg(long)]
    defense: Option<String>,
    /// Malicious ratio(s), comma-separated.
    #[arg(long)]
    malicious_ratio: Option<String>,
    /// Write the per-selection decision log of a single-run matrix here.
    #[arg(long)]
    decision_log: Option<PathBuf>,
}

enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn list<T: std::str::FromStr>(field: &'static str, s: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|e| ConfigError::invalid(field, format!("`{x}`: {e}"))))
        .collect()
}

fn load(spec: &str) -> Result<ScenarioConfig, ConfigError> {
    if let Some(cfg) = harness::preset(spec) {
        return Ok(cfg);
    }
    harness::load_scenario(Path::new(spec))
}

fn apply_overrides(cfg: &mut ScenarioConfig, a: &RunArgs) -> Result<(), ConfigError> {
    if let Some(seed) = a.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(s) = &a.seeds {
        cfg.seeds = match s.trim().parse::<u64>() {
            Ok(n) if !s.contains(',') => (1..=n).collect(),
            _ => list("seeds", s)?,
        };
    }
    if let Some(s) = &a.ts {
        cfg.sweep.t_s = list("ts", s)?;
    }
    if let Some(s) = &a.attack {
        let mixes: Vec<AttackMix> = list("attack", s)?;
        cfg.sweep.attack = mixes.iter().map(AttackMix::label).collect();
    }
    if let Some(s) = &a.defense {
        cfg.sweep.defense = list::<Defense>("defense", s)?;
    }
    if let Some(s) = &a.malicious_ratio {
        cfg.sweep.malicious_ratio = list("malicious-ratio", s)?;
    }
    cfg.validate()
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&a.scenario)?;
    apply_overrides(&mut cfg, &a)?;
    let parallelism = a.parallelism.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cells = cfg.cells()?;
    log::info!("{}: {} cells × {} seeds on {parallelism} threads", cfg.name, cells.len(), cfg.seeds.len());

    if let Some(path) = &a.decision_log {
        if cells.len() != 1 || cfg.seeds.len() != 1 {
            return Err(ConfigError::invalid("decision-log", "needs a matrix of exactly one cell and one seed").into());
        }
        let recording = Recording { decisions: true, audits: false };
        let report = harness::run_cell_report(&cfg, &cells[0], cfg.seeds[0], recording)?;
        let file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(Failure::Run)?;
        write_decision_log(file, &report.decisions).context("writing decision log").map_err(Failure::Run)?;
        let row = harness::result_row(&cfg, &cells[0], cfg.seeds[0], &report);
        let files = harness::emit_outputs(&[row], &a.out).context("writing outputs").map_err(Failure::Run)?;
        print_written(&files);
        return Ok(());
    }

    let report = harness::run_matrix(&cfg, parallelism)?;
    if !report.results.is_empty() {
        let files = harness::emit_outputs(&report.results, &a.out).context("writing outputs").map_err(Failure::Run)?;
        print_written(&files);
    }
    if !report.failures.is_empty() {
        for f in &report.failures {
            eprintln!(
                "failed: defense {} attack {} ratio {} seed {}: {}",
                f.cell.defense, f.cell.attack, f.cell.malicious_ratio, f.seed, f.message
            );
        }
        return Err(Failure::Run(anyhow::anyhow!(
            "{} of {} runs failed",
            report.failures.len(),
            cells.len() * cfg.seeds.len()
        )));
    }
    Ok(())
}

fn print_written(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run(a) => run(a),
        Command::Validate { scenario } => {
            let cfg = load(&scenario)?;
            let cells = cfg.cells()?;
            println!("{}: ok, {} cells × {} seeds", cfg.name, cells.len(), cfg.seeds.len());
            Ok(())
        }
        Command::Presets { show, reference } => {
            if reference {
                print!("{}", harness::reference_config());
            } else if let Some(name) = show {
                let cfg = harness::preset(&name)
                    .ok_or_else(|| ConfigError::invalid("preset", format!("unknown preset `{name}`")))?;
                print!("{}", cfg.to_toml());
            } else {
                for name in harness::PRESETS {
                    let cfg = harness::preset(name).expect("listed presets exist");
                    let cells = cfg.cells()?.len();
                    println!(
                        "{name}\t{} UAVs, {} s, {cells} cells × {} seeds",
                        cfg.uav.n_uavs,
                        cfg.sim_time,
                        cfg.seeds.len()
                    );
                }
            }
            Ok(())
        }
        Command::Plot { results, out } => {
            let file = std::fs::File::open(&results)
                .with_context(|| format!("opening {}", results.display()))
                .map_err(Failure::Config)?;
            let rows = harness::read_results_csv(file).context("reading results").map_err(Failure::Config)?;
            if rows.is_empty() {
                return Err(Failure::Config(anyhow::anyhow!("{} has no rows", results.display())));
            }
            let files = harness::emit_plots(&rows, &out).context("writing plots").map_err(Failure::Run)?;
            print_written(&files);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("run failed: {e:#}");
            ExitCode::from(2)
        }
    }
}
