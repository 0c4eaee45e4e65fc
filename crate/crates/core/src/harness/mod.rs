//! Scenario files, the run matrix, and result emission.

mod config;
mod matrix;
mod output;

pub use config::{
    load_scenario, preset, reference_config, scenario1, scenario2, scenario_desk, Cell, MobilityConfig, RegionConfig,
    ScenarioConfig, Sweep, UavConfig, PRESETS,
};
pub use matrix::{result_row, run_cell_report, run_matrix, MatrixReport, RunFailure};
pub use output::{
    emit_outputs, emit_plots, read_results_csv, render_plot, summarize, summary_table, write_results_csv, CellSummary,
    Metric, COLUMNS,
};
