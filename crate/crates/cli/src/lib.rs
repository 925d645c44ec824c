//! Batch runner for the accumulator exposure engine: fair-value, EPE,
//! timing, workload and sensitivity tables written as CSV, a JSON mirror
//! and a metadata document.

pub mod config;
pub mod error;
pub mod report;
pub mod tables;
pub mod timing;
pub mod workload;

pub use config::{RunConfig, TableKind};
pub use error::{CliError, Result};
pub use report::RunReport;

/// Runs the table selected in `cfg`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    match cfg.table {
        TableKind::Fv => tables::run_fv_table(cfg),
        TableKind::Epe => tables::run_epe_table(cfg),
        TableKind::Timing => timing::run_timing(cfg),
        TableKind::Workload => workload::run_workload(cfg),
        TableKind::Curves => tables::emit_delta_curves(cfg),
    }
}
