//! Pricing-task counts of a portfolio revaluation.

use crate::config::{RunConfig, TableKind, WorkloadConfig};
use crate::error::{config_error, CliError, Result};
use crate::report::{Cell, Row, RunReport};
use crate::tables::base_metadata;

/// Pricing tasks `PT = deals * sims * steps` and, with `backups`
/// revaluations each, `RT = PT * backups`.
pub fn workload_estimate(deals: u64, sims: u64, steps: u64, backups: u64) -> Result<(u64, u64)> {
    if deals == 0 || sims == 0 || steps == 0 || backups == 0 {
        return config_error("workload counts must be positive");
    }
    let overflow = || CliError::Core(ccr_core::Error::Overflow("pricing task count".into()));
    let pt = deals
        .checked_mul(sims)
        .and_then(|x| x.checked_mul(steps))
        .ok_or_else(overflow)?;
    let rt = pt.checked_mul(backups).ok_or_else(overflow)?;
    Ok((pt, rt))
}

pub fn run_workload(cfg: &RunConfig) -> Result<RunReport> {
    let WorkloadConfig {
        deals,
        sims,
        steps,
        backups,
    } = cfg.workload;
    let columns = [
        "deals",
        "sims",
        "steps",
        "backups",
        "pricing_tasks",
        "revaluation_tasks",
    ];
    let mut report = RunReport::new(
        TableKind::Workload,
        columns.iter().map(|c| c.to_string()).collect(),
    );
    base_metadata(&mut report, cfg);
    let mut row = Row {
        cells: vec![
            Cell::Int(deals),
            Cell::Int(sims),
            Cell::Int(steps),
            Cell::Int(backups),
        ],
        ..Default::default()
    };
    match workload_estimate(deals, sims, steps, backups) {
        Ok((pt, rt)) => row.cells.extend([Cell::Int(pt), Cell::Int(rt)]),
        Err(e) => {
            row.cells.extend([Cell::Empty, Cell::Empty]);
            row.record_error("workload", e);
        }
    }
    report.rows.push(row);
    Ok(report)
}
