//! Wall-clock comparison of the three exposure routes at matched settings.

use std::hint::black_box;
use std::time::Instant;

use ccr_core::exposure::{ee_profile, epe_lt, BscMode, ProfileOptions};
use ccr_core::pricing::Method;
use ccr_core::simulation::SimulationConfig;

use crate::config::{RunConfig, TableKind};
use crate::error::Result;
use crate::report::{Cell, Row, RunReport};
use crate::tables::base_metadata;

/// Fewer repetitions than this flags the statistics as low-confidence.
pub const MIN_CONFIDENT_REPETITIONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingStats {
    pub method: Method,
    pub samples: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl TimingStats {
    fn from_samples(method: Method, mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let median = if n % 2 == 1 {
            samples[n / 2]
        } else {
            0.5 * (samples[n / 2 - 1] + samples[n / 2])
        };
        Self {
            method,
            median,
            min: samples[0],
            max: samples[n - 1],
            samples,
        }
    }

    /// `(max - min) / median`.
    pub fn spread(&self) -> f64 {
        (self.max - self.min) / self.median
    }
}

/// One timed unit of work: the EPE of every grid triplet by `method`.
fn workload(cfg: &RunConfig, method: Method, sim: &SimulationConfig) -> Result<f64> {
    let grid = cfg.bucket_grid()?;
    let axis = cfg.time_axis()?;
    let mut acc = 0.0;
    for (k, v, r) in cfg.grid().triplets() {
        let m = cfg.market(r, v)?;
        let c = cfg.contract(k)?;
        acc += match method {
            Method::Bsd => {
                let opts = ProfileOptions {
                    forward_spot: cfg.forward_spot(),
                    ..Default::default()
                };
                ee_profile(Method::Bsd, &m, &c, &grid, sim, &opts)?.epe
            }
            Method::Bsc => {
                let opts = ProfileOptions {
                    forward_spot: cfg.forward_spot(),
                    bsc_mode: BscMode::Pathwise,
                    fixings_per_day: cfg.fixings_per_day,
                    quad: cfg.quad,
                };
                ee_profile(Method::Bsc, &m, &c, &grid, sim, &opts)?.epe
            }
            Method::Lt => epe_lt(&m, &c, &cfg.quad, &axis)?,
        };
    }
    Ok(acc)
}

/// Times `method` with `warmup` discarded runs and `repetitions` kept ones.
pub fn time_method(cfg: &RunConfig, method: Method) -> Result<TimingStats> {
    let sim = SimulationConfig {
        n_paths: cfg.timing.n_paths.unwrap_or(cfg.sim.n_paths),
        ..cfg.sim
    };
    for _ in 0..cfg.timing.warmup {
        black_box(workload(cfg, method, &sim)?);
    }
    let mut samples = Vec::with_capacity(cfg.timing.repetitions);
    for _ in 0..cfg.timing.repetitions {
        let start = Instant::now();
        black_box(workload(cfg, method, &sim)?);
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(TimingStats::from_samples(method, samples))
}

/// Median and spread of wall-clock time per route. The continuous route
/// is timed pathwise on the refined fixing grid, the discrete route on the
/// daily grid, both with the same paths.
pub fn run_timing(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let columns = [
        "method",
        "median_seconds",
        "min_seconds",
        "max_seconds",
        "spread",
        "repetitions",
        "low_confidence",
    ];
    let mut report = RunReport::new(
        TableKind::Timing,
        columns.iter().map(|c| c.to_string()).collect(),
    );
    base_metadata(&mut report, cfg);
    report.meta("timing", cfg.timing);
    report.meta("timed_bsc_mode", BscMode::Pathwise);
    report.meta("timed_paths", cfg.timing.n_paths.unwrap_or(cfg.sim.n_paths));
    let mut medians = std::collections::BTreeMap::new();
    for method in [Method::Lt, Method::Bsd, Method::Bsc] {
        if !cfg.has(method) {
            continue;
        }
        let mut row = Row::default();
        match time_method(cfg, method) {
            Ok(s) => {
                medians.insert(method.label(), s.median);
                row.cells = vec![
                    Cell::Text(method.label().into()),
                    Cell::Num(s.median),
                    Cell::Num(s.min),
                    Cell::Num(s.max),
                    Cell::Num(s.spread()),
                    Cell::Int(s.samples.len() as u64),
                    Cell::Text((s.samples.len() < MIN_CONFIDENT_REPETITIONS).to_string()),
                ];
                row.seconds
                    .insert(method.label().into(), s.samples.iter().sum());
            }
            Err(e) => {
                row.cells = vec![Cell::Text(method.label().into())];
                row.cells.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.record_error(method.label(), e);
            }
        }
        report.rows.push(row);
    }
    if let (Some(lt), Some(bsd), Some(bsc)) =
        (medians.get("LT"), medians.get("BSD"), medians.get("BSC"))
    {
        report.meta("ordering_lt_bsd_bsc", lt < bsd && bsd < bsc);
    }
    if let (Some(lt), Some(bsd)) = (medians.get("LT"), medians.get("BSD")) {
        report.meta("lt_bsd_median_ratio", lt / bsd);
    }
    Ok(report)
}
