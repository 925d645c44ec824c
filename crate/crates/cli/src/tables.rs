//! Fair-value, exposure and sensitivity tables over a parameter grid.

use std::collections::BTreeMap;
use std::time::Instant;

use ccr_core::exposure::{ee_profile, epe, epe_bsc, epe_lt, BscMode, ProfileOptions};
use ccr_core::pricing::{price_bsc, price_bsd_at_zero, price_lt, ForwardSpot, Method};
use rayon::prelude::*;

use crate::config::{RunConfig, TableKind};
use crate::error::{config_error, Result};
use crate::report::{delta_percent, Cell, Row, RunReport};

fn timed<T>(seconds: &mut BTreeMap<String, f64>, key: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    seconds.insert(key.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Settings every report carries, enough to re-derive each row.
pub(crate) fn base_metadata(report: &mut RunReport, cfg: &RunConfig) {
    report.meta("table", cfg.table.name());
    report.meta("engine_version", env!("CARGO_PKG_VERSION"));
    report.meta(
        "methods",
        cfg.methods.iter().map(|m| m.label()).collect::<Vec<_>>(),
    );
    report.meta("spot", cfg.spot());
    report.meta("seed", cfg.sim.seed);
    report.meta("simulation", cfg.sim);
    report.meta("contract", cfg.contract);
    report.meta("quadrature", cfg.quad);
    report.meta("fixings_per_day", cfg.fixings_per_day);
    report.meta("buckets", cfg.buckets);
    report.meta("inception_spot", cfg.inception_spot);
    report.meta("forward_spot", cfg.forward_spot());
    report.meta("epe_axis", cfg.epe_axis);
    report.meta("bsc_mode", cfg.bsc_mode);
    report.meta("delta_convention", "delta(A,B) = (B - A) / A, in percent");
    report.meta("decimal_separator", ".");
    report.meta(
        "local_time_normalization",
        "occupation density in price units, calibration factor 1.0; confirmed against epsilon-band occupation sampling",
    );
    report.meta("density_variant", cfg.quad.variant);
}

fn param_cells(k: f64, v: f64, r: f64) -> Vec<Cell> {
    vec![Cell::Num(k), Cell::Num(v), Cell::Num(r)]
}

/// Inception fair values of the three routes, one row per `(r, K, vol)`.
pub fn run_fv_table(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let columns = [
        "r",
        "strike",
        "vol",
        "fv_bsd",
        "fv_bsc",
        "fv_lt",
        "delta_lt_bsd_pct",
    ];
    let mut report = RunReport::new(
        TableKind::Fv,
        columns.iter().map(|c| c.to_string()).collect(),
    );
    base_metadata(&mut report, cfg);
    report.meta("valuation_date", 0.0);
    report.rows = cfg
        .grid()
        .triplets()
        .par_iter()
        .map(|&(k, v, r)| {
            let mut row = Row::default();
            let mut values = [None; 3];
            let mut secs = BTreeMap::new();
            let setup = cfg.market(r, v).and_then(|m| Ok((m, cfg.contract(k)?)));
            match setup {
                Err(e) => row.record_error("setup", e),
                Ok((m, c)) => {
                    for (slot, method) in Method::ALL.into_iter().enumerate() {
                        if !cfg.has(method) {
                            continue;
                        }
                        let res = timed(&mut secs, method.label(), || match method {
                            Method::Bsd => price_bsd_at_zero(&m, &c),
                            Method::Bsc => price_bsc(&m, &c, 0.0, cfg.fixings_per_day),
                            Method::Lt => price_lt(&m, &c, 0.0, &cfg.quad),
                        });
                        match res {
                            Ok(x) => values[slot] = Some(x),
                            Err(e) => row.record_error(method.label(), e),
                        }
                    }
                }
            }
            row.seconds = secs;
            row.cells = vec![Cell::Num(r), Cell::Num(k), Cell::Num(v)];
            row.cells.extend(values.iter().map(|x| Cell::num(*x)));
            row.cells
                .push(Cell::num(delta_percent(values[0], values[2])));
            row
        })
        .collect();
    Ok(report)
}

/// EPE of one `(K, vol, r)` triplet by every selected route.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpeValues {
    /// `(EPE, standard error)` valuing unfixed dates at the simulated spot.
    pub bsd_path: Option<(f64, f64)>,
    /// Same, valuing unfixed dates at the inception spot.
    pub bsd_initial: Option<(f64, f64)>,
    /// EPE of the positive part of the mean MtM, primary spot convention.
    pub bsd_mean_mtm: Option<f64>,
    pub bsc: Option<f64>,
    pub lt: Option<f64>,
}

impl EpeValues {
    pub fn bsd(&self, spot: ForwardSpot) -> Option<f64> {
        match spot {
            ForwardSpot::Path => self.bsd_path.map(|x| x.0),
            ForwardSpot::Initial => self.bsd_initial.map(|x| x.0),
        }
    }
}

/// Computes every selected route for one triplet; `both_spots` adds the
/// secondary forward-spot convention of the discrete route.
pub fn epe_triplet(cfg: &RunConfig, k: f64, v: f64, r: f64, both_spots: bool) -> (EpeValues, Row) {
    let mut row = Row::default();
    let mut out = EpeValues::default();
    let setup = || -> Result<_> {
        Ok((
            cfg.market(r, v)?,
            cfg.contract(k)?,
            cfg.bucket_grid()?,
            cfg.time_axis()?,
        ))
    };
    let (m, c, grid, axis) = match setup() {
        Ok(x) => x,
        Err(e) => {
            row.record_error("setup", e);
            return (out, row);
        }
    };
    let mut secs = BTreeMap::new();
    if cfg.has(Method::Bsd) {
        let primary = cfg.forward_spot();
        let mut spots = vec![primary];
        if both_spots {
            spots.push(match primary {
                ForwardSpot::Path => ForwardSpot::Initial,
                ForwardSpot::Initial => ForwardSpot::Path,
            });
        }
        for spot in spots {
            let opts = ProfileOptions {
                forward_spot: spot,
                ..Default::default()
            };
            let key = match spot {
                ForwardSpot::Path => "BSD",
                ForwardSpot::Initial => "BSD_initial",
            };
            let res = timed(&mut secs, key, || {
                ee_profile(Method::Bsd, &m, &c, &grid, &cfg.sim, &opts)
            });
            match res {
                Ok(p) => {
                    let pair = (p.epe, p.epe_std_error.unwrap_or(0.0));
                    if spot == primary {
                        let floored: Vec<f64> =
                            p.mean_mtm.iter().flatten().map(|x| x.max(0.0)).collect();
                        out.bsd_mean_mtm = epe(&floored, &grid).ok();
                    }
                    match spot {
                        ForwardSpot::Path => out.bsd_path = Some(pair),
                        ForwardSpot::Initial => out.bsd_initial = Some(pair),
                    }
                }
                Err(e) => row.record_error(key, e),
            }
        }
    }
    if cfg.has(Method::Bsc) {
        let res = timed(&mut secs, "BSC", || match cfg.bsc_mode {
            BscMode::Expected => epe_bsc(&m, &c, cfg.fixings_per_day, &cfg.quad, &axis),
            BscMode::Pathwise => {
                let opts = ProfileOptions {
                    forward_spot: cfg.forward_spot(),
                    bsc_mode: BscMode::Pathwise,
                    fixings_per_day: cfg.fixings_per_day,
                    quad: cfg.quad,
                };
                ee_profile(Method::Bsc, &m, &c, &grid, &cfg.sim, &opts).map(|p| p.epe)
            }
        });
        match res {
            Ok(x) => out.bsc = Some(x),
            Err(e) => row.record_error("BSC", e),
        }
    }
    if cfg.has(Method::Lt) {
        match timed(&mut secs, "LT", || epe_lt(&m, &c, &cfg.quad, &axis)) {
            Ok(x) => out.lt = Some(x),
            Err(e) => row.record_error("LT", e),
        }
    }
    row.seconds = secs;
    (out, row)
}

const EPE_COLUMNS: [&str; 15] = [
    "strike",
    "vol",
    "r",
    "bsd",
    "bsc",
    "lt",
    "delta_bsd_bsc_pct",
    "delta_bsc_lt_pct",
    "delta_bsd_lt_pct",
    "bsd_std_error",
    "bsd_path",
    "bsd_path_std_error",
    "bsd_initial",
    "bsd_initial_std_error",
    "bsd_of_mean_mtm",
];

/// EPE by the three routes with pairwise deltas, one row per triplet. The
/// `bsd` column uses the configured forward-spot convention; both
/// conventions are reported alongside.
pub fn run_epe_table(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = RunReport::new(
        TableKind::Epe,
        EPE_COLUMNS.iter().map(|c| c.to_string()).collect(),
    );
    base_metadata(&mut report, cfg);
    report.meta(
        "bsd_estimator",
        "mean over paths of the positive part of the MtM per bucket, time-averaged over the buckets",
    );
    report.meta(
        "bsd_of_mean_mtm",
        "diagnostic: bucket average of the positive part of the mean MtM",
    );
    let spot = cfg.forward_spot();
    report.rows = cfg
        .grid()
        .triplets()
        .par_iter()
        .map(|&(k, v, r)| {
            let (x, mut row) = epe_triplet(cfg, k, v, r, true);
            let bsd = x.bsd(spot);
            let se = match spot {
                ForwardSpot::Path => x.bsd_path.map(|p| p.1),
                ForwardSpot::Initial => x.bsd_initial.map(|p| p.1),
            };
            row.cells = param_cells(k, v, r);
            row.cells.extend([
                Cell::num(bsd),
                Cell::num(x.bsc),
                Cell::num(x.lt),
                Cell::num(delta_percent(bsd, x.bsc)),
                Cell::num(delta_percent(x.bsc, x.lt)),
                Cell::num(delta_percent(bsd, x.lt)),
                Cell::num(se),
                Cell::num(x.bsd_path.map(|p| p.0)),
                Cell::num(x.bsd_path.map(|p| p.1)),
                Cell::num(x.bsd_initial.map(|p| p.0)),
                Cell::num(x.bsd_initial.map(|p| p.1)),
                Cell::num(x.bsd_mean_mtm),
            ]);
            row
        })
        .collect();
    Ok(report)
}

/// EPE deltas against the discrete route over a vol sweep at fixed
/// `(K, r)`, every point with the same seed.
pub fn emit_delta_curves(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    if !cfg.has(Method::Bsd) {
        return config_error("delta curves are measured against BSD, which is not selected");
    }
    let vols = cfg.curves.vols()?;
    let (k, r) = (cfg.curves.strike, cfg.curves.rate);
    let columns = [
        "vol",
        "bsd",
        "bsc",
        "lt",
        "delta_bsd_bsc_pct",
        "delta_bsd_lt_pct",
        "delta_bsd_bsd_pct",
    ];
    let mut report = RunReport::new(
        TableKind::Curves,
        columns.iter().map(|c| c.to_string()).collect(),
    );
    base_metadata(&mut report, cfg);
    report.meta("curve", cfg.curves);
    let spot = cfg.forward_spot();
    report.rows = vols
        .par_iter()
        .map(|&v| {
            let (x, mut row) = epe_triplet(cfg, k, v, r, false);
            let bsd = x.bsd(spot);
            row.cells = vec![
                Cell::Num(v),
                Cell::num(bsd),
                Cell::num(x.bsc),
                Cell::num(x.lt),
                Cell::num(delta_percent(bsd, x.bsc)),
                Cell::num(delta_percent(bsd, x.lt)),
                Cell::num(delta_percent(bsd, bsd)),
            ];
            row
        })
        .collect();
    Ok(report)
}
