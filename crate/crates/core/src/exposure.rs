//! Regulatory exposure measures.
//!
//! `EE_k` is the mean positive part of the mark-to-market at bucket `t_k`,
//! `EPE` its time average, `EEE` the running maximum of `EE` and `EEPE` the
//! time average of `EEE`. No extra discounting is applied on top of the
//! pricing routes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Axis, Result};
use crate::local_time::LocalTimeQuadrature;
use crate::market_model::{std_normal_cdf, std_normal_quantile, MarketParams};
use crate::pricing::{
    bsc_value_function, bsd_unchecked, lt_at, lt_payoff_integral, AccumulatorContract, ForwardSpot,
    Method,
};
use crate::quadrature::try_integrate;
use crate::simulation::{simulate_path, SimulationConfig};

/// Exposure dates `t_1 < ... < t_K` in `(0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketGrid {
    pub dates: Vec<f64>,
    pub horizon: f64,
}

impl BucketGrid {
    pub fn new(dates: Vec<f64>, horizon: f64) -> Result<Self> {
        ensure_finite("horizon", horizon)?;
        if horizon <= 0.0 {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        if dates.is_empty() {
            return domain("a bucket grid needs at least one date");
        }
        let mut prev = 0.0;
        for &d in &dates {
            ensure_finite("bucket date", d)?;
            if d <= prev || d > horizon * (1.0 + 1e-12) {
                return domain(format!(
                    "bucket dates must increase strictly within (0, {horizon}], got {d} after {prev}"
                ));
            }
            prev = d;
        }
        Ok(Self { dates, horizon })
    }

    /// `n` equally spaced dates ending at `horizon`.
    pub fn uniform(n: usize, horizon: f64) -> Result<Self> {
        if n < 1 {
            return domain("a bucket grid needs at least one date");
        }
        Self::new(
            (1..=n).map(|k| k as f64 * horizon / n as f64).collect(),
            horizon,
        )
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// `Δ_k = t_k - t_{k-1}` with `t_0 = 0`.
    pub fn spacings(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.dates
            .iter()
            .map(|&d| {
                let s = d - prev;
                prev = d;
                s
            })
            .collect()
    }

    pub fn equally_spaced(&self) -> bool {
        let s = self.spacings();
        s.iter().all(|d| (d - s[0]).abs() <= 1e-12 * self.horizon)
    }
}

/// Mean positive part of mark-to-market samples.
pub fn expected_exposure(mtm_samples: &[f64]) -> Result<f64> {
    if mtm_samples.is_empty() {
        return domain("expected exposure of an empty sample");
    }
    let sum: f64 = mtm_samples.iter().map(|v| v.max(0.0)).sum();
    Ok(sum / mtm_samples.len() as f64)
}

fn time_average(values: &[f64], grid: &BucketGrid) -> Result<f64> {
    if values.len() != grid.len() {
        return domain(format!(
            "{} values for {} bucket dates",
            values.len(),
            grid.len()
        ));
    }
    let sum: f64 = values.iter().zip(grid.spacings()).map(|(v, d)| v * d).sum();
    Ok(sum / grid.horizon)
}

/// `(1/T) Σ EE_k Δ_k`.
pub fn epe(ee: &[f64], grid: &BucketGrid) -> Result<f64> {
    time_average(ee, grid)
}

/// Running maximum of the expected exposure.
pub fn eee(ee: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ee.len());
    let mut running = f64::NEG_INFINITY;
    for &v in ee {
        running = running.max(v);
        out.push(running);
    }
    out
}

/// `(1/T) Σ EEE_k Δ_k`.
pub fn eepe(eee: &[f64], grid: &BucketGrid) -> Result<f64> {
    time_average(eee, grid)
}

/// Per-bucket exposure with its aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    pub method: Method,
    pub dates: Vec<f64>,
    pub ee: Vec<f64>,
    pub eee: Vec<f64>,
    pub epe: f64,
    pub eepe: f64,
    /// Monte Carlo standard error of `epe`; absent for deterministic routes.
    pub epe_std_error: Option<f64>,
    /// Sample mean of the signed mark-to-market per bucket (simulated
    /// routes only).
    pub mean_mtm: Option<Vec<f64>>,
}

impl ExposureProfile {
    pub fn from_ee(
        method: Method,
        grid: &BucketGrid,
        ee: Vec<f64>,
        epe_std_error: Option<f64>,
    ) -> Result<Self> {
        if let Some(bad) = ee.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return domain(format!(
                "expected exposures must be finite and nonnegative, got {bad}"
            ));
        }
        let running = eee(&ee);
        let epe = epe(&ee, grid)?;
        let eepe = eepe(&running, grid)?;
        Ok(Self {
            method,
            dates: grid.dates.clone(),
            ee,
            eee: running,
            epe,
            eepe,
            epe_std_error,
            mean_mtm: None,
        })
    }

    /// Columns `date, ee, eee`, ten decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "ee", "eee"])?;
        for ((d, e), m) in self.dates.iter().zip(&self.ee).zip(&self.eee) {
            w.write_record([format!("{d:.10}"), format!("{e:.10}"), format!("{m:.10}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// How the continuous-fixing route produces bucket values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BscMode {
    /// Closed-form expectation of the fine-grid value (deterministic).
    #[default]
    Expected,
    /// Fine-grid paths valued like the discrete route.
    Pathwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileOptions {
    pub forward_spot: ForwardSpot,
    pub bsc_mode: BscMode,
    pub fixings_per_day: usize,
    pub quad: LocalTimeQuadrature,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            forward_spot: ForwardSpot::Path,
            bsc_mode: BscMode::Expected,
            fixings_per_day: 40,
            quad: LocalTimeQuadrature::default(),
        }
    }
}

/// Exposure profile of `contract` on `grid` by one method.
///
/// The discrete route simulates `sim.n_paths` paths on the contract's
/// fixing grid (bucket dates must be fixing dates) and averages positive
/// parts; the local-time route and the expected continuous route are
/// deterministic.
pub fn ee_profile(
    method: Method,
    market: &MarketParams,
    contract: &AccumulatorContract,
    grid: &BucketGrid,
    sim: &SimulationConfig,
    opts: &ProfileOptions,
) -> Result<ExposureProfile> {
    market.validate()?;
    contract.validate()?;
    if (grid.horizon - contract.maturity).abs() > 1e-12 * contract.maturity {
        return domain(format!(
            "bucket horizon {} differs from maturity {}",
            grid.horizon, contract.maturity
        ));
    }
    match method {
        Method::Bsd => {
            pathwise_profile(Method::Bsd, market, contract, grid, sim, opts.forward_spot)
        }
        Method::Bsc => match opts.bsc_mode {
            BscMode::Expected => {
                let f = bsc_value_function(market, contract, opts.fixings_per_day)?;
                let ee = grid.dates.iter().map(|&t| f(t).max(0.0)).collect();
                ExposureProfile::from_ee(Method::Bsc, grid, ee, None)
            }
            BscMode::Pathwise => {
                if opts.fixings_per_day < 1 {
                    return domain("fixings_per_day must be at least 1");
                }
                let fine = contract.refined(opts.fixings_per_day)?;
                pathwise_profile(Method::Bsc, market, &fine, grid, sim, opts.forward_spot)
            }
        },
        Method::Lt => {
            let integral = lt_payoff_integral(market, contract, &opts.quad)?.value;
            let ee = grid
                .dates
                .iter()
                .map(|&t| lt_at(market, contract, integral, t).max(0.0))
                .collect();
            ExposureProfile::from_ee(Method::Lt, grid, ee, None)
        }
    }
}

fn pathwise_profile(
    method: Method,
    market: &MarketParams,
    contract: &AccumulatorContract,
    grid: &BucketGrid,
    sim: &SimulationConfig,
    spot: ForwardSpot,
) -> Result<ExposureProfile> {
    let buckets = grid
        .dates
        .iter()
        .map(|&t| contract.fixing_index(t))
        .collect::<Result<Vec<_>>>()?;
    let cfg = SimulationConfig {
        n_days: contract.n_fixings,
        horizon: contract.maturity,
        ..*sim
    };
    cfg.validate()?;
    let spacings = grid.spacings();
    let k = buckets.len();

    // one row of signed values per path, assembled in path order
    let rows: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map_init(
            || vec![0.0; contract.n_fixings],
            |path, p| {
                simulate_path(market, &cfg, p, path);
                buckets
                    .iter()
                    .map(|&i| bsd_unchecked(market, contract, path, i, spot))
                    .collect()
            },
        )
        .collect();

    let n = cfg.n_paths as f64;
    let mut ee = vec![0.0; k];
    let mut mean = vec![0.0; k];
    for row in &rows {
        for ((e, m), v) in ee.iter_mut().zip(mean.iter_mut()).zip(row) {
            *e += v.max(0.0);
            *m += v;
        }
    }
    for v in ee.iter_mut().chain(mean.iter_mut()) {
        *v /= n;
    }
    let std_error = if cfg.n_paths > 1 {
        let per_path = |row: &Vec<f64>| -> f64 {
            row.iter()
                .zip(&spacings)
                .map(|(v, d)| v.max(0.0) * d)
                .sum::<f64>()
                / grid.horizon
        };
        let avg = rows.iter().map(per_path).sum::<f64>() / n;
        let var = rows
            .iter()
            .map(|r| (per_path(r) - avg).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        Some((var / n).sqrt())
    } else {
        None
    };
    let mut profile = ExposureProfile::from_ee(method, grid, ee, std_error)?;
    profile.mean_mtm = Some(mean);
    Ok(profile)
}

/// Time axis for the deterministic EPE routes.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeAxis {
    /// `(1/T) ∫_0^T EE(t) dt` by quadrature.
    Continuous,
    /// `(1/T) Σ EE(t_k) Δ_k` on the given buckets.
    Buckets(BucketGrid),
}

fn deterministic_epe<F: Fn(f64) -> f64>(
    value: F,
    contract: &AccumulatorContract,
    quad: &LocalTimeQuadrature,
    axis: &TimeAxis,
) -> Result<f64> {
    match axis {
        TimeAxis::Continuous => {
            let spec = quad.t.on(0.0, contract.maturity);
            let r = try_integrate(|t| Ok(value(t).max(0.0)), Axis::T, &spec, &[])?
                .require_converged(Axis::T)?;
            Ok(r.value / contract.maturity)
        }
        TimeAxis::Buckets(grid) => {
            let ee: Vec<f64> = grid.dates.iter().map(|&t| value(t).max(0.0)).collect();
            epe(&ee, grid)
        }
    }
}

/// EPE of the local-time route:
/// `(1/T) ∫_0^T [Q e^{-r(T-t)} ∫ E[L_T(x)] h(x) dx]^+ dt`.
pub fn epe_lt(
    market: &MarketParams,
    contract: &AccumulatorContract,
    quad: &LocalTimeQuadrature,
    axis: &TimeAxis,
) -> Result<f64> {
    let integral = lt_payoff_integral(market, contract, quad)?.value;
    deterministic_epe(
        |t| lt_at(market, contract, integral, t),
        contract,
        quad,
        axis,
    )
}

/// EPE of the expected continuous-fixing route.
pub fn epe_bsc(
    market: &MarketParams,
    contract: &AccumulatorContract,
    fixings_per_day: usize,
    quad: &LocalTimeQuadrature,
    axis: &TimeAxis,
) -> Result<f64> {
    let f = bsc_value_function(market, contract, fixings_per_day)?;
    deterministic_epe(f, contract, quad, axis)
}

/// Inputs of the Basel IRB capital formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreditParams {
    pub ead: f64,
    pub lgd: f64,
    pub pd: f64,
    /// Asset correlation.
    pub rho: f64,
    /// Maturity adjustment.
    pub maturity_coeff: f64,
}

/// `EAD · 1.06 · LGD · (Φ[(Φ⁻¹(PD) + √ρ Φ⁻¹(0.999)) / √(1-ρ)] - PD) · c`.
pub fn capital_requirement(credit: &CreditParams) -> Result<f64> {
    let CreditParams {
        ead,
        lgd,
        pd,
        rho,
        maturity_coeff,
    } = *credit;
    for (name, v) in [
        ("ead", ead),
        ("lgd", lgd),
        ("pd", pd),
        ("rho", rho),
        ("maturity_coeff", maturity_coeff),
    ] {
        ensure_finite(name, v)?;
    }
    if ead < 0.0 {
        return domain(format!("ead must be nonnegative, got {ead}"));
    }
    if !(0.0..=1.0).contains(&lgd) {
        return domain(format!("lgd must lie in [0, 1], got {lgd}"));
    }
    if !(pd > 0.0 && pd < 1.0) {
        return domain(format!("pd must lie in (0, 1), got {pd}"));
    }
    if !(0.0..1.0).contains(&rho) {
        return domain(format!("rho must lie in [0, 1), got {rho}"));
    }
    if maturity_coeff <= 0.0 {
        return domain(format!(
            "maturity_coeff must be positive, got {maturity_coeff}"
        ));
    }
    let arg = (1.0 / (1.0 - rho)).sqrt() * std_normal_quantile(pd)?
        + (rho / (1.0 - rho)).sqrt() * std_normal_quantile(0.999)?;
    let conditional = if rho == 0.0 { pd } else { std_normal_cdf(arg) };
    Ok(ead * 1.06 * lgd * (conditional - pd) * maturity_coeff)
}

/// Expected payoff when the counterparty defaults with probability
/// `default_prob` and recovers `1 - lgd` of it.
pub fn recovery_adjusted_payoff(terminal_payoff: f64, default_prob: f64, lgd: f64) -> Result<f64> {
    ensure_finite("terminal_payoff", terminal_payoff)?;
    if !(0.0..=1.0).contains(&default_prob) {
        return domain(format!(
            "default probability must lie in [0, 1], got {default_prob}"
        ));
    }
    if !(0.0..=1.0).contains(&lgd) {
        return domain(format!("lgd must lie in [0, 1], got {lgd}"));
    }
    Ok(terminal_payoff * (1.0 - default_prob) + (1.0 - lgd) * terminal_payoff * default_prob)
}
