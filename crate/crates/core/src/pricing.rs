//! Accumulator fair values.
//!
//! The contract pays `Q [(S_k - K)^+ - g (K - S_k)^+]` for each fixing
//! `t_k = k T / N`, all settled at maturity `T`, and the accrued amount is
//! scaled by the fixing spacing `T / N`, so the value approximates
//! `Q ∫_0^T [(S_t - K)^+ - g (K - S_t)^+] dt` settled at `T`.
//!
//! At a valuation date `t_i` the fixings `t_k <= t_i` are known and
//! discounted from `T`; each future fixing is worth a call minus `g` puts
//! struck at `K` and expiring at `t_k`, grown forward to `T` and discounted
//! back. With this convention `e^{-r t} V_t` is a martingale and the three
//! methods target the same number.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Axis, Result};
use crate::local_time::{expected_local_time_unchecked, LocalTimeQuadrature};
use crate::market_model::{call_price, MarketParams};
use crate::quadrature::{try_integrate, QuadratureResult};

/// Pricing route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Discrete fixings, closed-form vanilla legs, simulated realized leg.
    Bsd,
    /// Fine fixing grid approximating continuous monitoring.
    Bsc,
    /// Local-time density integration.
    Lt,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bsd, Method::Bsc, Method::Lt];

    pub fn label(self) -> &'static str {
        match self {
            Method::Bsd => "BSD",
            Method::Bsc => "BSC",
            Method::Lt => "LT",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bsd" => Ok(Method::Bsd),
            "bsc" => Ok(Method::Bsc),
            "lt" => Ok(Method::Lt),
            other => domain(format!(
                "unknown method {other:?} (expected bsd, bsc or lt)"
            )),
        }
    }
}

/// Accumulator without knock-out barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumulatorContract {
    pub strike: f64,
    /// Multiplier of the short put leg.
    pub gearing: f64,
    pub quantity: f64,
    /// Years.
    pub maturity: f64,
    pub n_fixings: usize,
}

impl AccumulatorContract {
    /// Unit quantity, gearing 2.
    pub fn new(strike: f64, maturity: f64, n_fixings: usize) -> Result<Self> {
        let c = Self {
            strike,
            gearing: 2.0,
            quantity: 1.0,
            maturity,
            n_fixings,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("strike", self.strike)?;
        ensure_finite("gearing", self.gearing)?;
        ensure_finite("quantity", self.quantity)?;
        ensure_finite("maturity", self.maturity)?;
        if self.strike <= 0.0 {
            return domain(format!("strike must be positive, got {}", self.strike));
        }
        if self.gearing < 0.0 {
            return domain(format!("gearing must be nonnegative, got {}", self.gearing));
        }
        if self.quantity <= 0.0 {
            return domain(format!("quantity must be positive, got {}", self.quantity));
        }
        if self.maturity <= 0.0 {
            return domain(format!("maturity must be positive, got {}", self.maturity));
        }
        if self.n_fixings < 1 {
            return domain("n_fixings must be at least 1");
        }
        Ok(())
    }

    /// Spacing between fixings.
    pub fn step(&self) -> f64 {
        self.maturity / self.n_fixings as f64
    }

    pub fn fixing_time(&self, k: usize) -> f64 {
        k as f64 * self.maturity / self.n_fixings as f64
    }

    /// Index `i` with `t_i = t`; `0` is inception.
    pub fn fixing_index(&self, t: f64) -> Result<usize> {
        ensure_finite("valuation date", t)?;
        let x = t / self.step();
        let i = x.round();
        if i < 0.0 || i > self.n_fixings as f64 || (x - i).abs() > 1e-9 {
            return domain(format!(
                "valuation date {t} is not a fixing date of a {}-fixing contract",
                self.n_fixings
            ));
        }
        Ok(i as usize)
    }

    /// Same contract observed `fixings_per_period` times per original fixing.
    pub fn refined(&self, fixings_per_period: usize) -> Result<Self> {
        let n_fixings = self
            .n_fixings
            .checked_mul(fixings_per_period)
            .ok_or_else(|| crate::Error::Overflow("fixing count".into()))?;
        let c = Self { n_fixings, ..*self };
        c.validate()?;
        Ok(c)
    }

    /// Undiscounted payoff of one fixing at price `x`, per unit quantity.
    #[inline]
    pub fn fixing_payoff(&self, x: f64) -> f64 {
        (x - self.strike).max(0.0) - self.gearing * (self.strike - x).max(0.0)
    }
}

/// Spot used for the vanilla legs of unfixed dates when valuing along a
/// path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardSpot {
    /// The simulated price at the valuation date.
    #[default]
    Path,
    /// The inception spot, whatever the path did.
    Initial,
}

/// `C - g P` for one unfixed date, via parity `P = C - S + K e^{-r tau}`.
#[inline]
fn vanilla_leg(spot: f64, c: &AccumulatorContract, rate: f64, vol: f64, tau: f64) -> f64 {
    let call = call_price(spot, c.strike, rate, vol, tau);
    (1.0 - c.gearing) * call + c.gearing * (spot - c.strike * (-rate * tau).exp())
}

fn check(market: &MarketParams, contract: &AccumulatorContract) -> Result<()> {
    market.validate()?;
    contract.validate()
}

/// Value at inception: every fixing still to come.
pub fn price_bsd_at_zero(market: &MarketParams, contract: &AccumulatorContract) -> Result<f64> {
    check(market, contract)?;
    Ok(bsd_unchecked(
        market,
        contract,
        &[],
        0,
        ForwardSpot::Initial,
    ))
}

/// Value at fixing index `bucket` along `path`, where `path[j - 1]` is the
/// price at fixing `j`.
pub fn price_bsd_path(
    market: &MarketParams,
    contract: &AccumulatorContract,
    path: &[f64],
    bucket: usize,
    spot: ForwardSpot,
) -> Result<f64> {
    check(market, contract)?;
    if bucket > contract.n_fixings {
        return domain(format!(
            "bucket index {bucket} exceeds the {} fixings",
            contract.n_fixings
        ));
    }
    if path.len() < bucket {
        return domain(format!(
            "path has {} prices, bucket {bucket} needs at least that many",
            path.len()
        ));
    }
    if let Some(bad) = path[..bucket]
        .iter()
        .find(|s| !(s.is_finite() && **s > 0.0))
    {
        return domain(format!(
            "path prices must be positive and finite, got {bad}"
        ));
    }
    Ok(bsd_unchecked(market, contract, path, bucket, spot))
}

pub(crate) fn bsd_unchecked(
    market: &MarketParams,
    contract: &AccumulatorContract,
    path: &[f64],
    bucket: usize,
    spot_mode: ForwardSpot,
) -> f64 {
    let r = market.rate;
    let vol = market.vol;
    let n = contract.n_fixings;
    let big_t = contract.maturity;
    let t_i = contract.fixing_time(bucket);
    let realized: f64 = path[..bucket]
        .iter()
        .map(|&s| contract.fixing_payoff(s))
        .sum();
    let spot = match spot_mode {
        ForwardSpot::Initial => market.spot,
        ForwardSpot::Path if bucket == 0 => market.spot,
        ForwardSpot::Path => path[bucket - 1],
    };
    let mut forward = 0.0;
    for k in bucket + 1..=n {
        let t_k = contract.fixing_time(k);
        let leg = vanilla_leg(spot, contract, r, vol, t_k - t_i);
        forward += (-r * (big_t - t_k)).exp() * leg;
    }
    contract.quantity * contract.step() * ((-r * (big_t - t_i)).exp() * realized + forward)
}

/// `Σ_m e^{r t_m} [C - g P](S0, t_m)` over the fine grid, times its spacing:
/// the forward value at time 0 of the continuously fixed payoff, per unit
/// quantity, before discounting from `T`.
fn bsc_accrual(
    market: &MarketParams,
    contract: &AccumulatorContract,
    fixings_per_day: usize,
) -> Result<f64> {
    if fixings_per_day < 1 {
        return domain("fixings_per_day must be at least 1");
    }
    let fine = contract.refined(fixings_per_day)?;
    let r = market.rate;
    let mut sum = 0.0;
    for m in 1..=fine.n_fixings {
        let t_m = fine.fixing_time(m);
        sum += (r * t_m).exp() * vanilla_leg(market.spot, &fine, r, market.vol, t_m);
    }
    Ok(sum * fine.step())
}

/// Expected value at `t` of the contract fixed `fixings_per_day` times per
/// original fixing period (`n_fixings * fixings_per_day` fixings in all).
pub fn price_bsc(
    market: &MarketParams,
    contract: &AccumulatorContract,
    t: f64,
    fixings_per_day: usize,
) -> Result<f64> {
    check(market, contract)?;
    check_date(t, contract)?;
    let accrual = bsc_accrual(market, contract, fixings_per_day)?;
    Ok(bsc_at(market, contract, accrual, t))
}

#[inline]
fn bsc_at(market: &MarketParams, contract: &AccumulatorContract, accrual: f64, t: f64) -> f64 {
    contract.quantity * (-market.rate * (contract.maturity - t)).exp() * accrual
}

/// Time-`t` value function of the fine-grid expectation, for repeated use.
pub fn bsc_value_function(
    market: &MarketParams,
    contract: &AccumulatorContract,
    fixings_per_day: usize,
) -> Result<impl Fn(f64) -> f64> {
    check(market, contract)?;
    let accrual = bsc_accrual(market, contract, fixings_per_day)?;
    let (m, c) = (*market, *contract);
    Ok(move |t| bsc_at(&m, &c, accrual, t))
}

fn check_date(t: f64, contract: &AccumulatorContract) -> Result<()> {
    ensure_finite("valuation date", t)?;
    if t < 0.0 || t > contract.maturity {
        return domain(format!(
            "valuation date {t} outside [0, {}]",
            contract.maturity
        ));
    }
    Ok(())
}

/// `∫ E[L_T(x)] [(x - K)^+ - g (K - x)^+] dx` over the truncated price range,
/// with panel breaks at the strike and at the spot.
pub fn lt_payoff_integral(
    market: &MarketParams,
    contract: &AccumulatorContract,
    quad: &LocalTimeQuadrature,
) -> Result<QuadratureResult> {
    check(market, contract)?;
    quad.validate()?;
    let horizon = contract.maturity;
    let (lo, hi) = quad.x_bounds(market, horizon);
    let spec = quad.x.on(lo, hi);
    let r = try_integrate(
        |x| {
            let payoff = contract.fixing_payoff(x);
            if payoff == 0.0 {
                return Ok(0.0);
            }
            Ok(expected_local_time_unchecked(x, horizon, market, quad)? * payoff)
        },
        Axis::X,
        &spec,
        &[contract.strike, market.spot],
    )?;
    r.require_converged(Axis::X)
}

/// Local-time value at `t`: `Q e^{-r(T - t)} ∫ E[L_T(x)] h(x) dx`.
pub fn price_lt(
    market: &MarketParams,
    contract: &AccumulatorContract,
    t: f64,
    quad: &LocalTimeQuadrature,
) -> Result<f64> {
    check_date(t, contract)?;
    let integral = lt_payoff_integral(market, contract, quad)?.value;
    Ok(lt_at(market, contract, integral, t))
}

#[inline]
pub(crate) fn lt_at(
    market: &MarketParams,
    contract: &AccumulatorContract,
    integral: f64,
    t: f64,
) -> f64 {
    contract.quantity * (-market.rate * (contract.maturity - t)).exp() * integral
}

/// Settings shared by the fair-value routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingSettings {
    /// Fine fixings per original fixing period for the continuous route.
    pub fixings_per_day: usize,
    pub quad: LocalTimeQuadrature,
}

impl Default for PricingSettings {
    fn default() -> Self {
        Self {
            fixings_per_day: 40,
            quad: LocalTimeQuadrature::default(),
        }
    }
}

/// Fair values of one method on a set of valuation dates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairValueReport {
    pub method: Method,
    pub dates: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

/// Expected fair value at each date under the pricing measure. For the
/// discrete route this is `e^{r t}` times the inception value, the mean of
/// the pathwise values at `t`.
pub fn fair_value_report(
    method: Method,
    market: &MarketParams,
    contract: &AccumulatorContract,
    dates: &[f64],
    settings: &PricingSettings,
) -> Result<FairValueReport> {
    check(market, contract)?;
    for &t in dates {
        check_date(t, contract)?;
    }
    let mut meta = BTreeMap::new();
    meta.insert("method".into(), method.label().into());
    let values = match method {
        Method::Bsd => {
            let v0 = price_bsd_at_zero(market, contract)?;
            meta.insert("n_fixings".into(), contract.n_fixings.to_string());
            dates.iter().map(|t| v0 * (market.rate * t).exp()).collect()
        }
        Method::Bsc => {
            let f = bsc_value_function(market, contract, settings.fixings_per_day)?;
            meta.insert(
                "fine_fixings".into(),
                (contract.n_fixings * settings.fixings_per_day).to_string(),
            );
            dates.iter().map(|&t| f(t)).collect()
        }
        Method::Lt => {
            let r = lt_payoff_integral(market, contract, &settings.quad)?;
            meta.insert("x_error_estimate".into(), format!("{:e}", r.error_estimate));
            meta.insert(
                "x_truncation_sd".into(),
                settings.quad.x_truncation_sd.to_string(),
            );
            meta.insert("y_envelope".into(), settings.quad.y_envelope.to_string());
            meta.insert(
                "density_variant".into(),
                format!("{:?}", settings.quad.variant),
            );
            meta.insert(
                "local_time_normalization".into(),
                "occupation density, factor 1".into(),
            );
            dates
                .iter()
                .map(|&t| lt_at(market, contract, r.value, t))
                .collect()
        }
    };
    Ok(FairValueReport {
        method,
        dates: dates.to_vec(),
        values,
        meta,
    })
}
