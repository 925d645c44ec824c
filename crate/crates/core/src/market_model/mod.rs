//! Black–Scholes market primitives.

mod normal;

pub(crate) use normal::ppnd16 as fast_quantile;
pub use normal::{erf, erfc, erfcx, std_normal_cdf, std_normal_pdf, std_normal_quantile};

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Result};

/// Parameters of a one-factor geometric Brownian motion market with a
/// deterministic bank account.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub spot: f64,
    /// Continuously compounded risk-free rate.
    pub rate: f64,
    /// Real-world drift; equal to `rate` for risk-neutral work.
    pub drift: f64,
    pub vol: f64,
}

impl MarketParams {
    pub fn new(spot: f64, rate: f64, drift: f64, vol: f64) -> Result<Self> {
        let p = Self {
            spot,
            rate,
            drift,
            vol,
        };
        p.validate()?;
        Ok(p)
    }

    /// Market whose drift equals the risk-free rate.
    pub fn risk_neutral(spot: f64, rate: f64, vol: f64) -> Result<Self> {
        Self::new(spot, rate, rate, vol)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("spot", self.spot)?;
        ensure_finite("rate", self.rate)?;
        ensure_finite("drift", self.drift)?;
        ensure_finite("vol", self.vol)?;
        if self.spot <= 0.0 {
            return domain(format!("spot must be positive, got {}", self.spot));
        }
        if self.vol <= 0.0 {
            return domain(format!("vol must be positive, got {}", self.vol));
        }
        Ok(())
    }

    /// Same market seen from a different current spot.
    pub fn with_spot(&self, spot: f64) -> Self {
        Self { spot, ..*self }
    }

    pub fn exponent(&self) -> GbmExponent {
        GbmExponent::new(self.rate, self.vol)
    }
}

/// Drift exponent `r / vol^2 - 1/2` of the risk-neutral log-price measured
/// in units of its own variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmExponent {
    pub nu: f64,
}

impl GbmExponent {
    /// Cancellation below a few ulps of `r / vol^2` is snapped to zero, so
    /// inputs such as `r = 0.02, vol = 0.2` (where `0.2 * 0.2` is not exactly
    /// `0.04` in binary) produce an exact zero.
    pub fn new(rate: f64, vol: f64) -> Self {
        let ratio = rate / (vol * vol);
        let nu = ratio - 0.5;
        let noise = 4.0 * f64::EPSILON * ratio.abs().max(0.5);
        Self {
            nu: if nu.abs() <= noise { 0.0 } else { nu },
        }
    }
}

/// Closed-form GBM value `S0 exp((drift - vol^2/2) t + vol w)`.
pub fn gbm_value(params: &MarketParams, t: f64, w: f64) -> Result<f64> {
    params.validate()?;
    ensure_finite("t", t)?;
    ensure_finite("w", w)?;
    if t < 0.0 {
        return domain(format!("t must be nonnegative, got {t}"));
    }
    let v = params.vol;
    let value = params.spot * ((params.drift - 0.5 * v * v) * t + v * w).exp();
    if !value.is_finite() {
        return domain(format!("gbm value overflows at t = {t}, w = {w}"));
    }
    Ok(value)
}

fn check_option_inputs(params: &MarketParams, strike: f64, tau: f64) -> Result<()> {
    params.validate()?;
    ensure_finite("strike", strike)?;
    ensure_finite("tau", tau)?;
    if strike <= 0.0 {
        return domain(format!("strike must be positive, got {strike}"));
    }
    if tau < 0.0 {
        return domain(format!("tau must be nonnegative, got {tau}"));
    }
    Ok(())
}

/// European call under Black–Scholes; intrinsic value at `tau = 0`.
pub fn bs_call(params: &MarketParams, strike: f64, tau: f64) -> Result<f64> {
    check_option_inputs(params, strike, tau)?;
    Ok(call_price(
        params.spot,
        strike,
        params.rate,
        params.vol,
        tau,
    ))
}

/// European put under Black–Scholes; intrinsic value at `tau = 0`.
pub fn bs_put(params: &MarketParams, strike: f64, tau: f64) -> Result<f64> {
    check_option_inputs(params, strike, tau)?;
    Ok(put_price(params.spot, strike, params.rate, params.vol, tau))
}

#[inline]
fn d1_d2(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> Option<(f64, f64)> {
    let sd = vol * tau.sqrt();
    if tau <= 0.0 || sd <= 0.0 {
        return None;
    }
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * tau) / sd;
    Some((d1, d1 - sd))
}

/// Unchecked call price for hot loops; inputs must already be valid.
#[inline]
pub(crate) fn call_price(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    match d1_d2(spot, strike, rate, vol, tau) {
        None => (spot - strike * (-rate * tau.max(0.0)).exp()).max(0.0),
        Some((d1, d2)) => {
            let c = spot * std_normal_cdf(d1) - strike * (-rate * tau).exp() * std_normal_cdf(d2);
            c.max(0.0)
        }
    }
}

/// Unchecked put price for hot loops; inputs must already be valid.
#[inline]
pub(crate) fn put_price(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    match d1_d2(spot, strike, rate, vol, tau) {
        None => (strike * (-rate * tau.max(0.0)).exp() - spot).max(0.0),
        Some((d1, d2)) => {
            let p = strike * (-rate * tau).exp() * std_normal_cdf(-d2) - spot * std_normal_cdf(-d1);
            p.max(0.0)
        }
    }
}
