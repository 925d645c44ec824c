//! Local-time laws for Brownian motion and geometric Brownian motion.
//!
//! Local time is normalised as an occupation density: for every bounded
//! Borel `f`, `∫_0^t f(X_s) ds = ∫ f(x) L_t(x) dx`. For a geometric Brownian
//! motion the density is taken with respect to the price `x`, so
//! `∫ E[L_t(x)] dx = t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Axis, Result};
use crate::market_model::{erf, erfc, erfcx, GbmExponent, MarketParams};
use crate::quadrature::{try_integrate, Tolerance};
use crate::simulation::gaussian_stream;

/// Local time `y` of standard Brownian motion at `level` by `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmLocalTimeQuery {
    pub level: f64,
    pub horizon: f64,
    pub time_at_level: f64,
}

/// Local time `y` of the GBM `market` at price `level` by `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmLocalTimeQuery {
    pub level: f64,
    pub horizon: f64,
    pub time_at_level: f64,
    pub market: MarketParams,
    pub exponent: GbmExponent,
}

impl GbmLocalTimeQuery {
    pub fn new(level: f64, horizon: f64, time_at_level: f64, market: MarketParams) -> Self {
        Self {
            level,
            horizon,
            time_at_level,
            market,
            exponent: market.exponent(),
        }
    }
}

/// Which coefficient multiplies the erfc correction of the GBM density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityVariant {
    /// `|nu| vol^2 a / 2`: integrates to the hitting probability and
    /// reproduces the exact occupation density.
    #[default]
    Exact,
    /// `|nu| vol^2 a`: twice the exact coefficient; its total mass exceeds
    /// one when `nu != 0`. Kept for comparison runs.
    DoubledCoefficient,
}

fn check_horizon(t: f64) -> Result<()> {
    ensure_finite("horizon", t)?;
    if t <= 0.0 {
        return domain(format!("horizon must be positive, got {t}"));
    }
    Ok(())
}

fn check_time_at_level(y: f64) -> Result<()> {
    ensure_finite("time_at_level", y)?;
    if y < 0.0 {
        return domain(format!("time_at_level must be nonnegative, got {y}"));
    }
    Ok(())
}

/// Density of the continuous part of the law of `L_t(a)` for standard
/// Brownian motion started at zero: `sqrt(2/(pi t)) exp(-(y+|a|)^2/(2t))`.
pub fn bm_local_time_density(q: &BmLocalTimeQuery) -> Result<f64> {
    check_horizon(q.horizon)?;
    check_time_at_level(q.time_at_level)?;
    ensure_finite("level", q.level)?;
    let t = q.horizon;
    let s = q.time_at_level + q.level.abs();
    Ok((2.0 / (std::f64::consts::PI * t)).sqrt() * (-s * s / (2.0 * t)).exp())
}

/// Probability that `L_t(a) = 0`, i.e. that the path never reaches `a`.
pub fn bm_local_time_atom(level: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    ensure_finite("level", level)?;
    // 2 Phi(|a|/sqrt t) - 1
    Ok(erf(level.abs() / (2.0 * horizon).sqrt()))
}

/// Density of `L_t(a)` for the GBM in the query, in the default variant.
pub fn gbm_local_time_density(q: &GbmLocalTimeQuery) -> Result<f64> {
    gbm_local_time_density_with(q, DensityVariant::Exact)
}

pub fn gbm_local_time_density_with(q: &GbmLocalTimeQuery, variant: DensityVariant) -> Result<f64> {
    q.market.validate()?;
    check_horizon(q.horizon)?;
    check_time_at_level(q.time_at_level)?;
    ensure_finite("level", q.level)?;
    if q.level <= 0.0 {
        return domain(format!("level must be positive, got {}", q.level));
    }
    ensure_finite("nu", q.exponent.nu)?;
    Ok(GbmDensity::new(q.level, q.horizon, &q.market, q.exponent.nu, variant).at(q.time_at_level))
}

/// The GBM local-time density with everything that does not depend on `y`
/// precomputed.
///
/// Writing `z = vol^2 a y + |ln(a/S)|`, `w = z / (vol sqrt(2t))` and
/// `c = |nu| vol sqrt(t/2)`, the density is
///
/// `vol a e^{nu ln(a/S) - w^2 - c^2} [sqrt(2/(pi t)) + k (erfcx(w-c) - erfcx(w+c))]`
///
/// with `k = |nu| vol / 2`. The scaled form keeps both terms finite where
/// the unscaled erfc products would underflow against overflowing
/// exponentials.
#[derive(Debug, Clone, Copy)]
struct GbmDensity {
    vol_a: f64,
    scale: f64,
    abs_log: f64,
    nu_log: f64,
    sd: f64,
    c: f64,
    gauss: f64,
    k: f64,
}

impl GbmDensity {
    fn new(level: f64, t: f64, market: &MarketParams, nu: f64, variant: DensityVariant) -> Self {
        let vol = market.vol;
        let log_ratio = (level / market.spot).ln();
        let abs_nu = nu.abs();
        let k = match variant {
            DensityVariant::Exact => 0.5 * abs_nu * vol,
            DensityVariant::DoubledCoefficient => abs_nu * vol,
        };
        Self {
            vol_a: vol * level,
            scale: vol * vol * level,
            abs_log: log_ratio.abs(),
            nu_log: nu * log_ratio,
            sd: vol * (2.0 * t).sqrt(),
            c: abs_nu * vol * (0.5 * t).sqrt(),
            gauss: (2.0 / (std::f64::consts::PI * t)).sqrt(),
            k,
        }
    }

    #[inline]
    fn w(&self, y: f64) -> f64 {
        (self.scale * y + self.abs_log) / self.sd
    }

    #[inline]
    fn at(&self, y: f64) -> f64 {
        let w = self.w(y);
        let c = self.c;
        let envelope = (self.nu_log - w * w - c * c).exp();
        let mut inner = self.gauss * envelope;
        if self.k != 0.0 {
            let lower = if w >= c {
                erfcx(w - c) * envelope
            } else {
                erfc(w - c) * (self.nu_log - 2.0 * w * c).exp()
            };
            let upper = erfcx(w + c) * envelope;
            inner += self.k * (lower - upper);
        }
        self.vol_a * inner.max(0.0)
    }
}

/// Tolerances and truncation rules for the local-time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalTimeQuadrature {
    /// Innermost integral over local-time values.
    pub y: Tolerance,
    /// Integral over price levels.
    pub x: Tolerance,
    /// Integral over calendar time.
    pub t: Tolerance,
    /// Price levels are integrated over `S e^{±n vol sqrt(T)}`.
    pub x_truncation_sd: f64,
    /// The `y` integral stops where the Gaussian argument `w` exceeds
    /// `c + y_envelope`; the neglected tail is below `e^{-y_envelope^2}`.
    pub y_envelope: f64,
    pub variant: DensityVariant,
}

impl Default for LocalTimeQuadrature {
    fn default() -> Self {
        Self {
            y: Tolerance::new(1e-13, 1e-11, 200),
            x: Tolerance::new(1e-11, 1e-10, 400),
            t: Tolerance::new(1e-12, 1e-11, 100),
            x_truncation_sd: 8.0,
            y_envelope: 9.0,
            variant: DensityVariant::Exact,
        }
    }
}

impl LocalTimeQuadrature {
    pub fn validate(&self) -> Result<()> {
        self.y.validate()?;
        self.x.validate()?;
        self.t.validate()?;
        ensure_finite("x_truncation_sd", self.x_truncation_sd)?;
        ensure_finite("y_envelope", self.y_envelope)?;
        if self.x_truncation_sd <= 0.0 || self.y_envelope <= 0.0 {
            return domain("truncation widths must be positive");
        }
        Ok(())
    }

    /// Price interval carrying the mass of the GBM over `[0, horizon]`.
    pub fn x_bounds(&self, market: &MarketParams, horizon: f64) -> (f64, f64) {
        let width = self.x_truncation_sd * market.vol * horizon.sqrt();
        (market.spot * (-width).exp(), market.spot * width.exp())
    }
}

/// `E[L_t(level)]` for the GBM `market`: the first moment of the local-time
/// density, integrated over `y` on `[0, y_max]`.
pub fn gbm_expected_local_time(
    level: f64,
    horizon: f64,
    market: &MarketParams,
    quad: &LocalTimeQuadrature,
) -> Result<f64> {
    market.validate()?;
    check_horizon(horizon)?;
    ensure_finite("level", level)?;
    if level <= 0.0 {
        return domain(format!("level must be positive, got {level}"));
    }
    quad.validate()?;
    expected_local_time_unchecked(level, horizon, market, quad)
}

pub(crate) fn expected_local_time_unchecked(
    level: f64,
    horizon: f64,
    market: &MarketParams,
    quad: &LocalTimeQuadrature,
) -> Result<f64> {
    let nu = market.exponent().nu;
    let d = GbmDensity::new(level, horizon, market, nu, quad.variant);
    let w_max = quad.y_envelope + d.c;
    let y_max = (d.sd * w_max - d.abs_log) / d.scale;
    if y_max <= 0.0 {
        return Ok(0.0);
    }
    let spec = quad.y.on(0.0, y_max);
    let points = [y_max / 16.0, y_max / 8.0, y_max / 4.0, y_max / 2.0];
    let r = try_integrate(|y| Ok(y * d.at(y)), Axis::Y, &spec, &points)?;
    Ok(r.require_converged(Axis::Y)?.value.max(0.0))
}

/// Monte Carlo comparison of the two sides of the Tanaka–Meyer formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TanakaMeyerStats {
    /// Mean of (Tanaka–Meyer local time − ε-occupation local time).
    pub mean: f64,
    pub std_error: f64,
    /// Mean and standard error of the ε-occupation estimate alone.
    pub occupation_mean: f64,
    pub occupation_std_error: f64,
    /// Mean and standard error of the Tanaka–Meyer side alone.
    pub tanaka_mean: f64,
    pub tanaka_std_error: f64,
    pub band: f64,
    pub n_paths: usize,
}

/// Simulates standard Brownian paths from zero and compares, path by path,
///
/// * `2 [(W_t - a)^+ - (-a)^+ - Σ 1{W_s > a} ΔW_s]`, the local time given by
///   the Tanaka–Meyer formula, with
/// * the occupation estimate `(1/2ε) |{s ≤ t : |W_s - a| ≤ ε}|`.
///
/// The band half-width is `ε = sqrt(t / n_steps)`. The occupation estimate
/// is Richardson-extrapolated (`2 O_ε - O_2ε`) with trapezoid time weights,
/// which cancels the O(ε) bias of a plain band when `a` is the start level.
pub fn tanaka_meyer_residual(
    level: f64,
    horizon: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<TanakaMeyerStats> {
    check_horizon(horizon)?;
    ensure_finite("level", level)?;
    if n_paths < 1 || n_steps < 1 {
        return domain("n_paths and n_steps must be at least 1");
    }
    let dt = horizon / n_steps as f64;
    let sq = dt.sqrt();
    let eps = sq;
    let a = level;

    let per_path: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut z = gaussian_stream(seed, p as u64);
            let mut w = 0.0_f64;
            let mut ito = 0.0;
            let mut narrow = 0.0;
            let mut wide = 0.0;
            let mut band = |x: f64, weight: f64| {
                let d = (x - a).abs();
                if d <= eps {
                    narrow += weight;
                }
                if d <= 2.0 * eps {
                    wide += weight;
                }
            };
            band(w, 0.5);
            for j in 0..n_steps {
                let dw = sq * z.next().expect("stream is infinite");
                if w > a {
                    ito += dw;
                }
                w += dw;
                band(w, if j + 1 == n_steps { 0.5 } else { 1.0 });
            }
            let tanaka = 2.0 * ((w - a).max(0.0) - (-a).max(0.0) - ito);
            let occ_narrow = narrow * dt / (2.0 * eps);
            let occ_wide = wide * dt / (4.0 * eps);
            (tanaka, 2.0 * occ_narrow - occ_wide)
        })
        .collect();

    let n = n_paths as f64;
    let mean_se = |xs: &mut dyn Iterator<Item = f64>| {
        let (mut s, mut s2) = (0.0, 0.0);
        for x in xs {
            s += x;
            s2 += x * x;
        }
        let m = s / n;
        let var = if n_paths > 1 {
            ((s2 - n * m * m) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (m, (var / n).sqrt())
    };
    let (mean, std_error) = mean_se(&mut per_path.iter().map(|(t, o)| t - o));
    let (tanaka_mean, tanaka_std_error) = mean_se(&mut per_path.iter().map(|p| p.0));
    let (occupation_mean, occupation_std_error) = mean_se(&mut per_path.iter().map(|p| p.1));
    Ok(TanakaMeyerStats {
        mean,
        std_error,
        occupation_mean,
        occupation_std_error,
        tanaka_mean,
        tanaka_std_error,
        band: eps,
        n_paths,
    })
}
