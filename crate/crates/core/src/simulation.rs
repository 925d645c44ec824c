//! Reproducible geometric Brownian motion paths on a uniform fixing grid.
//!
//! Every path `p` draws from its own ChaCha8 stream (key from the seed,
//! stream id `p`, or `p / 2` for antithetic pairs), so a path does not depend
//! on how many threads generated the set or in which order.

use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Result};
use crate::market_model::{fast_quantile, MarketParams};

/// Which drift the simulated paths use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Drift equal to the risk-free rate.
    #[default]
    RiskNeutral,
    /// Drift equal to `MarketParams::drift`.
    RealWorld,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub n_paths: usize,
    /// Fixing dates per unit of `horizon`-long simulation (business days).
    pub n_days: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Length of the simulated window in years.
    pub horizon: f64,
    pub measure: Measure,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_paths: 2000,
            n_days: 250,
            seed: 20_240_601,
            antithetic: false,
            horizon: 1.0,
            measure: Measure::RiskNeutral,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return domain("n_paths must be at least 1");
        }
        if self.n_days < 1 {
            return domain("n_days must be at least 1");
        }
        ensure_finite("horizon", self.horizon)?;
        if self.horizon <= 0.0 {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        Ok(())
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::uniform(self.n_days, self.horizon)
    }
}

/// Fixing dates `t_i = i * horizon / n`, `i = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    pub step: f64,
}

impl TimeGrid {
    pub fn uniform(n: usize, horizon: f64) -> Self {
        let step = horizon / n as f64;
        let times = (1..=n).map(|i| i as f64 * horizon / n as f64).collect();
        Self { times, step }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Simulated prices, one row per path and one column per fixing date.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub grid: TimeGrid,
    pub n_paths: usize,
    values: Vec<f64>,
}

impl PathSet {
    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[p * n..(p + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes one CSV row per path; the header lists the fixing dates.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["path".to_string()];
        header.extend(self.grid.times.iter().map(|t| format!("{t:.10}")));
        w.write_record(&header)?;
        for (p, row) in self.paths().enumerate() {
            let mut rec = vec![p.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.10}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform on the open unit interval from the top 53 bits of `x`.
#[inline]
fn open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draws from an isolated stream, by inverse transform.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl Iterator for GaussianStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(fast_quantile(open_unit(self.rng.next_u64())))
    }
}

/// Stream `substream` of the generator keyed by `seed`.
pub fn gaussian_stream(seed: u64, substream: u64) -> GaussianStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    GaussianStream { rng }
}

/// Fills `out` with path `p` of the set described by `config`.
pub fn simulate_path(market: &MarketParams, config: &SimulationConfig, p: usize, out: &mut [f64]) {
    let dt = config.horizon / config.n_days as f64;
    let mu = match config.measure {
        Measure::RiskNeutral => market.rate,
        Measure::RealWorld => market.drift,
    };
    let v = market.vol;
    let drift = (mu - 0.5 * v * v) * dt;
    let diffusion = v * dt.sqrt();
    let (stream, sign) = if config.antithetic {
        ((p / 2) as u64, if p.is_multiple_of(2) { 1.0 } else { -1.0 })
    } else {
        (p as u64, 1.0)
    };
    let mut z = gaussian_stream(config.seed, stream);
    let mut log_s = market.spot.ln();
    for slot in out.iter_mut().take(config.n_days) {
        let dw = sign * z.next().expect("stream is infinite");
        log_s += drift + diffusion * dw;
        *slot = log_s.exp();
    }
}

/// Simulates `config.n_paths` paths with exact log-normal stepping.
pub fn simulate_paths(market: &MarketParams, config: &SimulationConfig) -> Result<PathSet> {
    market.validate()?;
    config.validate()?;
    let n = config.n_days;
    let len = config
        .n_paths
        .checked_mul(n)
        .ok_or_else(|| crate::Error::Overflow("path matrix size".into()))?;
    let mut values = vec![0.0; len];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(p, row)| simulate_path(market, config, p, row));
    Ok(PathSet {
        grid: config.grid(),
        n_paths: config.n_paths,
        values,
    })
}
