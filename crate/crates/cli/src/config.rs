//! Run configuration: a JSON document whose fields all have defaults.

use std::path::{Path, PathBuf};

use ccr_core::exposure::{BscMode, BucketGrid, TimeAxis};
use ccr_core::local_time::LocalTimeQuadrature;
use ccr_core::market_model::MarketParams;
use ccr_core::pricing::{AccumulatorContract, ForwardSpot, Method};
use ccr_core::simulation::{Measure, SimulationConfig};
use serde::{Deserialize, Serialize};

use crate::error::{config_error, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Fv,
    #[default]
    Epe,
    Timing,
    Workload,
    Curves,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Fv => "fv",
            TableKind::Epe => "epe",
            TableKind::Timing => "timing",
            TableKind::Workload => "workload",
            TableKind::Curves => "curves",
        }
    }
}

/// Parameter lists; rows run over rates, then strikes, then vols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub strikes: Vec<f64>,
    pub vols: Vec<f64>,
    pub rates: Vec<f64>,
}

impl ParamGrid {
    pub fn fair_value_default() -> Self {
        Self {
            strikes: vec![0.9, 1.0],
            vols: vec![0.15, 0.25],
            rates: vec![0.01, 0.02],
        }
    }

    pub fn exposure_default() -> Self {
        Self {
            strikes: vec![4.78, 3.75, 2.98],
            vols: vec![0.15, 0.2, 0.3],
            rates: vec![0.01, 0.02],
        }
    }

    pub fn timing_default() -> Self {
        Self {
            strikes: vec![4.78],
            vols: vec![0.15],
            rates: vec![0.01],
        }
    }

    /// `(strike, vol, rate)` in row order.
    pub fn triplets(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &r in &self.rates {
            for &k in &self.strikes {
                for &v in &self.vols {
                    out.push((k, v, r));
                }
            }
        }
        out
    }
}

/// Contract terms shared by every row; the strike comes from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContractTerms {
    pub gearing: f64,
    pub quantity: f64,
    pub maturity: f64,
    pub n_fixings: usize,
}

impl Default for ContractTerms {
    fn default() -> Self {
        Self {
            gearing: 2.0,
            quantity: 1.0,
            maturity: 1.0,
            n_fixings: 250,
        }
    }
}

/// Time averaging of the deterministic exposure routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EpeAxis {
    #[default]
    Continuous,
    Buckets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    pub warmup: usize,
    pub repetitions: usize,
    /// Paths per simulated route; the run's `sim.n_paths` when absent.
    pub n_paths: Option<usize>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            warmup: 1,
            repetitions: 5,
            n_paths: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadConfig {
    pub deals: u64,
    pub sims: u64,
    pub steps: u64,
    pub backups: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            deals: 10_000,
            sims: 2000,
            steps: 20,
            backups: 13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveConfig {
    pub strike: f64,
    pub rate: f64,
    pub vol_start: f64,
    pub vol_end: f64,
    pub vol_step: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            strike: 3.75,
            rate: 0.01,
            vol_start: 0.10,
            vol_end: 0.30,
            vol_step: 0.01,
        }
    }
}

impl CurveConfig {
    /// Sweep points, rounded to ten decimals so that e.g. 0.15 is exact.
    pub fn vols(&self) -> Result<Vec<f64>> {
        let ok = [self.vol_start, self.vol_end, self.vol_step]
            .iter()
            .all(|v| v.is_finite());
        if !ok || self.vol_start <= 0.0 || self.vol_end < self.vol_start {
            return config_error("curve sweep needs 0 < vol_start <= vol_end");
        }
        if self.vol_end == self.vol_start {
            return Ok(vec![self.vol_start]);
        }
        if self.vol_step <= 0.0 {
            return config_error("vol_step must be positive");
        }
        let n = ((self.vol_end - self.vol_start) / self.vol_step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((self.vol_start + i as f64 * self.vol_step) * 1e10).round() / 1e10)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub table: TableKind,
    pub methods: Vec<Method>,
    /// Spot price; 1 for the fair-value table and 5.7 otherwise when absent.
    pub spot: Option<f64>,
    /// Real-world drift, used when `sim.measure` is `real_world`.
    pub drift: Option<f64>,
    /// Parameter lists; a per-table default when absent.
    pub grid: Option<ParamGrid>,
    pub contract: ContractTerms,
    pub sim: SimulationConfig,
    pub quad: LocalTimeQuadrature,
    /// Fine fixings per original fixing for the continuous route.
    pub fixings_per_day: usize,
    /// Equally spaced exposure buckets over the contract life.
    pub buckets: usize,
    /// Value unfixed dates at the inception spot instead of at the
    /// simulated spot.
    pub inception_spot: bool,
    pub epe_axis: EpeAxis,
    pub bsc_mode: BscMode,
    pub timing: TimingConfig,
    pub workload: WorkloadConfig,
    pub curves: CurveConfig,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            table: TableKind::Epe,
            methods: Method::ALL.to_vec(),
            spot: None,
            drift: None,
            grid: None,
            contract: ContractTerms::default(),
            sim: SimulationConfig::default(),
            quad: LocalTimeQuadrature::default(),
            fixings_per_day: 40,
            buckets: 10,
            inception_spot: false,
            epe_axis: EpeAxis::Continuous,
            bsc_mode: BscMode::Expected,
            timing: TimingConfig::default(),
            workload: WorkloadConfig::default(),
            curves: CurveConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn for_table(table: TableKind) -> Self {
        Self {
            table,
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn spot(&self) -> f64 {
        self.spot.unwrap_or(match self.table {
            TableKind::Fv => 1.0,
            _ => 5.7,
        })
    }

    pub fn grid(&self) -> ParamGrid {
        self.grid.clone().unwrap_or_else(|| match self.table {
            TableKind::Fv => ParamGrid::fair_value_default(),
            TableKind::Timing => ParamGrid::timing_default(),
            _ => ParamGrid::exposure_default(),
        })
    }

    pub fn forward_spot(&self) -> ForwardSpot {
        if self.inception_spot {
            ForwardSpot::Initial
        } else {
            ForwardSpot::Path
        }
    }

    pub fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub fn market(&self, rate: f64, vol: f64) -> Result<MarketParams> {
        let drift = match self.sim.measure {
            Measure::RealWorld => self.drift.unwrap_or(rate),
            Measure::RiskNeutral => rate,
        };
        Ok(MarketParams::new(self.spot(), rate, drift, vol)?)
    }

    pub fn contract(&self, strike: f64) -> Result<AccumulatorContract> {
        let c = AccumulatorContract {
            strike,
            gearing: self.contract.gearing,
            quantity: self.contract.quantity,
            maturity: self.contract.maturity,
            n_fixings: self.contract.n_fixings,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn bucket_grid(&self) -> Result<BucketGrid> {
        Ok(BucketGrid::uniform(self.buckets, self.contract.maturity)?)
    }

    pub fn time_axis(&self) -> Result<TimeAxis> {
        Ok(match self.epe_axis {
            EpeAxis::Continuous => TimeAxis::Continuous,
            EpeAxis::Buckets => TimeAxis::Buckets(self.bucket_grid()?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty()
            && matches!(
                self.table,
                TableKind::Fv | TableKind::Epe | TableKind::Timing
            )
        {
            return config_error("method set is empty");
        }
        let spot = self.spot();
        if !(spot.is_finite() && spot > 0.0) {
            return config_error(format!("spot must be positive, got {spot}"));
        }
        let grid = self.grid();
        let values = grid.strikes.iter().chain(&grid.vols).chain(&grid.rates);
        if let Some(bad) = values.clone().find(|v| !v.is_finite()) {
            return config_error(format!("grid value {bad} is not finite"));
        }
        if grid.strikes.iter().chain(&grid.vols).any(|v| *v <= 0.0) {
            return config_error("strikes and vols must be positive");
        }
        if self.fixings_per_day < 1 {
            return config_error("fixings_per_day must be at least 1");
        }
        if self.buckets < 1 {
            return config_error("buckets must be at least 1");
        }
        if self.table == TableKind::Timing {
            if self.timing.warmup < 1 {
                return config_error("timing needs at least one warm-up iteration");
            }
            if self.timing.repetitions < 1 {
                return config_error("timing needs at least one repetition");
            }
        }
        self.sim.validate()?;
        self.quad.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.spot(), 5.7);
        assert_eq!(c.grid().triplets().len(), 18);
    }

    #[test]
    fn table_defaults() {
        let fv = RunConfig::for_table(TableKind::Fv);
        assert_eq!(fv.spot(), 1.0);
        assert_eq!(fv.grid().triplets()[0], (0.9, 0.15, 0.01));
        assert_eq!(
            RunConfig::for_table(TableKind::Timing)
                .grid()
                .triplets()
                .len(),
            1
        );
    }

    #[test]
    fn row_order_runs_rates_then_strikes_then_vols() {
        let t = ParamGrid::exposure_default().triplets();
        assert_eq!(t[0], (4.78, 0.15, 0.01));
        assert_eq!(t[2], (4.78, 0.3, 0.01));
        assert_eq!(t[3], (3.75, 0.15, 0.01));
        assert_eq!(t[9], (4.78, 0.15, 0.02));
    }

    #[test]
    fn partial_document_and_unknown_method() {
        let c = RunConfig::from_json(r#"{"table": "fv", "methods": ["lt"], "sim": {"seed": 3}}"#)
            .unwrap();
        assert_eq!(c.methods, vec![Method::Lt]);
        assert_eq!(c.sim.seed, 3);
        assert_eq!(c.sim.n_paths, 2000);
        assert!(RunConfig::from_json(r#"{"methods": ["mc"]}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.methods.clear();
        assert!(c.validate().is_err());
        let c = RunConfig {
            spot: Some(-1.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            table: TableKind::Timing,
            timing: TimingConfig {
                warmup: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_points() {
        let v = CurveConfig::default().vols().unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[5], 0.15);
        assert_eq!(v[10], 0.2);
        assert_eq!(v[20], 0.3);
        let single = CurveConfig {
            vol_start: 0.2,
            vol_end: 0.2,
            ..Default::default()
        };
        assert_eq!(single.vols().unwrap(), vec![0.2]);
    }
}
