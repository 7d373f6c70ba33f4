use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::CampaignError;
use crate::da_planner::PlannerParams;
use crate::fleet::FleetParams;
use crate::forecast::{ForecastConfig, SarimaSpec, MIN_TRAINING_DAYS};
use crate::kv::{KvError, KvFile};
use crate::market_data::{generate_synthetic_market, load_market_csv, Field, MarketSeries, SynthConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum MarketSource {
    Csv(PathBuf),
    Synthetic { config: SynthConfig, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastMode {
    Sarima,
    /// Estimates equal the realized data.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegdEstimator {
    /// Hourly mean of the training window.
    Profile,
    Sarima,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub market: MarketSource,
    pub fleet: FleetParams,
    pub planner: PlannerParams,
    pub forecast: ForecastConfig,
    pub forecast_mode: ForecastMode,
    pub regd_estimator: RegdEstimator,
    /// First and last operating day; default to the first day with a full
    /// training window and the last day with data.
    pub first_day: Option<NaiveDate>,
    pub last_day: Option<NaiveDate>,
    pub training_days: usize,
    pub holidays: BTreeSet<NaiveDate>,
    pub output: PathBuf,
    /// Activate every day with no incentive and no energy margin.
    pub base_case: bool,
    /// Fit the forecaster once, at the first working day.
    pub frozen_forecaster: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            market: MarketSource::Synthetic {
                config: SynthConfig::default(),
                seed: 0,
            },
            fleet: FleetParams::default(),
            planner: PlannerParams::default(),
            forecast: ForecastConfig::default(),
            forecast_mode: ForecastMode::Sarima,
            regd_estimator: RegdEstimator::Profile,
            first_day: None,
            last_day: None,
            training_days: 28,
            holidays: BTreeSet::new(),
            output: PathBuf::from("out"),
            base_case: false,
            frozen_forecaster: false,
        }
    }
}

fn parse_date(section: &str, key: &str, raw: &str) -> Result<NaiveDate, KvError> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| KvError::Value {
        section: section.into(),
        key: key.into(),
        value: raw.into(),
    })
}

/// One `YYYY-MM-DD` per line; blank lines and `#` comments are skipped.
pub fn read_holidays(path: &Path) -> Result<BTreeSet<NaiveDate>, CampaignError> {
    let text = std::fs::read_to_string(path).map_err(|source| CampaignError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let d = NaiveDate::parse_from_str(line, "%Y-%m-%d").map_err(|_| {
            CampaignError::Config(format!("{}:{}: bad date `{line}`", path.display(), i + 1))
        })?;
        out.insert(d);
    }
    Ok(out)
}

impl CampaignConfig {
    /// Reads a configuration file. Relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let kv = KvFile::read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_kv(&kv, base)
    }

    pub fn from_kv(kv: &KvFile, base: &Path) -> Result<Self, CampaignError> {
        let d = CampaignConfig::default();
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let source: String = kv.get_or("market", "source", "synthetic".to_string())?;
        let market = match source.as_str() {
            "synthetic" => MarketSource::Synthetic {
                config: SynthConfig::from_kv(kv, "synthetic")?,
                seed: kv.get_or("market", "seed", 0u64)?,
            },
            "csv" => {
                let path: String = kv.require("market", "path")?;
                MarketSource::Csv(resolve(&path))
            }
            other => return Err(CampaignError::Config(format!("[market] source: unknown `{other}`"))),
        };

        let mut forecast = ForecastConfig::default();
        forecast.perf_score = kv.get_or("forecast", "perf_score", forecast.perf_score)?;
        let price: Option<SarimaSpec> = kv.get("forecast", "price_spec")?;
        let regd: Option<SarimaSpec> = kv.get("forecast", "regd_spec")?;
        for (field, spec) in forecast.specs.iter_mut() {
            let group = if matches!(field, Field::RegdUp | Field::RegdDown) {
                regd
            } else {
                price
            };
            if let Some(g) = group {
                *spec = g;
            }
            if let Some(own) = kv.get::<SarimaSpec>("forecast", &format!("{}.spec", field.name()))? {
                *spec = own;
            }
        }
        let mode: String = kv.get_or("forecast", "mode", "sarima".to_string())?;
        let forecast_mode = match mode.as_str() {
            "sarima" => ForecastMode::Sarima,
            "oracle" => ForecastMode::Oracle,
            other => return Err(CampaignError::Config(format!("[forecast] mode: unknown `{other}`"))),
        };
        let regd_name: String = kv.get_or("forecast", "regd_estimator", "profile".to_string())?;
        let regd_estimator = match regd_name.as_str() {
            "profile" => RegdEstimator::Profile,
            "sarima" => RegdEstimator::Sarima,
            other => {
                return Err(CampaignError::Config(format!(
                    "[forecast] regd_estimator: unknown `{other}`"
                )))
            }
        };

        let date = |key: &str| -> Result<Option<NaiveDate>, KvError> {
            kv.raw("campaign", key)
                .map(|raw| parse_date("campaign", key, raw))
                .transpose()
        };
        let holidays = match kv.get::<String>("campaign", "holidays")? {
            Some(p) => read_holidays(&resolve(&p))?,
            None => BTreeSet::new(),
        };
        let output: String = kv.get_or("campaign", "output", "out".to_string())?;
        let config = CampaignConfig {
            market,
            fleet: FleetParams::from_kv(kv, "fleet")?,
            planner: PlannerParams::from_kv(kv, "planner")?,
            forecast,
            forecast_mode,
            regd_estimator,
            first_day: date("first_day")?,
            last_day: date("last_day")?,
            training_days: kv.get_or("campaign", "training_days", d.training_days)?,
            holidays,
            output: resolve(&output),
            base_case: kv.get_or("campaign", "base_case", false)?,
            frozen_forecaster: kv.get_or("campaign", "frozen_forecaster", false)?,
        };
        kv.finish()?;
        Ok(config)
    }

    /// Makes one seed drive both the synthetic market and the fleet.
    pub fn set_seed(&mut self, seed: u64) {
        if let MarketSource::Synthetic { seed: s, .. } = &mut self.market {
            *s = seed;
        }
        self.fleet.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.training_days < MIN_TRAINING_DAYS {
            return Err(CampaignError::Config(format!(
                "training window must cover at least {MIN_TRAINING_DAYS} days"
            )));
        }
        if let (Some(a), Some(b)) = (self.first_day, self.last_day) {
            if a > b {
                return Err(CampaignError::Config("first_day is after last_day".into()));
            }
        }
        self.fleet.validate()?;
        self.planner
            .validate()
            .map_err(|e| CampaignError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.forecast.perf_score) {
            return Err(CampaignError::Config("perf_score must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn load_market(&self) -> Result<MarketSeries, CampaignError> {
        Ok(match &self.market {
            MarketSource::Csv(path) => load_market_csv(path)?,
            MarketSource::Synthetic { config, seed } => generate_synthetic_market(config, *seed),
        })
    }

    /// Weekdays in the configured range that are not holidays. The range
    /// defaults to every day with a full training window before its
    /// decision time and operating data.
    pub fn working_days(&self, market: &MarketSeries) -> Vec<NaiveDate> {
        let earliest = market.start().date() + Duration::days(self.training_days as i64 + 1);
        let latest = market.end().date();
        let first = self.first_day.unwrap_or(earliest);
        let last = self.last_day.unwrap_or(latest);
        first
            .iter_days()
            .take_while(|d| *d <= last)
            .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
            .filter(|d| !self.holidays.contains(d))
            .collect()
    }
}
