//! Seasonal ARIMA fitting and market forecasts.

mod nelder_mead;
mod sarima;
mod spec;

pub use sarima::{
    apply_differencing, fit_sarima, forecast_steps, integrate, FitError, ForecastStepError,
    SarimaModel,
};
pub use spec::{SarimaSpec, SpecError};

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDateTime, Timelike};

use crate::market_data::{Field, MarketHour, MarketSeries, PreprocessParams};

/// Minimum training window, in days.
pub const MIN_TRAINING_DAYS: usize = 14;

/// Columns that get a fitted model. The performance score is a configured constant.
pub const FORECAST_FIELDS: [Field; 6] = [
    Field::Lmp,
    Field::Rmccp,
    Field::Rmpcp,
    Field::MileageRatio,
    Field::RegdUp,
    Field::RegdDown,
];

#[derive(Debug, thiserror::Error)]
pub enum ForecastError {
    #[error("training window has {hours} hours, need at least {needed}")]
    ShortTraining { hours: usize, needed: usize },
    #[error("no model configured for {0}")]
    MissingSpec(&'static str),
    #[error("forecast history is too short: {0}")]
    Step(#[from] ForecastStepError),
    #[error("performance score estimate {0} outside [0, 1]")]
    PerfScore(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastConfig {
    pub specs: BTreeMap<Field, SarimaSpec>,
    /// Expected own performance score used for every hour.
    pub perf_score: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let specs = FORECAST_FIELDS
            .iter()
            .map(|&f| {
                let spec = match f {
                    Field::RegdUp | Field::RegdDown => SarimaSpec::REGD,
                    _ => SarimaSpec::PRICE,
                };
                (f, spec)
            })
            .collect();
        ForecastConfig {
            specs,
            perf_score: 0.95,
        }
    }
}

/// Point estimates of one hour's market quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyEstimate {
    pub timestamp: NaiveDateTime,
    pub lmp: f64,
    pub rmccp: f64,
    pub rmpcp: f64,
    pub mileage_ratio: f64,
    pub regd_up: f64,
    pub regd_down: f64,
    pub perf_score: f64,
}

impl HourlyEstimate {
    /// Expected regulation revenue per MW offered,
    /// `(capability + performance * mileage) * score`.
    pub fn regulation_price(&self) -> f64 {
        (self.rmccp + self.rmpcp * self.mileage_ratio) * self.perf_score
    }

    fn set(&mut self, field: Field, v: f64) {
        match field {
            Field::Lmp => self.lmp = v,
            Field::Rmccp => self.rmccp = v,
            Field::Rmpcp => self.rmpcp = v,
            Field::MileageRatio => self.mileage_ratio = v,
            Field::RegdUp => self.regd_up = v,
            Field::RegdDown => self.regd_down = v,
            Field::PerfScore => self.perf_score = v,
        }
    }

    /// Clamps non-negative columns and projects the RegD pair onto the simplex.
    fn clamp(&mut self) {
        self.rmccp = self.rmccp.max(0.0);
        self.rmpcp = self.rmpcp.max(0.0);
        self.mileage_ratio = self.mileage_ratio.max(0.0);
        self.regd_up = self.regd_up.clamp(0.0, 1.0);
        self.regd_down = self.regd_down.clamp(0.0, 1.0);
        let total = self.regd_up + self.regd_down;
        if total > 1.0 {
            self.regd_up /= total;
            self.regd_down /= total;
        }
        self.perf_score = self.perf_score.clamp(0.0, 1.0);
    }
}

impl From<&MarketHour> for HourlyEstimate {
    fn from(h: &MarketHour) -> Self {
        HourlyEstimate {
            timestamp: h.timestamp,
            lmp: h.lmp,
            rmccp: h.rmccp,
            rmpcp: h.rmpcp,
            mileage_ratio: h.mileage_ratio,
            regd_up: h.regd_up,
            regd_down: h.regd_down,
            perf_score: h.perf_score,
        }
    }
}

/// Forecasts for consecutive hours plus the columns that fell back to the
/// seasonal-naive rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    pub hours: Vec<HourlyEstimate>,
    pub fallbacks: Vec<Field>,
}

impl ForecastSeries {
    pub fn get(&self, ts: NaiveDateTime) -> Option<&HourlyEstimate> {
        self.hours.iter().find(|h| h.timestamp == ts)
    }
}

#[derive(Debug, Clone)]
struct SeriesModel {
    field: Field,
    prep: PreprocessParams,
    fit: Result<SarimaModel, FitError>,
}

/// Models fitted once on a training window and reused for later forecasts.
#[derive(Debug, Clone)]
pub struct MarketForecaster {
    models: Vec<SeriesModel>,
    perf_score: f64,
    window: usize,
}

impl MarketForecaster {
    /// Fits every configured column on `training`, which must be contiguous.
    /// Fit failures are kept and turn into seasonal-naive forecasts later.
    pub fn fit(training: &[MarketHour], config: &ForecastConfig) -> Result<Self, ForecastError> {
        let needed = MIN_TRAINING_DAYS * 24;
        if training.len() < needed {
            return Err(ForecastError::ShortTraining {
                hours: training.len(),
                needed,
            });
        }
        if !(0.0..=1.0).contains(&config.perf_score) {
            return Err(ForecastError::PerfScore(config.perf_score));
        }
        let mut models = Vec::with_capacity(FORECAST_FIELDS.len());
        for field in FORECAST_FIELDS {
            let spec = config
                .specs
                .get(&field)
                .ok_or(ForecastError::MissingSpec(field.name()))?;
            let raw: Vec<f64> = training.iter().map(|h| h.get(field)).collect();
            let prep = PreprocessParams::fit(&raw);
            let transformed = prep.transform(&raw);
            models.push(SeriesModel {
                field,
                prep,
                fit: fit_sarima(&transformed, spec),
            });
        }
        Ok(MarketForecaster {
            models,
            perf_score: config.perf_score,
            window: training.len(),
        })
    }

    /// Fitted model of a column, with the preprocessing applied before fitting.
    pub fn model(&self, field: Field) -> Option<(&PreprocessParams, &Result<SarimaModel, FitError>)> {
        self.models
            .iter()
            .find(|m| m.field == field)
            .map(|m| (&m.prep, &m.fit))
    }

    /// Columns whose fit failed.
    pub fn failed_fits(&self) -> Vec<(Field, &FitError)> {
        self.models
            .iter()
            .filter_map(|m| m.fit.as_ref().err().map(|e| (m.field, e)))
            .collect()
    }

    /// Forecasts the `horizon` hours following the last hour of `history`.
    /// Only the most recent training-window's worth of history is used.
    pub fn forecast(
        &self,
        history: &[MarketHour],
        horizon: usize,
    ) -> Result<ForecastSeries, ForecastError> {
        if horizon == 0 {
            return Err(ForecastStepError::Horizon.into());
        }
        if history.len() < 24 {
            return Err(ForecastStepError::ShortHistory {
                needed: 24,
                got: history.len(),
            }
            .into());
        }
        let history = &history[history.len().saturating_sub(self.window)..];
        let last = history[history.len() - 1].timestamp;
        let mut hours: Vec<HourlyEstimate> = (1..=horizon)
            .map(|h| HourlyEstimate {
                timestamp: last + Duration::hours(h as i64),
                lmp: 0.0,
                rmccp: 0.0,
                rmpcp: 0.0,
                mileage_ratio: 0.0,
                regd_up: 0.0,
                regd_down: 0.0,
                perf_score: self.perf_score,
            })
            .collect();
        let mut fallbacks = Vec::new();
        for m in &self.models {
            let raw: Vec<f64> = history.iter().map(|h| h.get(m.field)).collect();
            let values = match model_forecast(m, &raw, horizon) {
                Some(v) => v,
                None => {
                    fallbacks.push(m.field);
                    seasonal_naive(&raw, horizon)
                }
            };
            for (est, v) in hours.iter_mut().zip(values) {
                est.set(m.field, v);
            }
        }
        hours.iter_mut().for_each(HourlyEstimate::clamp);
        Ok(ForecastSeries { hours, fallbacks })
    }
}

fn model_forecast(m: &SeriesModel, raw: &[f64], horizon: usize) -> Option<Vec<f64>> {
    let model = m.fit.as_ref().ok()?;
    let transformed = m.prep.transform(raw);
    let f = forecast_steps(model, &transformed, horizon).ok()?;
    let out = m.prep.inverse(&f);
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Same hour of the most recent observed day, repeated.
pub fn seasonal_naive(history: &[f64], horizon: usize) -> Vec<f64> {
    let base = history.len() - 24;
    (0..horizon).map(|h| history[base + h % 24]).collect()
}

/// Fits on `training` and forecasts the `horizon` hours after it.
pub fn forecast_market(
    training: &MarketSeries,
    config: &ForecastConfig,
    horizon: usize,
) -> Result<ForecastSeries, ForecastError> {
    let fc = MarketForecaster::fit(training.hours(), config)?;
    let mut out = fc.forecast(training.hours(), horizon)?;
    for (field, _) in fc.failed_fits() {
        if !out.fallbacks.contains(&field) {
            out.fallbacks.push(field);
        }
    }
    Ok(out)
}

/// Mean `(regd_up, regd_down)` for each hour of the day over `hours`.
/// Hours of day that never occur get the overall mean.
pub fn regd_hourly_profile(hours: &[MarketHour]) -> [(f64, f64); 24] {
    let mut sums = [(0.0, 0.0, 0usize); 24];
    for h in hours {
        let s = &mut sums[h.timestamp.hour() as usize];
        s.0 += h.regd_up;
        s.1 += h.regd_down;
        s.2 += 1;
    }
    let n = hours.len().max(1) as f64;
    let overall = (
        hours.iter().map(|h| h.regd_up).sum::<f64>() / n,
        hours.iter().map(|h| h.regd_down).sum::<f64>() / n,
    );
    let mut out = [overall; 24];
    for (o, s) in out.iter_mut().zip(sums) {
        if s.2 > 0 {
            *o = (s.0 / s.2 as f64, s.1 / s.2 as f64);
        }
    }
    out
}

/// Estimates equal to the realized values with a perfect performance score.
pub fn oracle_estimates(actual: &[MarketHour]) -> Vec<HourlyEstimate> {
    actual
        .iter()
        .map(|h| HourlyEstimate {
            perf_score: 1.0,
            ..HourlyEstimate::from(h)
        })
        .collect()
}
