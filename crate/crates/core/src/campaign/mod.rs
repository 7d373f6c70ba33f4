//! Multi-day backtest: plan each working day at 16:00 the day before, operate
//! activated days hour by hour against realized data, and report.

mod config;
mod report;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

use crate::da_planner::{plan_day, solve_interval, DaPlan, PlanError, PlannerParams};
use crate::fleet::{aggregate_fleet, generate_fleet, FleetError, FleetResponse};
use crate::forecast::{oracle_estimates, regd_hourly_profile, ForecastError, HourlyEstimate, MarketForecaster};
use crate::kv::KvError;
use crate::market_data::{MarketDataError, MarketHour, MarketSeries};
use crate::rt_operator::{run_day, DayResult, OracleEstimator, RtError};

pub use config::{read_holidays, CampaignConfig, ForecastMode, MarketSource, RegdEstimator};
pub use report::{
    emit_report, write_report_csv, CampaignReport, DayRow, Summary, HOURLY_OFFERS_HEADER, PERFORMANCE_HEADER, REPORT_HEADER,
};

/// Hour of the previous day at which incentives are broadcast.
pub const DECISION_HOUR: u32 = 16;

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("market data: {0}")]
    Market(#[from] MarketDataError),
    #[error("market data: {0}")]
    Data(String),
    #[error("forecast: {0}")]
    Forecast(#[from] ForecastError),
    #[error("planning {date}: {source}")]
    Plan { date: NaiveDate, source: PlanError },
    #[error("operating {date}: {source}")]
    Rt { date: NaiveDate, source: RtError },
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Loaded inputs of a campaign.
pub struct Campaign {
    pub config: CampaignConfig,
    pub market: MarketSeries,
    pub fleet: FleetResponse,
    frozen: Option<MarketForecaster>,
}

fn at(date: NaiveDate, hour: u32) -> NaiveDateTime {
    date.and_time(NaiveTime::from_hms_opt(hour, 0, 0).expect("valid hour"))
}

impl Campaign {
    pub fn new(config: CampaignConfig) -> Result<Self, CampaignError> {
        config.validate()?;
        let market = config.load_market()?;
        let responses = generate_fleet(&config.fleet)?;
        let fleet = aggregate_fleet(&responses, &config.fleet);
        Ok(Campaign {
            config,
            market,
            fleet,
            frozen: None,
        })
    }

    /// Planner parameters in effect; the base case drops the margin.
    pub fn planner(&self) -> PlannerParams {
        let mut p = self.config.planner.clone();
        if self.config.base_case {
            p.lambda = 0.0;
        }
        p
    }

    /// Working days of the campaign, in order.
    pub fn days(&self) -> Vec<NaiveDate> {
        self.config.working_days(&self.market)
    }

    pub fn decision_time(date: NaiveDate) -> NaiveDateTime {
        at(date - Duration::days(1), DECISION_HOUR)
    }

    /// Training window ending at `end` inclusive.
    pub fn training_window(&self, end: NaiveDateTime) -> Result<&[MarketHour], CampaignError> {
        let hours = self.config.training_days * 24;
        let from = end - Duration::hours(hours as i64 - 1);
        let w = self.market.window(from, end + Duration::hours(1));
        if w.len() < hours {
            return Err(CampaignError::Config(format!(
                "training window ending {end} needs {hours} hours of data, found {}",
                w.len()
            )));
        }
        Ok(w)
    }

    fn operating_hours(&self, date: NaiveDate) -> Result<&[MarketHour], CampaignError> {
        let p = &self.config.planner;
        let w = self
            .market
            .window(at(date, p.first_hour), at(date, p.last_hour) + Duration::hours(1));
        if w.len() != p.num_hours() {
            return Err(CampaignError::Data(format!("{date}: operating hours missing from the market data")));
        }
        Ok(w)
    }

    /// Models used for `date`: refitted on the window ending at the decision
    /// time, or fitted once at the first working day when frozen.
    pub fn forecaster(&mut self, date: NaiveDate) -> Result<Option<MarketForecaster>, CampaignError> {
        if self.config.forecast_mode == ForecastMode::Oracle {
            return Ok(None);
        }
        if self.config.frozen_forecaster {
            if self.frozen.is_none() {
                let first = *self
                    .days()
                    .first()
                    .ok_or_else(|| CampaignError::Config("campaign has no working days".into()))?;
                let training = self.training_window(Self::decision_time(first))?;
                self.frozen = Some(MarketForecaster::fit(training, &self.config.forecast)?);
            }
            return Ok(self.frozen.clone());
        }
        let training = self.training_window(Self::decision_time(date))?;
        Ok(Some(MarketForecaster::fit(training, &self.config.forecast)?))
    }

    /// Replaces the RegD columns with the hourly mean profile of the window
    /// ending at the decision time, if so configured.
    fn apply_regd_profile(&self, date: NaiveDate, est: &mut [HourlyEstimate]) -> Result<(), CampaignError> {
        if self.config.regd_estimator == RegdEstimator::Profile {
            let profile = regd_hourly_profile(self.training_window(Self::decision_time(date))?);
            for e in est {
                let (up, down) = profile[e.timestamp.hour() as usize];
                e.regd_up = up;
                e.regd_down = down;
            }
        }
        Ok(())
    }

    /// Day-ahead estimates of the operating hours of `date`, from the
    /// 27-hour forecast issued at the decision time.
    pub fn da_estimates(
        &self,
        date: NaiveDate,
        forecaster: Option<&MarketForecaster>,
    ) -> Result<Vec<HourlyEstimate>, CampaignError> {
        let p = &self.config.planner;
        let Some(fc) = forecaster else {
            return Ok(oracle_estimates(self.operating_hours(date)?));
        };
        let decision = Self::decision_time(date);
        let history = self.training_window(decision)?;
        let horizon = (at(date, p.last_hour) - decision).num_hours() as usize;
        let forecast = fc.forecast(history, horizon)?;
        let first = at(date, p.first_hour);
        let mut est: Vec<HourlyEstimate> = forecast.hours.into_iter().filter(|h| h.timestamp >= first).collect();
        self.apply_regd_profile(date, &mut est)?;
        Ok(est)
    }

    /// Day-ahead decision for `date`.
    pub fn plan(&self, date: NaiveDate, forecaster: Option<&MarketForecaster>) -> Result<DaPlan, CampaignError> {
        let est = self.da_estimates(date, forecaster)?;
        let params = self.planner();
        let plan_err = |source| CampaignError::Plan { date, source };
        if !self.config.base_case {
            return plan_day(&self.fleet, &est, &params).map_err(plan_err);
        }
        let sol = solve_interval(&self.fleet, 0, &est, &params)
            .map_err(plan_err)?
            .ok_or(CampaignError::Plan {
                date,
                source: PlanError::Infeasible { interval: 0 },
            })?;
        Ok(DaPlan {
            activate: true,
            interval: 0,
            incentive: 0.0,
            fixed_reward: params.fixed_reward,
            credit_energy: sol.credit_energy,
            credit_regulation: sol.credit_regulation,
            expected_profit: sol.credit() - params.fixed_reward,
            schedule: sol.schedule,
            infeasible_intervals: Vec::new(),
        })
    }

    /// Operates `date` under `plan`, re-forecasting the remaining hours
    /// each hour from data before that hour.
    pub fn operate(
        &self,
        date: NaiveDate,
        plan: &DaPlan,
        forecaster: Option<&MarketForecaster>,
    ) -> Result<DayResult, CampaignError> {
        let params = self.planner();
        let actual = self.operating_hours(date)?;
        let hours = self
            .fleet
            .intervals
            .get(plan.interval)
            .ok_or_else(|| CampaignError::Config(format!("plan interval {} not in fleet", plan.interval)))?;
        let reward = plan.fixed_reward + plan.incentive;
        let rt_err = |source| CampaignError::Rt { date, source };
        let (power, capacity) = (self.fleet.ev_power_mw(), self.fleet.ev_capacity_mwh());
        match forecaster {
            None => {
                let mut oracle = OracleEstimator {
                    actual,
                    first_hour: params.first_hour,
                };
                run_day(hours, power, capacity, actual, &mut oracle, reward, &params).map_err(rt_err)
            }
            Some(fc) => {
                let mut estimator = |hour: u32, count: usize| -> Result<Vec<HourlyEstimate>, String> {
                    let history = self.training_window(at(date, hour) - Duration::hours(1)).map_err(|e| e.to_string())?;
                    let mut est = fc.forecast(history, count).map_err(|e| e.to_string())?.hours;
                    self.apply_regd_profile(date, &mut est).map_err(|e| e.to_string())?;
                    Ok(est)
                };
                run_day(hours, power, capacity, actual, &mut estimator, reward, &params).map_err(rt_err)
            }
        }
    }

    /// Plans and, when activated, operates every working day.
    pub fn run(&mut self) -> Result<CampaignReport, CampaignError> {
        let mut report = CampaignReport::default();
        for date in self.days() {
            let fc = self.forecaster(date)?;
            let plan = self.plan(date, fc.as_ref())?;
            let result = if plan.activate {
                Some(self.operate(date, &plan, fc.as_ref())?)
            } else {
                None
            };
            report.push(date, plan, result);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests;
