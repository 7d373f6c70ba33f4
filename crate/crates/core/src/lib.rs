//! Incentive-based EV aggregator: day-ahead incentive planning, real-time
//! bidding and settlement in energy and regulation markets, driven by
//! seasonal ARIMA forecasts of hourly market data.

pub mod fleet;
pub mod da_planner;
pub mod forecast;
pub mod kv;
pub mod market_data;
pub mod campaign;
pub mod rt_operator;
