//! Real-time operation: each hour re-solve the remaining day, bid the first
//! hour, then settle it against the realized regulation signal.

use std::io::Write;

use evagg_optim::SolveError;

use crate::da_planner::{build_energy_model, solve_energy_model, EnergyModel, Horizon, PlanError, PlannerParams};
use crate::fleet::FleetHours;
use crate::forecast::HourlyEstimate;
use crate::market_data::MarketHour;

/// Tolerance of the settlement energy checks, MWh.
pub const SETTLE_TOL: f64 = 1e-9;
/// Below this the net regulation energy per MW is treated as zero.
const DEGENERATE_DENOMINATOR: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum RtError {
    #[error("regulation offer must be non-negative, got {0}")]
    NegativeOffer(f64),
    #[error("hour {hour}: real-time model infeasible ({state})")]
    Infeasible { hour: u32, state: String },
    #[error("hour {hour}: {source}")]
    Solver { hour: u32, source: SolveError },
    #[error("expected {expected} hourly records, got {got}")]
    Length { expected: usize, got: usize },
    #[error("hour {hour}: estimator failed: {msg}")]
    Estimator { hour: u32, msg: String },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// What the aggregator carries into hour `hour`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatorState {
    pub hour: u32,
    /// Energy at the end of the previous hour, MWh.
    pub energy: f64,
    /// Energy handed to EVs departing during `hour`, MWh.
    pub committed_departure: f64,
}

/// Binding offers for one hour, MW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourBids {
    pub hour: u32,
    pub p_ch: f64,
    pub p_dis: f64,
    pub p_reg: f64,
    pub charging: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourSettlement {
    pub bids: HourBids,
    pub regd_up: f64,
    pub regd_down: f64,
    /// Energy had every offer been followed exactly.
    pub provisional_energy: f64,
    /// Regulation capability not delivered, MW.
    pub delta_p_reg: f64,
    /// Set when the energy error needed more than the whole offer.
    pub clamped: bool,
    pub rho: f64,
    pub credit_energy: f64,
    pub credit_regulation: f64,
    /// Realized energy at the end of the hour.
    pub energy: f64,
    /// Departure energy committed for the next hour.
    pub next_departure: f64,
    /// Departure demand of the next hour.
    pub next_departure_demand: f64,
    pub e_max: f64,
}

impl HourSettlement {
    pub fn hour(&self) -> u32 {
        self.bids.hour
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub settlements: Vec<HourSettlement>,
    pub credit_energy: f64,
    pub credit_regulation: f64,
    /// Fixed reward plus incentive paid to the fleet.
    pub reward: f64,
    pub profit: f64,
    pub avg_rho: f64,
}

impl DayResult {
    fn from_settlements(settlements: Vec<HourSettlement>, reward: f64) -> Self {
        let credit_energy = settlements.iter().map(|s| s.credit_energy).sum::<f64>();
        let credit_regulation = settlements.iter().map(|s| s.credit_regulation).sum::<f64>();
        let avg_rho = if settlements.is_empty() {
            1.0
        } else {
            settlements.iter().map(|s| s.rho).sum::<f64>() / settlements.len() as f64
        };
        DayResult {
            credit_energy,
            credit_regulation,
            reward,
            profit: credit_energy + credit_regulation - reward,
            avg_rho,
            settlements,
        }
    }

    pub fn credit(&self) -> f64 {
        self.credit_energy + self.credit_regulation
    }
}

/// `1 - |delta_p| / p_reg` clamped to [0, 1]; a zero offer scores 1.
pub fn performance_score(p_reg: f64, delta_p: f64) -> Result<f64, RtError> {
    if p_reg < 0.0 || p_reg.is_nan() {
        return Err(RtError::NegativeOffer(p_reg));
    }
    if p_reg == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - delta_p.abs() / p_reg).clamp(0.0, 1.0))
}

/// Energy and regulation credit of one hour at realized prices.
pub fn hour_credits(bids: &HourBids, rho: f64, actual: &MarketHour) -> (f64, f64) {
    let energy = actual.lmp * (bids.p_dis - bids.p_ch);
    let regulation = bids.p_reg * actual.rmccp * rho + bids.p_reg * actual.rmpcp * actual.mileage_ratio * rho;
    (energy, regulation)
}

/// Real-time program over the hours of `day` from `state.hour` on.
#[derive(Debug, Clone)]
pub struct RtModel {
    pub horizon: Horizon,
    pub model: EnergyModel,
    /// Bounds forced on the first hour's energy offers:
    /// `(charge_lo, charge_hi, discharge_lo, discharge_hi)`.
    pub first_hour_bounds: (f64, f64, f64, f64),
}

/// Energy available at the start of the hour after arrivals and departures.
fn opening_energy(h: &Horizon) -> f64 {
    h.e_start + h.e_arrival[0] - h.committed_departure.unwrap_or(0.0)
}

/// Builds the remaining-day program. The first hour's energy offers are
/// bounded so that, ignoring regulation, the aggregator ends the hour with
/// the energy it requires and stays under its ceiling.
pub fn build_rt_model(
    day: &Horizon,
    state: &AggregatorState,
    est: &[HourlyEstimate],
    params: &PlannerParams,
) -> Result<RtModel, RtError> {
    let k = state
        .hour
        .checked_sub(params.first_hour)
        .map(|k| k as usize)
        .filter(|&k| k < day.len())
        .ok_or(RtError::Length {
            expected: day.len(),
            got: state.hour as usize,
        })?;
    if est.len() != day.len() - k {
        return Err(RtError::Length {
            expected: day.len() - k,
            got: est.len(),
        });
    }
    let h = day.tail(k, state.energy, state.committed_departure);
    let mut model = build_energy_model(&h, est, params);
    let lambda = params.lambda;
    let opening = opening_energy(&h);
    let demand = h.required_energy(0, lambda, params.eta_c);
    let ceiling = h.energy_ceiling(0, lambda);
    let p_max = h.p_max[0];
    let bounds = (
        (demand - opening).max(0.0) / params.eta_c,
        ((ceiling - opening).max(0.0) / params.eta_c).min(p_max),
        (opening - ceiling).max(0.0) * params.eta_d,
        ((opening - demand).max(0.0) * params.eta_d).min(p_max),
    );
    let (ch_lo, ch_hi, dis_lo, dis_hi) = bounds;
    if ch_lo > ch_hi + SETTLE_TOL || dis_lo > dis_hi + SETTLE_TOL {
        return Err(RtError::Infeasible {
            hour: state.hour,
            state: format!(
                "{state:?}, opening {opening}, demand {demand}, ceiling {ceiling}, offer bounds {bounds:?}"
            ),
        });
    }
    let first = &model.hours[0];
    let (p_ch, p_dis) = (first.p_ch, first.p_dis);
    model.lp.set_bounds(p_ch, ch_lo.min(ch_hi), ch_hi);
    model.lp.set_bounds(p_dis, dis_lo.min(dis_hi), dis_hi);
    Ok(RtModel {
        horizon: h,
        model,
        first_hour_bounds: bounds,
    })
}

/// Solves the remaining-day program and returns the first hour's offers.
pub fn bid_hour(
    day: &Horizon,
    state: &AggregatorState,
    est: &[HourlyEstimate],
    params: &PlannerParams,
) -> Result<HourBids, RtError> {
    let rt = build_rt_model(day, state, est, params)?;
    let sol = solve_energy_model(&rt.model, &rt.horizon, est)
        .map_err(|source| RtError::Solver {
            hour: state.hour,
            source,
        })?
        .ok_or_else(|| RtError::Infeasible {
            hour: state.hour,
            state: format!("{state:?}, offer bounds {:?}", rt.first_hour_bounds),
        })?;
    let s = sol.schedule[0];
    Ok(HourBids {
        hour: s.hour,
        p_ch: s.p_ch,
        p_dis: s.p_dis,
        p_reg: s.p_reg,
        charging: s.charging,
    })
}

/// Settles one hour of `day` against the realized market.
///
/// If following the regulation signal would leave less energy than the
/// remaining departures can be served from, or more than the EVs hold, the
/// energy is restored to that bound and the gap is charged to the regulation
/// offer as nonperformance.
/// Energy the remaining EVs cannot hold goes to the departing ones.
pub fn settle_hour(
    day: &Horizon,
    state: &AggregatorState,
    bids: &HourBids,
    actual: &MarketHour,
    params: &PlannerParams,
) -> Result<HourSettlement, RtError> {
    let k = (state.hour - params.first_hour) as usize;
    let h = day.tail(k, state.energy, state.committed_departure);
    let (up, down) = (actual.regd_up, actual.regd_down);
    let (eta_c, eta_d) = (params.eta_c, params.eta_d);
    let opening = opening_energy(&h);
    let provisional =
        opening + (bids.p_ch + bids.p_reg * down) * eta_c - (bids.p_dis + bids.p_reg * up) / eta_d;
    let demand = h.e_departure[1];
    let floor = h.energy_floor(0, eta_c);
    let e_max = h.e_max[0];

    let (energy, gap) = if provisional < floor - SETTLE_TOL {
        (floor, floor - provisional)
    } else if provisional > e_max + SETTLE_TOL {
        (e_max, provisional - e_max)
    } else {
        (provisional, 0.0)
    };
    let mut delta = 0.0;
    if gap > 0.0 && bids.p_reg > 0.0 {
        let per_mw = (down * eta_c - up / eta_d).abs();
        delta = if per_mw < DEGENERATE_DENOMINATOR {
            let scale = up.max(down).max(f64::EPSILON);
            bids.p_reg * (gap / (bids.p_reg * scale)).min(1.0)
        } else {
            gap / per_mw
        };
    }
    let clamped = delta > bids.p_reg;
    let delta = delta.min(bids.p_reg);
    let rho = performance_score(bids.p_reg, delta)?;
    let (credit_energy, credit_regulation) = hour_credits(bids, rho, actual);

    let room = h.residual_capacity(0, 0.0);
    let next_departure = if energy - demand > room + SETTLE_TOL {
        energy - room
    } else {
        demand
    };
    Ok(HourSettlement {
        bids: *bids,
        regd_up: up,
        regd_down: down,
        provisional_energy: provisional,
        delta_p_reg: delta,
        clamped,
        rho,
        credit_energy,
        credit_regulation,
        energy,
        next_departure,
        next_departure_demand: demand,
        e_max,
    })
}

/// Supplies estimates for the hours from `hour` to the end of the day.
pub trait Estimator {
    fn estimates(&mut self, hour: u32, count: usize) -> Result<Vec<HourlyEstimate>, String>;
}

/// Knows the realized market ahead of time.
pub struct OracleEstimator<'a> {
    pub actual: &'a [MarketHour],
    pub first_hour: u32,
}

impl Estimator for OracleEstimator<'_> {
    fn estimates(&mut self, hour: u32, count: usize) -> Result<Vec<HourlyEstimate>, String> {
        let k = (hour - self.first_hour) as usize;
        let hours = self.actual.get(k..k + count).ok_or("actual day too short")?;
        Ok(crate::forecast::oracle_estimates(hours))
    }
}

impl<F> Estimator for F
where
    F: FnMut(u32, usize) -> Result<Vec<HourlyEstimate>, String>,
{
    fn estimates(&mut self, hour: u32, count: usize) -> Result<Vec<HourlyEstimate>, String> {
        self(hour, count)
    }
}

/// Runs the operating hours of one day. `actual` holds the realized market
/// for each operating hour; `reward` is what the fleet is paid.
pub fn run_day<E: Estimator>(
    fleet: &FleetHours,
    ev_power_mw: f64,
    ev_capacity_mwh: f64,
    actual: &[MarketHour],
    estimator: &mut E,
    reward: f64,
    params: &PlannerParams,
) -> Result<DayResult, RtError> {
    params.validate()?;
    let day = Horizon::day(fleet, ev_power_mw, ev_capacity_mwh, params);
    if actual.len() != day.len() {
        return Err(RtError::Length {
            expected: day.len(),
            got: actual.len(),
        });
    }
    let mut state = AggregatorState {
        hour: params.first_hour,
        energy: day.e_start,
        committed_departure: day.e_departure[0],
    };
    let mut settlements = Vec::with_capacity(day.len());
    for (k, actual_hour) in actual.iter().enumerate() {
        let est = estimator
            .estimates(state.hour, day.len() - k)
            .map_err(|msg| RtError::Estimator {
                hour: state.hour,
                msg,
            })?;
        let bids = bid_hour(&day, &state, &est, params)?;
        let s = settle_hour(&day, &state, &bids, actual_hour, params)?;
        state = AggregatorState {
            hour: state.hour + 1,
            energy: s.energy,
            committed_departure: s.next_departure,
        };
        settlements.push(s);
    }
    Ok(DayResult::from_settlements(settlements, reward))
}

pub const SETTLEMENT_HEADER: &str =
    "day,hour,p_ch,p_dis,p_reg,delta_p_reg,rho,credit_e,credit_r,e_agg,e_agg_dep_next";

pub fn write_settlement_rows<W: Write>(day: &str, result: &DayResult, mut out: W) -> std::io::Result<()> {
    for s in &result.settlements {
        let b = &s.bids;
        writeln!(
            out,
            "{day},{},{},{},{},{},{},{},{},{},{}",
            b.hour,
            b.p_ch,
            b.p_dis,
            b.p_reg,
            s.delta_p_reg,
            s.rho,
            s.credit_energy,
            s.credit_regulation,
            s.energy,
            s.next_departure
        )?;
    }
    Ok(())
}
