//! Day-ahead planning: one credit-maximizing program per incentive interval,
//! then pick the interval with the best profit after rewards.

mod csv_io;
mod model;

use evagg_optim::{solve_milp_with, Status, MilpOptions, SolveError};

use crate::fleet::{FleetError, FleetHours, FleetResponse};
use crate::forecast::HourlyEstimate;
use crate::kv::{KvError, KvFile};

pub use csv_io::{read_da_plan_csv, write_da_plan_csv, DA_PLAN_HEADER};
pub use model::{build_energy_model, extract_schedule, EnergyModel, HourPlan, HourVars, Horizon};

/// Branch-and-bound node budget per program.
pub const NODE_LIMIT: usize = 200_000;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("invalid planner parameters: {0}")]
    Params(String),
    #[error("expected {expected} hourly estimates, got {got}")]
    Estimates { expected: usize, got: usize },
    #[error("interval {interval} is infeasible")]
    Infeasible { interval: usize },
    #[error("every incentive interval is infeasible")]
    AllInfeasible,
    #[error("interval {interval}: {source}")]
    Solver { interval: usize, source: SolveError },
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error("malformed plan file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    /// Participation reward paid on every activated day, $.
    pub fixed_reward: f64,
    /// Energy headroom fraction kept against regulation uncertainty.
    pub lambda: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub first_hour: u32,
    pub last_hour: u32,
    /// Activate only when expected profit exceeds this, $.
    pub activation_threshold: f64,
    /// Apply the real-time offer bounds at every hour of the planning
    /// programs, not only at the hour being bid, so that plans never count
    /// on regulation energy to meet departures.
    pub guard_every_hour: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            fixed_reward: 1000.0,
            lambda: 0.05,
            eta_c: 0.95,
            eta_d: 0.95,
            first_hour: 7,
            last_hour: 19,
            activation_threshold: 0.0,
            guard_every_hour: true,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::Params(m.to_string()));
        if !(0.0..0.5).contains(&self.lambda) {
            return bad("lambda must lie in [0, 0.5)");
        }
        for eta in [self.eta_c, self.eta_d] {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad("efficiencies must lie in (0, 1]");
            }
        }
        if !(self.fixed_reward.is_finite() && self.activation_threshold.is_finite()) {
            return bad("rewards must be finite");
        }
        if self.first_hour < 1 || self.first_hour > self.last_hour || self.last_hour > 22 {
            return bad("operating hours must satisfy 1 <= first <= last <= 22");
        }
        Ok(())
    }

    pub fn num_hours(&self) -> usize {
        (self.last_hour - self.first_hour + 1) as usize
    }

    pub fn from_kv(kv: &KvFile, section: &str) -> Result<Self, KvError> {
        let d = PlannerParams::default();
        Ok(PlannerParams {
            fixed_reward: kv.get_or(section, "fixed_reward", d.fixed_reward)?,
            lambda: kv.get_or(section, "lambda", d.lambda)?,
            eta_c: kv.get_or(section, "eta_c", d.eta_c)?,
            eta_d: kv.get_or(section, "eta_d", d.eta_d)?,
            first_hour: kv.get_or(section, "first_hour", d.first_hour)?,
            last_hour: kv.get_or(section, "last_hour", d.last_hour)?,
            activation_threshold: kv.get_or(section, "activation_threshold", d.activation_threshold)?,
            guard_every_hour: kv.get_or(section, "guard_every_hour", d.guard_every_hour)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaPlan {
    pub activate: bool,
    /// 0-based index into the fleet's interval list.
    pub interval: usize,
    /// Daily incentive offered to the whole fleet, $.
    pub incentive: f64,
    pub fixed_reward: f64,
    pub credit_energy: f64,
    pub credit_regulation: f64,
    pub expected_profit: f64,
    pub schedule: Vec<HourPlan>,
    /// Intervals whose program had no feasible schedule.
    pub infeasible_intervals: Vec<usize>,
}

impl DaPlan {
    pub fn expected_credit(&self) -> f64 {
        self.credit_energy + self.credit_regulation
    }
}

/// Optimal schedule of one interval's program.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSolution {
    pub credit_energy: f64,
    pub credit_regulation: f64,
    pub schedule: Vec<HourPlan>,
}

impl IntervalSolution {
    pub fn credit(&self) -> f64 {
        self.credit_energy + self.credit_regulation
    }
}

/// Energy and regulation credit of a schedule under the given prices.
pub fn schedule_credits(schedule: &[HourPlan], est: &[HourlyEstimate]) -> (f64, f64) {
    schedule.iter().zip(est).fold((0.0, 0.0), |(ce, cr), (h, e)| {
        (ce + e.lmp * (h.p_dis - h.p_ch), cr + e.regulation_price() * h.p_reg)
    })
}

/// Builds the program for one interval's fleet data.
pub fn build_da_subproblem(
    fleet: &FleetHours,
    ev_power_mw: f64,
    ev_capacity_mwh: f64,
    est: &[HourlyEstimate],
    params: &PlannerParams,
) -> EnergyModel {
    let h = Horizon::day(fleet, ev_power_mw, ev_capacity_mwh, params);
    build_energy_model(&h, est, params)
}

/// Solves a built program. `Ok(None)` means infeasible.
pub fn solve_energy_model(
    model: &EnergyModel,
    h: &Horizon,
    est: &[HourlyEstimate],
) -> Result<Option<IntervalSolution>, SolveError> {
    let opts = MilpOptions {
        node_limit: NODE_LIMIT,
    };
    let sol = match solve_milp_with(&model.lp, &opts) {
        Ok(s) => s,
        Err(SolveError::NodeLimit {
            incumbent: Some(best),
            ..
        }) => *best,
        Err(e) => return Err(e),
    };
    if sol.status != Status::Optimal {
        return Ok(None);
    }
    let schedule = extract_schedule(model, h, &sol);
    let (credit_energy, credit_regulation) = schedule_credits(&schedule, est);
    Ok(Some(IntervalSolution {
        credit_energy,
        credit_regulation,
        schedule,
    }))
}

/// Solves the program of interval `interval` on its own.
pub fn solve_interval(
    fleet: &FleetResponse,
    interval: usize,
    est: &[HourlyEstimate],
    params: &PlannerParams,
) -> Result<Option<IntervalSolution>, PlanError> {
    params.validate()?;
    check_estimates(est, params)?;
    let hours = fleet.intervals.get(interval).ok_or(FleetError::Params(format!(
        "interval {interval} out of range 0..{}",
        fleet.num_intervals()
    )))?;
    let h = Horizon::day(hours, fleet.ev_power_mw(), fleet.ev_capacity_mwh(), params);
    let model = build_energy_model(&h, est, params);
    solve_energy_model(&model, &h, est).map_err(|source| PlanError::Solver { interval, source })
}

fn check_estimates(est: &[HourlyEstimate], params: &PlannerParams) -> Result<(), PlanError> {
    if est.len() != params.num_hours() {
        return Err(PlanError::Estimates {
            expected: params.num_hours(),
            got: est.len(),
        });
    }
    Ok(())
}

/// Credit no schedule can exceed: each hour earns at most its power limit
/// times the best of the regulation price and the absolute energy price.
fn credit_upper_bound(h: &Horizon, est: &[HourlyEstimate]) -> f64 {
    h.p_max
        .iter()
        .zip(est)
        .map(|(p, e)| p * e.regulation_price().max(e.lmp.abs()))
        .sum()
}

const TIE_TOL: f64 = 1e-9;

/// Solves every interval and returns the most profitable one. Intervals with
/// identical fleet data to a cheaper interval, or whose credit bound cannot
/// beat the incumbent, are skipped; infeasible intervals are recorded and
/// excluded.
pub fn plan_day(
    fleet: &FleetResponse,
    est: &[HourlyEstimate],
    params: &PlannerParams,
) -> Result<DaPlan, PlanError> {
    params.validate()?;
    check_estimates(est, params)?;
    let mut seen: Vec<Horizon> = Vec::new();
    let mut best: Option<(usize, f64, IntervalSolution)> = None;
    let mut infeasible = Vec::new();
    for (idx, hours) in fleet.intervals.iter().enumerate() {
        let h = Horizon::day(hours, fleet.ev_power_mw(), fleet.ev_capacity_mwh(), params);
        if seen.contains(&h) {
            continue;
        }
        let cost = params.fixed_reward + fleet.breakpoints[idx];
        if let Some((_, profit, _)) = &best {
            if credit_upper_bound(&h, est) - cost < profit + TIE_TOL {
                seen.push(h);
                continue;
            }
        }
        let model = build_energy_model(&h, est, params);
        let sol = solve_energy_model(&model, &h, est)
            .map_err(|source| PlanError::Solver { interval: idx, source })?;
        seen.push(h);
        let Some(sol) = sol else {
            infeasible.push(idx);
            continue;
        };
        let profit = sol.credit() - cost;
        if best.as_ref().map_or(true, |(_, p, _)| profit > p + TIE_TOL) {
            best = Some((idx, profit, sol));
        }
    }
    let (interval, expected_profit, sol) = best.ok_or(PlanError::AllInfeasible)?;
    Ok(DaPlan {
        activate: expected_profit > params.activation_threshold,
        interval,
        incentive: fleet.breakpoints[interval],
        fixed_reward: params.fixed_reward,
        credit_energy: sol.credit_energy,
        credit_regulation: sol.credit_regulation,
        expected_profit,
        schedule: sol.schedule,
        infeasible_intervals: infeasible,
    })
}

/// Lower incentive bound of a 0-based interval index.
pub fn incentive_from_interval(fleet: &FleetResponse, interval: usize) -> Result<f64, FleetError> {
    fleet.breakpoints.get(interval).copied().ok_or(FleetError::Params(format!(
        "interval {interval} out of range 0..{}",
        fleet.num_intervals()
    )))
}
