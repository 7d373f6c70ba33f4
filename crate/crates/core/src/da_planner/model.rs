//! The aggregate-battery program shared by day-ahead planning and real-time
//! bidding.

use evagg_optim::{LinearProgram, LpSolution, Relation, VarId};

use super::PlannerParams;
use crate::fleet::{FleetHours, DAY_SLOTS};
use crate::forecast::HourlyEstimate;

/// Fleet quantities over a run of operating hours, in MW and MWh.
#[derive(Debug, Clone, PartialEq)]
pub struct Horizon {
    pub hours: Vec<u32>,
    pub n_present: Vec<u32>,
    pub p_max: Vec<f64>,
    pub e_max: Vec<f64>,
    pub e_arrival: Vec<f64>,
    /// Departure quantities for each operating hour plus one lookahead hour.
    pub n_departure: Vec<u32>,
    pub e_departure: Vec<f64>,
    pub e_departure_cap: Vec<f64>,
    pub ev_capacity_mwh: f64,
    /// Aggregator energy carried into the first hour.
    pub e_start: f64,
    /// When set, the first hour's departure energy is already committed.
    pub committed_departure: Option<f64>,
}

impl Horizon {
    /// Full operating day. Arrivals and departures before the first hour are
    /// folded into it; departures after the lookahead hour into the lookahead.
    pub fn day(fleet: &FleetHours, ev_power_mw: f64, ev_capacity_mwh: f64, params: &PlannerParams) -> Self {
        let first = params.first_hour as usize;
        let last = params.last_hour as usize;
        let hours: Vec<u32> = (params.first_hour..=params.last_hour).collect();
        let n_present: Vec<u32> = (first..=last).map(|t| fleet.n_present[t]).collect();
        let mut e_arrival: Vec<f64> = (first..=last)
            .map(|t| fleet.e_arrival_kwh[t] / 1000.0)
            .collect();
        e_arrival[0] += fleet.e_arrival_kwh[..first].iter().sum::<f64>() / 1000.0;

        let slot = |t: usize| -> usize { t.clamp(first, last + 1) - first };
        let mut n_departure = vec![0u32; hours.len() + 1];
        let mut e_departure = vec![0.0; hours.len() + 1];
        for t in 0..DAY_SLOTS {
            n_departure[slot(t)] += fleet.n_departure[t];
            e_departure[slot(t)] += fleet.e_departure_kwh[t] / 1000.0;
        }
        let e_departure_cap = n_departure
            .iter()
            .map(|&n| f64::from(n) * ev_capacity_mwh)
            .collect();
        Horizon {
            p_max: n_present.iter().map(|&n| f64::from(n) * ev_power_mw).collect(),
            e_max: n_present.iter().map(|&n| f64::from(n) * ev_capacity_mwh).collect(),
            hours,
            n_present,
            e_arrival,
            n_departure,
            e_departure,
            e_departure_cap,
            ev_capacity_mwh,
            e_start: 0.0,
            committed_departure: None,
        }
    }

    /// Hours from index `k` on, starting from `energy` with the first hour's
    /// departure energy fixed at `committed`.
    pub fn tail(&self, k: usize, energy: f64, committed: f64) -> Self {
        Horizon {
            hours: self.hours[k..].to_vec(),
            n_present: self.n_present[k..].to_vec(),
            p_max: self.p_max[k..].to_vec(),
            e_max: self.e_max[k..].to_vec(),
            e_arrival: self.e_arrival[k..].to_vec(),
            n_departure: self.n_departure[k..].to_vec(),
            e_departure: self.e_departure[k..].to_vec(),
            e_departure_cap: self.e_departure_cap[k..].to_vec(),
            ev_capacity_mwh: self.ev_capacity_mwh,
            e_start: energy,
            committed_departure: Some(committed),
        }
    }

    /// Capacity left in the EVs still present after the next hour's
    /// departures, scaled by `1 - lambda`.
    pub fn residual_capacity(&self, i: usize, lambda: f64) -> f64 {
        let staying = f64::from(self.n_present[i]) - f64::from(self.n_departure[i + 1]);
        staying.max(0.0) * (1.0 - lambda) * self.ev_capacity_mwh
    }

    /// Energy kept above the next hour's departure energy. This is
    /// `lambda * e_max`, except when nearly every present EV leaves next hour:
    /// the retained energy must also fit in the EVs that stay, so the margin
    /// is capped by their residual capacity.
    pub fn margin(&self, i: usize, lambda: f64) -> f64 {
        (lambda * self.e_max[i]).min(self.residual_capacity(i, lambda))
    }

    /// Least energy at the end of hour `i` from which every later departure
    /// can still be met by charging at full power.
    pub fn energy_floor(&self, i: usize, eta_c: f64) -> f64 {
        let n = self.len();
        let mut floor = self.e_departure[n];
        for j in (i..n - 1).rev() {
            let reachable = floor + self.e_departure[j + 1] - self.e_arrival[j + 1] - eta_c * self.p_max[j + 1];
            floor = self.e_departure[j + 1].max(reachable);
        }
        floor
    }

    /// Energy the energy offers alone must leave at the end of hour `i`:
    /// next departures plus margin, and never below the reachability floor.
    pub fn required_energy(&self, i: usize, lambda: f64, eta_c: f64) -> f64 {
        (self.e_departure[i + 1] + self.margin(i, lambda)).max(self.energy_floor(i, eta_c))
    }

    /// Upper bound on the aggregator energy at the end of hour `i`: the
    /// `1 - lambda` headroom, raised when the next hour's departure demand
    /// plus margin needs more, never above physical capacity.
    pub fn energy_ceiling(&self, i: usize, lambda: f64) -> f64 {
        let needed = self.e_departure[i + 1] + self.margin(i, lambda);
        ((1.0 - lambda) * self.e_max[i]).max(needed).min(self.e_max[i])
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }
}

/// Per-hour decision variables.
#[derive(Debug, Clone)]
pub struct HourVars {
    pub p_ch: VarId,
    pub p_dis: VarId,
    pub p_reg: VarId,
    pub delta: VarId,
    pub agg_ch: VarId,
    pub agg_dis: VarId,
    pub energy: VarId,
    /// Energy handed to EVs departing this hour.
    pub departure: VarId,
}

#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub lp: LinearProgram,
    pub hours: Vec<HourVars>,
    /// Departure energy of the hour after the last operating hour.
    pub lookahead_departure: VarId,
}

/// Builds the credit-maximizing program over `h`. Per hour: big-M charge and
/// discharge exclusivity, shared power limits, aggregate power definitions,
/// the energy balance, the lower margin and the residual-capacity bound.
pub fn build_energy_model(h: &Horizon, est: &[HourlyEstimate], params: &PlannerParams) -> EnergyModel {
    assert_eq!(est.len(), h.len(), "one estimate per operating hour");
    let lambda = params.lambda;
    let (eta_c, eta_d) = (params.eta_c, params.eta_d);
    let mut lp = LinearProgram::new();

    let dep_bounds = |i: usize| -> (f64, f64) {
        let hi = h.e_departure_cap[i];
        (h.e_departure[i].min(hi), hi)
    };
    let mut departures = Vec::with_capacity(h.len() + 1);
    for (i, t) in h.hours.iter().chain(std::iter::once(&(h.hours[h.len() - 1] + 1))).enumerate() {
        let (lo, hi) = match (i, h.committed_departure) {
            (0, Some(c)) => (c, c),
            _ => dep_bounds(i),
        };
        departures.push(lp.add_var(format!("e_dep_{t}"), lo, hi));
    }

    let mut hours: Vec<HourVars> = Vec::with_capacity(h.len());
    for (i, &t) in h.hours.iter().enumerate() {
        let p_max = h.p_max[i];
        let hv = HourVars {
            p_ch: lp.add_var(format!("p_ch_{t}"), 0.0, p_max),
            p_dis: lp.add_var(format!("p_dis_{t}"), 0.0, p_max),
            p_reg: lp.add_var(format!("p_reg_{t}"), 0.0, p_max),
            delta: lp.add_binary(format!("delta_{t}")),
            agg_ch: lp.add_var(format!("p_agg_ch_{t}"), 0.0, p_max),
            agg_dis: lp.add_var(format!("p_agg_dis_{t}"), 0.0, p_max),
            energy: lp.add_var(format!("e_agg_{t}"), 0.0, h.energy_ceiling(i, lambda)),
            departure: departures[i],
        };
        let e = &est[i];
        lp.add_objective(hv.p_dis, e.lmp);
        lp.add_objective(hv.p_ch, -e.lmp);
        lp.add_objective(hv.p_reg, e.regulation_price());

        let m = p_max;
        lp.add_constraint(format!("ch_mode_{t}"), vec![(hv.p_ch, 1.0), (hv.delta, -m)], Relation::Le, 0.0);
        lp.add_constraint(format!("dis_mode_{t}"), vec![(hv.p_dis, 1.0), (hv.delta, m)], Relation::Le, m);
        lp.add_constraint(format!("ch_total_{t}"), vec![(hv.p_ch, 1.0), (hv.p_reg, 1.0)], Relation::Le, p_max);
        lp.add_constraint(format!("dis_total_{t}"), vec![(hv.p_dis, 1.0), (hv.p_reg, 1.0)], Relation::Le, p_max);
        lp.add_constraint(
            format!("agg_ch_{t}"),
            vec![(hv.agg_ch, 1.0), (hv.p_ch, -1.0), (hv.p_reg, -e.regd_down)],
            Relation::Eq,
            0.0,
        );
        lp.add_constraint(
            format!("agg_dis_{t}"),
            vec![(hv.agg_dis, 1.0), (hv.p_dis, -1.0), (hv.p_reg, -e.regd_up)],
            Relation::Eq,
            0.0,
        );
        let mut balance = vec![
            (hv.energy, 1.0),
            (hv.departure, 1.0),
            (hv.agg_ch, -eta_c),
            (hv.agg_dis, 1.0 / eta_d),
        ];
        let mut rhs = h.e_arrival[i];
        if i == 0 {
            rhs += h.e_start;
        } else {
            balance.push((hours[i - 1].energy, -1.0));
        }
        lp.add_constraint(format!("balance_{t}"), balance, Relation::Eq, rhs);
        let next_dep = departures[i + 1];
        lp.add_constraint(
            format!("margin_{t}"),
            vec![(hv.energy, 1.0), (next_dep, -1.0)],
            Relation::Ge,
            h.margin(i, lambda),
        );
        lp.add_constraint(
            format!("rest_{t}"),
            vec![(hv.energy, 1.0), (next_dep, -1.0)],
            Relation::Le,
            h.residual_capacity(i, lambda),
        );
        if params.guard_every_hour {
            add_offer_guards(&mut lp, h, i, &hv, hours.last(), params);
        }
        hours.push(hv);
    }
    EnergyModel {
        lp,
        hours,
        lookahead_departure: departures[h.len()],
    }
}

/// Rows making the energy-market offers of hour `i` alone keep the
/// end-of-hour energy between the next departures plus margin and the
/// ceiling, whatever the regulation signal does. With charging and
/// discharging exclusive this is the same as the four real-time offer
/// bounds of the hour being bid.
fn add_offer_guards(
    lp: &mut LinearProgram,
    h: &Horizon,
    i: usize,
    hv: &HourVars,
    prev: Option<&HourVars>,
    params: &PlannerParams,
) {
    let t = h.hours[i];
    let lambda = params.lambda;
    let mut terms = vec![
        (hv.departure, -1.0),
        (hv.p_ch, params.eta_c),
        (hv.p_dis, -1.0 / params.eta_d),
    ];
    let mut opening = h.e_arrival[i];
    match prev {
        Some(p) => terms.push((p.energy, 1.0)),
        None => opening += h.e_start,
    }
    lp.add_constraint(
        format!("guard_lo_{t}"),
        terms.clone(),
        Relation::Ge,
        h.required_energy(i, lambda, params.eta_c) - opening,
    );
    lp.add_constraint(
        format!("guard_hi_{t}"),
        terms,
        Relation::Le,
        h.energy_ceiling(i, lambda) - opening,
    );
}

/// Solution values of one hour, in MW and MWh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourPlan {
    pub hour: u32,
    pub p_ch: f64,
    pub p_dis: f64,
    pub p_reg: f64,
    pub charging: bool,
    pub p_agg_ch: f64,
    pub p_agg_dis: f64,
    pub e_agg: f64,
    pub e_agg_dep: f64,
}

/// Reads the schedule out of a solution, snapping solver noise to zero.
pub fn extract_schedule(model: &EnergyModel, h: &Horizon, sol: &LpSolution) -> Vec<HourPlan> {
    let v = |id: VarId| -> f64 {
        let x = sol.value(id);
        if x.abs() < 1e-9 {
            0.0
        } else {
            x
        }
    };
    model
        .hours
        .iter()
        .zip(&h.hours)
        .map(|(hv, &hour)| HourPlan {
            hour,
            p_ch: v(hv.p_ch),
            p_dis: v(hv.p_dis),
            p_reg: v(hv.p_reg),
            charging: sol.value(hv.delta) > 0.5,
            p_agg_ch: v(hv.agg_ch),
            p_agg_dis: v(hv.agg_dis),
            e_agg: v(hv.energy),
            e_agg_dep: v(hv.departure),
        })
        .collect()
}
