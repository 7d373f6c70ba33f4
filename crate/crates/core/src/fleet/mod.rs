//! EV owner behavior sampling, incentive-response step functions and their
//! fleet-level aggregation.

mod csv_io;

pub use csv_io::{read_fleet_csv, write_fleet_csv, FLEET_CSV_HEADER};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::kv::{KvError, KvFile};

/// Hour-of-day slots tracked per interval; index 24 holds departures at midnight.
pub const DAY_SLOTS: usize = 25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FleetError {
    #[error("invalid truncation bounds: lo {lo} > hi {hi}")]
    Bounds { lo: f64, hi: f64 },
    #[error("invalid fleet parameters: {0}")]
    Params(String),
    #[error("incentive {pi} outside [0, {max}]")]
    Incentive { pi: f64, max: f64 },
    #[error("fleet file: {0}")]
    Format(String),
}

/// Truncated Gaussian parameters of one behavior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behavior {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Behavior {
    pub const fn new(mean: f64, std: f64, min: f64, max: f64) -> Self {
        Behavior {
            mean,
            std,
            min,
            max,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, FleetError> {
        sample_truncated_gaussian(self.mean, self.std, self.min, self.max, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetParams {
    pub n_ev: usize,
    pub ev_power_kw: f64,
    pub ev_capacity_kwh: f64,
    /// Arrival hour of day.
    pub arrival: Behavior,
    pub departure: Behavior,
    /// Arrival state of charge, percent.
    pub soc_arrival: Behavior,
    /// Desired departure state of charge, percent.
    pub soc_departure: Behavior,
    pub incentive_max: f64,
    pub steps_per_behavior: usize,
    pub seed: u64,
}

impl Default for FleetParams {
    fn default() -> Self {
        FleetParams {
            n_ev: 200,
            ev_power_kw: 50.0,
            ev_capacity_kwh: 50.0,
            arrival: Behavior::new(8.5, 3.0, 6.0, 13.0),
            departure: Behavior::new(17.5, 3.0, 13.0, 20.0),
            soc_arrival: Behavior::new(75.0, 25.0, 25.0, 95.0),
            soc_departure: Behavior::new(90.0, 10.0, 60.0, 100.0),
            incentive_max: 1500.0,
            steps_per_behavior: 3,
            seed: 0,
        }
    }
}

impl FleetParams {
    pub fn validate(&self) -> Result<(), FleetError> {
        let bad = |m: String| Err(FleetError::Params(m));
        for (name, b) in self.behaviors() {
            if !(b.min <= b.mean && b.mean <= b.max) || b.std < 0.0 || !b.std.is_finite() {
                return bad(format!("{name}: need min <= mean <= max and std >= 0"));
            }
        }
        if self.departure.min < self.arrival.min {
            return bad("departure min hour precedes arrival min hour".into());
        }
        if self.arrival.min < 0.0 || self.departure.max > 24.0 {
            return bad("behavior hours must lie within one day".into());
        }
        if self.departure.max.floor() < self.arrival.min.floor() + 2.0 {
            return bad("no departure hour leaves the earliest arrival a controllable hour".into());
        }
        for (name, b) in [("soc_arrival", self.soc_arrival), ("soc_departure", self.soc_departure)] {
            if b.min < 0.0 || b.max > 100.0 {
                return bad(format!("{name} must lie within [0, 100]"));
            }
        }
        if !(self.ev_power_kw > 0.0 && self.ev_capacity_kwh > 0.0) {
            return bad("EV power and capacity must be positive".into());
        }
        if !(self.incentive_max > 0.0 && self.incentive_max.is_finite()) {
            return bad("incentive_max must be positive".into());
        }
        if self.n_ev == 0 {
            return bad("fleet must contain at least one EV".into());
        }
        Ok(())
    }

    fn behaviors(&self) -> [(&'static str, Behavior); 4] {
        [
            ("arrival", self.arrival),
            ("departure", self.departure),
            ("soc_arrival", self.soc_arrival),
            ("soc_departure", self.soc_departure),
        ]
    }

    /// Reads `n_ev`, `ev_power_kw`, `ev_capacity_kwh`, `incentive_max`,
    /// `steps_per_behavior`, `seed` and `<behavior>.{mean,std,min,max}`,
    /// keeping defaults for absent keys.
    pub fn from_kv(kv: &KvFile, section: &str) -> Result<Self, KvError> {
        let d = FleetParams::default();
        let behavior = |name: &str, b: Behavior| -> Result<Behavior, KvError> {
            Ok(Behavior {
                mean: kv.get_or(section, &format!("{name}.mean"), b.mean)?,
                std: kv.get_or(section, &format!("{name}.std"), b.std)?,
                min: kv.get_or(section, &format!("{name}.min"), b.min)?,
                max: kv.get_or(section, &format!("{name}.max"), b.max)?,
            })
        };
        Ok(FleetParams {
            n_ev: kv.get_or(section, "n_ev", d.n_ev)?,
            ev_power_kw: kv.get_or(section, "ev_power_kw", d.ev_power_kw)?,
            ev_capacity_kwh: kv.get_or(section, "ev_capacity_kwh", d.ev_capacity_kwh)?,
            arrival: behavior("arrival", d.arrival)?,
            departure: behavior("departure", d.departure)?,
            soc_arrival: behavior("soc_arrival", d.soc_arrival)?,
            soc_departure: behavior("soc_departure", d.soc_departure)?,
            incentive_max: kv.get_or(section, "incentive_max", d.incentive_max)?,
            steps_per_behavior: kv.get_or(section, "steps_per_behavior", d.steps_per_behavior)?,
            seed: kv.get_or(section, "seed", d.seed)?,
        })
    }
}

/// Gaussian `(mu, sigma)` conditioned on `[lo, hi]`, by inverse-CDF sampling.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64, FleetError> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(FleetError::Bounds { lo, hi });
    }
    if sigma <= 0.0 || lo == hi {
        return Ok(mu.clamp(lo, hi));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let a = normal.cdf((lo - mu) / sigma);
    let b = normal.cdf((hi - mu) / sigma);
    if b - a <= f64::EPSILON {
        // Window lies deep in one tail; the conditional mass hugs the near bound.
        return Ok(if mu < lo { lo } else { hi });
    }
    let u: f64 = rng.gen();
    let x = mu + sigma * normal.inverse_cdf(a + u * (b - a));
    Ok(x.clamp(lo, hi))
}

/// Behaviors of one EV owner. Hours are integer hours of day, SOC in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvBehavior {
    pub arrival: u32,
    pub departure: u32,
    pub soc_arrival: f64,
    pub soc_departure: f64,
}

/// Samples `n_ev` baselines. Hours are floored; SOCs are rounded to 1%.
/// An EV becomes controllable the hour after it arrives, so a departure that
/// leaves no controllable hour is redrawn.
pub fn sample_fleet<R: Rng + ?Sized>(
    params: &FleetParams,
    rng: &mut R,
) -> Result<Vec<EvBehavior>, FleetError> {
    params.validate()?;
    let mut out = Vec::with_capacity(params.n_ev);
    for _ in 0..params.n_ev {
        let mut arrival = params.arrival.sample(rng)?.floor() as u32;
        let mut departure = params.departure.sample(rng)?.floor() as u32;
        let mut tries = 0;
        while departure < arrival + 2 && tries < 100 {
            departure = params.departure.sample(rng)?.floor() as u32;
            tries += 1;
        }
        if departure < arrival + 2 {
            let latest = params.departure.max.floor() as u32;
            departure = (arrival + 2).min(latest);
            arrival = arrival.min(departure - 2);
        }
        let soc_arrival = params.soc_arrival.sample(rng)?.round();
        let soc_departure = params.soc_departure.sample(rng)?.round();
        out.push(EvBehavior {
            arrival,
            departure,
            soc_arrival,
            soc_departure,
        });
    }
    Ok(out)
}

/// `value(pi) = values[k]` for `thresholds[k-1] <= pi < thresholds[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    /// Strictly positive, non-decreasing incentive levels.
    pub thresholds: Vec<f64>,
    /// One more entry than `thresholds`; `values[0]` is the baseline.
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(v: f64) -> Self {
        StepFunction {
            thresholds: Vec::new(),
            values: vec![v],
        }
    }

    pub fn eval(&self, pi: f64) -> f64 {
        self.values[self.thresholds.partition_point(|&t| t <= pi)]
    }

    pub fn baseline(&self) -> f64 {
        self.values[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvResponse {
    pub arrival: StepFunction,
    pub departure: StepFunction,
    pub soc_arrival: StepFunction,
    pub soc_departure: StepFunction,
}

impl EvResponse {
    pub fn eval(&self, pi: f64) -> EvBehavior {
        EvBehavior {
            arrival: self.arrival.eval(pi) as u32,
            departure: self.departure.eval(pi) as u32,
            soc_arrival: self.soc_arrival.eval(pi),
            soc_departure: self.soc_departure.eval(pi),
        }
    }

    pub fn baseline(&self) -> EvBehavior {
        self.eval(0.0)
    }

    fn functions(&self) -> [&StepFunction; 4] {
        [
            &self.arrival,
            &self.departure,
            &self.soc_arrival,
            &self.soc_departure,
        ]
    }
}

/// Step functions moving each behavior from its baseline to the bound that
/// helps the aggregator: earlier arrival, later departure, lower arrival SOC,
/// lower desired departure SOC. Each behavior gets its own sorted uniform
/// thresholds on `(0, incentive_max]` and equal steps (integer hours, 1% SOC).
pub fn build_response_functions<R: Rng + ?Sized>(
    baselines: &[EvBehavior],
    params: &FleetParams,
    rng: &mut R,
) -> Vec<EvResponse> {
    let k = params.steps_per_behavior;
    let thresholds = |rng: &mut R| -> Vec<f64> {
        let mut t: Vec<f64> = (0..k)
            .map(|_| params.incentive_max * (1.0 - rng.gen::<f64>()))
            .collect();
        t.sort_by(f64::total_cmp);
        t
    };
    let steps = |base: f64, bound: f64| -> Vec<f64> {
        (0..=k)
            .map(|j| {
                if j == 0 {
                    base
                } else {
                    (base + (bound - base) * j as f64 / k as f64).round()
                }
            })
            .collect()
    };
    baselines
        .iter()
        .map(|b| EvResponse {
            arrival: StepFunction {
                thresholds: thresholds(rng),
                values: steps(f64::from(b.arrival), params.arrival.min.ceil()),
            },
            departure: StepFunction {
                thresholds: thresholds(rng),
                values: steps(f64::from(b.departure), params.departure.max.floor()),
            },
            soc_arrival: StepFunction {
                thresholds: thresholds(rng),
                values: steps(b.soc_arrival, params.soc_arrival.min.ceil()),
            },
            soc_departure: StepFunction {
                thresholds: thresholds(rng),
                values: steps(b.soc_departure, params.soc_departure.min.ceil()),
            },
        })
        .collect()
}

/// Samples baselines and response functions from `params.seed`.
pub fn generate_fleet(params: &FleetParams) -> Result<Vec<EvResponse>, FleetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let baselines = sample_fleet(params, &mut rng)?;
    Ok(build_response_functions(&baselines, params, &mut rng))
}

/// Per-hour fleet quantities for one incentive interval, indexed by hour of day.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetHours {
    /// EVs that become available at the start of each hour (arrived the hour before).
    pub n_arrival: Vec<u32>,
    /// EVs departing during each hour.
    pub n_departure: Vec<u32>,
    /// EVs present and controllable during each hour.
    pub n_present: Vec<u32>,
    /// Energy stored in the newly available EVs, kWh.
    pub e_arrival_kwh: Vec<f64>,
    /// Energy desired by the departing EVs, kWh.
    pub e_departure_kwh: Vec<f64>,
}

impl FleetHours {
    fn empty() -> Self {
        FleetHours {
            n_arrival: vec![0; DAY_SLOTS],
            n_departure: vec![0; DAY_SLOTS],
            n_present: vec![0; DAY_SLOTS],
            e_arrival_kwh: vec![0.0; DAY_SLOTS],
            e_departure_kwh: vec![0.0; DAY_SLOTS],
        }
    }

    /// Sums individual behaviors in the given order.
    pub fn from_behaviors<'a>(
        behaviors: impl IntoIterator<Item = &'a EvBehavior>,
        capacity_kwh: f64,
    ) -> Self {
        let mut h = FleetHours::empty();
        for b in behaviors {
            let avail = (b.arrival + 1) as usize;
            let dep = b.departure as usize;
            h.n_arrival[avail] += 1;
            h.n_departure[dep] += 1;
            h.e_arrival_kwh[avail] += b.soc_arrival / 100.0 * capacity_kwh;
            h.e_departure_kwh[dep] += b.soc_departure / 100.0 * capacity_kwh;
        }
        let mut present: i64 = 0;
        for t in 0..DAY_SLOTS {
            present += i64::from(h.n_arrival[t]) - i64::from(h.n_departure[t]);
            h.n_present[t] = present.max(0) as u32;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetResponse {
    /// Lower incentive bound of each interval; the first is 0.
    pub breakpoints: Vec<f64>,
    pub intervals: Vec<FleetHours>,
    pub n_ev: usize,
    pub ev_power_kw: f64,
    pub ev_capacity_kwh: f64,
    pub incentive_max: f64,
}

/// Merges every per-EV threshold into one interval family and sums the fleet
/// inside each interval.
pub fn aggregate_fleet(responses: &[EvResponse], params: &FleetParams) -> FleetResponse {
    let mut breakpoints = vec![0.0];
    for r in responses {
        for f in r.functions() {
            breakpoints.extend(f.thresholds.iter().filter(|&&t| t <= params.incentive_max));
        }
    }
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let intervals = breakpoints
        .iter()
        .map(|&pi| {
            let behaviors: Vec<EvBehavior> = responses.iter().map(|r| r.eval(pi)).collect();
            FleetHours::from_behaviors(&behaviors, params.ev_capacity_kwh)
        })
        .collect();
    FleetResponse {
        breakpoints,
        intervals,
        n_ev: responses.len(),
        ev_power_kw: params.ev_power_kw,
        ev_capacity_kwh: params.ev_capacity_kwh,
        incentive_max: params.incentive_max,
    }
}

impl FleetResponse {
    pub fn num_intervals(&self) -> usize {
        self.intervals.len()
    }

    /// Index of the half-open interval containing `pi`; the last interval is
    /// closed at `incentive_max`.
    pub fn interval_index(&self, pi: f64) -> Result<usize, FleetError> {
        if !(0.0..=self.incentive_max).contains(&pi) {
            return Err(FleetError::Incentive {
                pi,
                max: self.incentive_max,
            });
        }
        Ok(self.breakpoints.partition_point(|&b| b <= pi) - 1)
    }

    pub fn evaluate_at_incentive(&self, pi: f64) -> Result<&FleetHours, FleetError> {
        Ok(&self.intervals[self.interval_index(pi)?])
    }

    pub fn ev_power_mw(&self) -> f64 {
        self.ev_power_kw / 1000.0
    }

    pub fn ev_capacity_mwh(&self) -> f64 {
        self.ev_capacity_kwh / 1000.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_sigma_clamps() {
        let mut r = rng(0);
        assert_eq!(sample_truncated_gaussian(5.0, 0.0, 6.0, 13.0, &mut r).unwrap(), 6.0);
        assert_eq!(sample_truncated_gaussian(8.5, 0.0, 6.0, 13.0, &mut r).unwrap(), 8.5);
        assert!(matches!(
            sample_truncated_gaussian(0.0, 1.0, 2.0, 1.0, &mut r),
            Err(FleetError::Bounds { .. })
        ));
    }

    #[test]
    fn arrival_samples_respect_bounds() {
        let mut r = rng(1);
        for _ in 0..100_000 {
            let x = sample_truncated_gaussian(8.5, 3.0, 6.0, 13.0, &mut r).unwrap();
            assert!((6.0..=13.0).contains(&x));
        }
    }

    #[test]
    fn symmetric_window_has_zero_mean() {
        let mut r = rng(2);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_truncated_gaussian(0.0, 1.0, -10.0, 10.0, &mut r).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn far_tail_window() {
        let mut r = rng(3);
        let x = sample_truncated_gaussian(0.0, 1.0, 50.0, 60.0, &mut r).unwrap();
        assert!((50.0..=60.0).contains(&x));
    }

    #[test]
    fn default_fleet_baselines() {
        let params = FleetParams::default();
        let fleet = sample_fleet(&params, &mut rng(4)).unwrap();
        assert_eq!(fleet.len(), 200);
        for b in &fleet {
            assert!((6..=13).contains(&b.arrival));
            assert!((13..=20).contains(&b.departure));
            assert!(b.departure > b.arrival);
            assert!((60.0..=100.0).contains(&b.soc_departure));
            assert!((25.0..=95.0).contains(&b.soc_arrival));
        }
        assert_eq!(fleet, sample_fleet(&params, &mut rng(4)).unwrap());
    }

    #[test]
    fn baseline_at_bound_stays_constant() {
        let params = FleetParams::default();
        let b = EvBehavior {
            arrival: 6,
            departure: 15,
            soc_arrival: 50.0,
            soc_departure: 80.0,
        };
        let r = &build_response_functions(&[b], &params, &mut rng(5))[0];
        assert!(r.arrival.values.iter().all(|&v| v == 6.0));
        for pi in [0.0, 400.0, 1499.0, 1500.0] {
            assert_eq!(r.eval(pi).arrival, 6);
        }
        assert_eq!(r.baseline(), b);
        let top = r.eval(1500.0);
        assert_eq!(top.departure, 20);
        assert_eq!(top.soc_arrival, 25.0);
        assert_eq!(top.soc_departure, 60.0);
    }

    #[test]
    fn single_ev_with_one_threshold() {
        let params = FleetParams {
            ev_capacity_kwh: 50.0,
            ..FleetParams::default()
        };
        let ev = EvResponse {
            arrival: StepFunction {
                thresholds: vec![500.0],
                values: vec![9.0, 7.0],
            },
            departure: StepFunction::constant(17.0),
            soc_arrival: StepFunction::constant(50.0),
            soc_departure: StepFunction::constant(90.0),
        };
        let f = aggregate_fleet(&[ev], &params);
        assert_eq!(f.breakpoints, vec![0.0, 500.0]);
        assert_eq!(f.num_intervals(), 2);
        assert_eq!(f.intervals[0].n_arrival[10], 1);
        assert_eq!(f.intervals[1].n_arrival[8], 1);
        assert_eq!(f.intervals[0].n_present[9..17].to_vec(), vec![0, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(f.intervals[1].n_present[8], 1);
        assert_eq!(f.intervals[1].n_present[17], 0);
        assert_eq!(f.intervals[0].e_arrival_kwh[10], 25.0);
        assert_eq!(f.intervals[0].e_departure_kwh[17], 45.0);
        assert_eq!(f.interval_index(499.999).unwrap(), 0);
        assert_eq!(f.interval_index(500.0).unwrap(), 1);
        assert_eq!(f.interval_index(1500.0).unwrap(), 1);
        assert!(f.interval_index(1500.5).is_err());
        assert!(f.interval_index(-1.0).is_err());
    }

    #[test]
    fn fleet_counts_are_conserved() {
        let params = FleetParams {
            seed: 9,
            ..FleetParams::default()
        };
        let fleet = aggregate_fleet(&generate_fleet(&params).unwrap(), &params);
        assert!(fleet.num_intervals() > 1);
        for iv in &fleet.intervals {
            assert_eq!(iv.n_arrival.iter().sum::<u32>(), 200);
            assert_eq!(iv.n_departure.iter().sum::<u32>(), 200);
            assert_eq!(iv.n_present[DAY_SLOTS - 1], 0);
        }
    }

    #[test]
    fn kv_overrides() {
        let kv = KvFile::parse("[fleet]\nn_ev = 3\narrival.mean = 9\nseed = 4\n").unwrap();
        let p = FleetParams::from_kv(&kv, "fleet").unwrap();
        assert_eq!((p.n_ev, p.arrival.mean, p.seed), (3, 9.0, 4));
        assert!(kv.finish().is_ok());
        let bad = FleetParams {
            arrival: Behavior::new(5.0, 1.0, 6.0, 13.0),
            ..FleetParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn responses_are_monotone_and_bounded(seed in 0u64..10_000, n in 1usize..40) {
            let params = FleetParams { n_ev: n, seed, ..FleetParams::default() };
            let responses = generate_fleet(&params).unwrap();
            for r in &responses {
                let mut prev = r.eval(0.0);
                let mut levels: Vec<f64> = r.functions().iter().flat_map(|f| f.thresholds.clone()).collect();
                levels.push(params.incentive_max);
                levels.sort_by(f64::total_cmp);
                for pi in levels {
                    let b = r.eval(pi);
                    prop_assert!(b.arrival <= prev.arrival && b.departure >= prev.departure);
                    prop_assert!(b.soc_arrival <= prev.soc_arrival && b.soc_departure <= prev.soc_departure);
                    prop_assert!(b.departure > b.arrival);
                    prop_assert!((6..=13).contains(&b.arrival) && (13..=20).contains(&b.departure));
                    prop_assert!((25.0..=95.0).contains(&b.soc_arrival));
                    prop_assert!((60.0..=100.0).contains(&b.soc_departure));
                    prop_assert_eq!(b.soc_arrival, b.soc_arrival.round());
                    prev = b;
                }
            }
        }

        #[test]
        fn aggregation_matches_per_ev_sum(seed in 0u64..10_000, probes in prop::collection::vec((0.0f64..=1500.0, 7usize..21), 10)) {
            let params = FleetParams { n_ev: 30, seed, ..FleetParams::default() };
            let responses = generate_fleet(&params).unwrap();
            let fleet = aggregate_fleet(&responses, &params);
            for (pi, t) in probes {
                let agg = fleet.evaluate_at_incentive(pi).unwrap();
                let mut n_arv = 0;
                let mut n_dep = 0;
                let mut n_present = 0;
                let mut e_arv = 0.0;
                let mut e_dep = 0.0;
                for r in &responses {
                    let b = r.eval(pi);
                    if b.arrival as usize + 1 == t {
                        n_arv += 1;
                        e_arv += b.soc_arrival / 100.0 * params.ev_capacity_kwh;
                    }
                    if b.departure as usize == t {
                        n_dep += 1;
                        e_dep += b.soc_departure / 100.0 * params.ev_capacity_kwh;
                    }
                    if (b.arrival as usize) < t && t < b.departure as usize {
                        n_present += 1;
                    }
                }
                prop_assert_eq!(agg.n_arrival[t], n_arv);
                prop_assert_eq!(agg.n_departure[t], n_dep);
                prop_assert_eq!(agg.n_present[t], n_present);
                prop_assert_eq!(agg.e_arrival_kwh[t], e_arv);
                prop_assert_eq!(agg.e_departure_kwh[t], e_dep);
                prop_assert!(agg.e_arrival_kwh[t] <= f64::from(agg.n_arrival[t]) * params.ev_capacity_kwh);
            }
        }

        #[test]
        fn availability_grows_with_incentive(seed in 0u64..10_000) {
            let params = FleetParams { n_ev: 50, seed, ..FleetParams::default() };
            let fleet = aggregate_fleet(&generate_fleet(&params).unwrap(), &params);
            for w in fleet.intervals.windows(2) {
                for t in (7..=9).chain(17..=19) {
                    prop_assert!(w[1].n_present[t] >= w[0].n_present[t]);
                }
            }
        }
    }
}
