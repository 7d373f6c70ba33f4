use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::*;
use crate::kv::KvFile;
use crate::market_data::{Field, SynthConfig};

fn small_config(days: usize, seed: u64) -> CampaignConfig {
    let mut c = CampaignConfig::default();
    c.market = MarketSource::Synthetic {
        config: SynthConfig {
            days,
            ..SynthConfig::default()
        },
        seed,
    };
    c.fleet.n_ev = 8;
    c.fleet.steps_per_behavior = 1;
    c.fleet.seed = seed;
    c.training_days = 14;
    c.forecast_mode = ForecastMode::Oracle;
    c
}

fn quiet(mut c: CampaignConfig) -> CampaignConfig {
    if let MarketSource::Synthetic { config, .. } = &mut c.market {
        for shape in [&mut config.lmp, &mut config.rmccp, &mut config.rmpcp] {
            shape.mean = 0.0;
            shape.amplitude = 0.0;
            shape.noise = 0.0;
        }
    }
    c
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("evagg-campaign-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn working_days_skip_weekends_and_holidays() {
    let mut c = small_config(40, 1);
    let holiday = NaiveDate::from_ymd_opt(2018, 1, 24).unwrap();
    c.holidays.insert(holiday);
    let market = c.load_market().unwrap();
    let days = c.working_days(&market);
    assert_eq!(days[0], NaiveDate::from_ymd_opt(2018, 1, 16).unwrap());
    assert_eq!(*days.last().unwrap(), NaiveDate::from_ymd_opt(2018, 2, 9).unwrap());
    assert!(days.iter().all(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)));
    assert!(!days.contains(&holiday));
    assert!(days.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn holiday_file_skips_comments() {
    let dir = tmp_dir("holidays");
    let path = dir.join("h.txt");
    std::fs::write(&path, "# closed\n2018-01-01\n\n  2018-12-25  \n").unwrap();
    let h = read_holidays(&path).unwrap();
    assert_eq!(h.len(), 2);
    std::fs::write(&path, "2018-13-01\n").unwrap();
    let err = read_holidays(&path).unwrap_err().to_string();
    assert!(err.contains(":1:"), "{err}");
}

#[test]
fn config_file_round_trip() {
    let dir = tmp_dir("config");
    std::fs::write(dir.join("h.txt"), "2018-02-05\n").unwrap();
    let text = "\
[market]
source = synthetic
seed = 9
[synthetic]
days = 50
lmp.mean = 40
[fleet]
n_ev = 12
[planner]
lambda = 0.1
[forecast]
mode = oracle
regd_estimator = sarima
price_spec = (1,0,0)x(1,0,0)24
lmp.spec = (2,0,0)x(0,1,1)24
[campaign]
first_day = 2018-02-01
last_day = 2018-02-10
training_days = 21
holidays = h.txt
output = results
base_case = true
";
    let kv = KvFile::parse(text).unwrap();
    let c = CampaignConfig::from_kv(&kv, &dir).unwrap();
    match &c.market {
        MarketSource::Synthetic { config, seed } => {
            assert_eq!(*seed, 9);
            assert_eq!(config.days, 50);
            assert_eq!(config.lmp.mean, 40.0);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(c.fleet.n_ev, 12);
    assert_eq!(c.planner.lambda, 0.1);
    assert_eq!(c.forecast_mode, ForecastMode::Oracle);
    assert_eq!(c.regd_estimator, RegdEstimator::Sarima);
    assert_eq!(c.forecast.specs[&Field::Lmp].to_string(), "(2,0,0)x(0,1,1)24");
    assert_eq!(c.forecast.specs[&Field::Rmccp].to_string(), "(1,0,0)x(1,0,0)24");
    assert_eq!(c.training_days, 21);
    assert_eq!(c.output, dir.join("results"));
    assert!(c.base_case && !c.frozen_forecaster);
    assert_eq!(c.holidays.len(), 1);
    c.validate().unwrap();

    let kv = KvFile::parse("[campaign]\ntraning_days = 20\n").unwrap();
    assert!(CampaignConfig::from_kv(&kv, &dir).is_err());
    let kv = KvFile::parse("[forecast]\nmode = psychic\n").unwrap();
    assert!(CampaignConfig::from_kv(&kv, &dir).is_err());
}

#[test]
fn short_training_window_is_a_config_error() {
    let mut c = small_config(40, 1);
    c.training_days = 13;
    assert!(matches!(Campaign::new(c), Err(CampaignError::Config(_))));

    // Range starting before a full window of data.
    let mut c = small_config(40, 1);
    c.forecast_mode = ForecastMode::Sarima;
    c.first_day = Some(NaiveDate::from_ymd_opt(2018, 1, 8).unwrap());
    let mut camp = Campaign::new(c).unwrap();
    assert!(matches!(camp.run(), Err(CampaignError::Config(_))));
}

#[test]
fn market_gap_is_a_data_error() {
    let mut c = small_config(30, 1);
    c.last_day = Some(NaiveDate::from_ymd_opt(2018, 2, 5).unwrap());
    let mut camp = Campaign::new(c).unwrap();
    assert!(matches!(camp.run(), Err(CampaignError::Data(_))));
}

#[test]
fn quiet_market_activates_nothing() {
    let mut camp = Campaign::new(quiet(small_config(44, 3))).unwrap();
    let report = camp.run().unwrap();
    assert_eq!(report.rows.len(), 21);
    assert!(report.rows.iter().all(|r| !r.activated && r.profit.is_none()));
    assert!(report.results.is_empty() && report.summary().is_none());

    let dir = tmp_dir("quiet");
    emit_report(&report, &dir).unwrap();
    assert_eq!(read(&dir.join("settlements.csv")).lines().count(), 1);
    assert_eq!(read(&dir.join("hourly_offers.csv")).lines().count(), 1);
    let rep = read(&dir.join("report.csv"));
    assert_eq!(rep.lines().count(), 23);
    assert_eq!(rep.lines().last().unwrap(), "mean,0,,,,,,,,");
}

#[test]
fn empty_campaign_writes_headers_only() {
    let dir = tmp_dir("empty");
    emit_report(&CampaignReport::default(), &dir).unwrap();
    assert_eq!(read(&dir.join("report.csv")), format!("{REPORT_HEADER}\n"));
    assert_eq!(read(&dir.join("hourly_offers.csv")), format!("{HOURLY_OFFERS_HEADER}\n"));
    assert_eq!(read(&dir.join("performance.csv")), format!("{PERFORMANCE_HEADER}\n"));
}

#[test]
fn oracle_campaign_realizes_expected_credit() {
    let mut c = small_config(24, 5);
    // A small fleet only pays for itself with a small reward.
    c.planner.fixed_reward = 10.0;
    c.fleet.incentive_max = 40.0;
    c.first_day = Some(NaiveDate::from_ymd_opt(2018, 1, 16).unwrap());
    let mut camp = Campaign::new(c).unwrap();
    let report = camp.run().unwrap();
    assert!(!report.results.is_empty());
    for (row, plan) in report.rows.iter().zip(&report.plans) {
        let Some(r) = report.results.get(&row.date) else { continue };
        assert!((r.credit() - plan.expected_credit()).abs() < 1e-6, "{}", row.date);
        assert!((r.reward - plan.fixed_reward - plan.incentive).abs() < 1e-12);
        assert!((r.profit - (r.credit() - r.reward)).abs() < 1e-9);
        assert!(r.avg_rho == 1.0);
    }
}

#[test]
fn report_aggregates_recompute_from_rows_and_logs() {
    let mut c = small_config(24, 6);
    c.base_case = true;
    c.first_day = Some(NaiveDate::from_ymd_opt(2018, 1, 18).unwrap());
    let mut camp = Campaign::new(c).unwrap();
    let report = camp.run().unwrap();
    assert_eq!(report.rows.len(), 5);
    assert!(report.rows.iter().all(|r| r.activated && r.incentive == 0.0));

    let s = report.summary().unwrap();
    let n = report.rows.len() as f64;
    let mean = |f: fn(&DayRow) -> f64| report.rows.iter().map(f).sum::<f64>() / n;
    assert_eq!(s.activated, 5);
    assert!((s.mean_profit - mean(|r| r.profit.unwrap())).abs() < 1e-9);
    assert!((s.mean_reward - 1000.0).abs() < 1e-9);
    assert!((s.mean_rho - mean(|r| r.avg_rho.unwrap())).abs() < 1e-12);

    // Hourly offer means against the settlement log written to disk.
    let dir = tmp_dir("agg");
    emit_report(&report, &dir).unwrap();
    let log = read(&dir.join("settlements.csv"));
    let mut by_hour = std::collections::BTreeMap::<u32, (f64, f64, f64, f64)>::new();
    for line in log.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = by_hour.entry(f[1].parse().unwrap()).or_default();
        e.0 += 1.0;
        e.1 += f[2].parse::<f64>().unwrap();
        e.2 += f[3].parse::<f64>().unwrap();
        e.3 += f[4].parse::<f64>().unwrap();
    }
    let offers = report.hourly_offers();
    assert_eq!(offers.len(), 13);
    for (h, days, c, d, r) in offers {
        let (k, sc, sd, sr) = by_hour[&h];
        assert_eq!(days as f64, k);
        assert!((c - sc / k).abs() < 1e-9 && (d - sd / k).abs() < 1e-9 && (r - sr / k).abs() < 1e-9);
    }
    assert_eq!(read(&dir.join("plans/2018-01-18.csv")).lines().count(), 15);
}

#[test]
fn single_day_summary_equals_the_day() {
    let mut c = small_config(24, 7);
    c.base_case = true;
    let day = NaiveDate::from_ymd_opt(2018, 1, 17).unwrap();
    c.first_day = Some(day);
    c.last_day = Some(day);
    let report = Campaign::new(c).unwrap().run().unwrap();
    let s = report.summary().unwrap();
    let r = &report.results[&day];
    assert_eq!(s.mean_credit, r.credit());
    assert_eq!(s.mean_profit, r.profit);
    assert_eq!(s.mean_rho, r.avg_rho);
}

#[test]
fn runs_are_byte_identical() {
    let run = |tag: &str| {
        let mut c = small_config(24, 8);
        c.first_day = Some(NaiveDate::from_ymd_opt(2018, 1, 22).unwrap());
        let report = Campaign::new(c).unwrap().run().unwrap();
        let dir = tmp_dir(tag);
        emit_report(&report, &dir).unwrap();
        ["report.csv", "hourly_offers.csv", "performance.csv", "settlements.csv"].map(|f| read(&dir.join(f)))
    };
    assert_eq!(run("det-a"), run("det-b"));
}

#[test]
fn forecasts_ignore_data_after_the_decision_time() {
    let mut c = small_config(24, 9);
    c.forecast_mode = ForecastMode::Sarima;
    let date = NaiveDate::from_ymd_opt(2018, 1, 16).unwrap();
    c.first_day = Some(date);
    c.last_day = Some(date);
    let mut camp = Campaign::new(c).unwrap();
    let fc = camp.forecaster(date).unwrap();
    let before = camp.da_estimates(date, fc.as_ref()).unwrap();
    assert_eq!(before.len(), 13);

    let decision = Campaign::decision_time(date);
    let mut hours = camp.market.hours().to_vec();
    for h in hours.iter_mut().filter(|h| h.timestamp > decision) {
        h.lmp += 500.0;
        h.rmccp *= 3.0;
    }
    camp.market = crate::market_data::MarketSeries::new(hours).unwrap();
    let fc2 = camp.forecaster(date).unwrap();
    let after = camp.da_estimates(date, fc2.as_ref()).unwrap();
    assert_eq!(before, after);
    assert_eq!(after[0].timestamp, decision + Duration::hours(15));
}
