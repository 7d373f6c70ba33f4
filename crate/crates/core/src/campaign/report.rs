use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::CampaignError;
use crate::da_planner::{write_da_plan_csv, DaPlan};
use crate::rt_operator::{write_settlement_rows, DayResult, SETTLEMENT_HEADER};

pub const REPORT_HEADER: &str =
    "date,activated,interval,incentive,expected_profit,credit_e,credit_r,reward,profit,avg_rho";
pub const HOURLY_OFFERS_HEADER: &str = "hour,days,p_ch,p_dis,p_reg";
pub const PERFORMANCE_HEADER: &str = "hour,days,delta_p_reg,rho";

/// One working day of the campaign. Realized fields are `None` when the
/// fleet was not activated.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRow {
    pub date: NaiveDate,
    pub activated: bool,
    pub interval: usize,
    pub incentive: f64,
    pub expected_profit: f64,
    pub credit_energy: Option<f64>,
    pub credit_regulation: Option<f64>,
    pub reward: Option<f64>,
    pub profit: Option<f64>,
    pub avg_rho: Option<f64>,
}

/// Aggregates over the activated days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub days: usize,
    pub activated: usize,
    pub mean_credit_energy: f64,
    pub mean_credit_regulation: f64,
    pub mean_credit: f64,
    pub mean_reward: f64,
    pub mean_profit: f64,
    pub mean_rho: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignReport {
    pub rows: Vec<DayRow>,
    pub plans: Vec<DaPlan>,
    /// Realized results of the activated days, keyed by date.
    pub results: BTreeMap<NaiveDate, DayResult>,
}

impl CampaignReport {
    pub fn push(&mut self, date: NaiveDate, plan: DaPlan, result: Option<DayResult>) {
        let r = result.as_ref();
        self.rows.push(DayRow {
            date,
            activated: plan.activate,
            interval: plan.interval,
            incentive: plan.incentive,
            expected_profit: plan.expected_profit,
            credit_energy: r.map(|r| r.credit_energy),
            credit_regulation: r.map(|r| r.credit_regulation),
            reward: r.map(|r| r.reward),
            profit: r.map(|r| r.profit),
            avg_rho: r.map(|r| r.avg_rho),
        });
        self.plans.push(plan);
        if let Some(r) = result {
            self.results.insert(date, r);
        }
    }

    /// Means over activated days, recomputed from the day rows. `None` if
    /// nothing was activated.
    pub fn summary(&self) -> Option<Summary> {
        let done: Vec<&DayRow> = self.rows.iter().filter(|r| r.credit_energy.is_some()).collect();
        if done.is_empty() {
            return None;
        }
        let n = done.len() as f64;
        let mean = |f: fn(&DayRow) -> Option<f64>| done.iter().filter_map(|r| f(r)).sum::<f64>() / n;
        let ce = mean(|r| r.credit_energy);
        let cr = mean(|r| r.credit_regulation);
        Some(Summary {
            days: self.rows.len(),
            activated: done.len(),
            mean_credit_energy: ce,
            mean_credit_regulation: cr,
            mean_credit: mean(|r| Some(r.credit_energy? + r.credit_regulation?)),
            mean_reward: mean(|r| r.reward),
            mean_profit: mean(|r| r.profit),
            mean_rho: mean(|r| r.avg_rho),
        })
    }

    /// Mean RT offers by operating hour: `(hour, days, p_ch, p_dis, p_reg)`.
    pub fn hourly_offers(&self) -> Vec<(u32, usize, f64, f64, f64)> {
        let mut acc: BTreeMap<u32, (usize, f64, f64, f64)> = BTreeMap::new();
        for s in self.results.values().flat_map(|r| &r.settlements) {
            let e = acc.entry(s.hour()).or_default();
            e.0 += 1;
            e.1 += s.bids.p_ch;
            e.2 += s.bids.p_dis;
            e.3 += s.bids.p_reg;
        }
        acc.into_iter()
            .map(|(h, (n, c, d, r))| {
                let k = n as f64;
                (h, n, c / k, d / k, r / k)
            })
            .collect()
    }

    /// Mean undelivered regulation and score by operating hour.
    pub fn hourly_performance(&self) -> Vec<(u32, usize, f64, f64)> {
        let mut acc: BTreeMap<u32, (usize, f64, f64)> = BTreeMap::new();
        for s in self.results.values().flat_map(|r| &r.settlements) {
            let e = acc.entry(s.hour()).or_default();
            e.0 += 1;
            e.1 += s.delta_p_reg;
            e.2 += s.rho;
        }
        acc.into_iter()
            .map(|(h, (n, dp, rho))| (h, n, dp / n as f64, rho / n as f64))
            .collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>, CampaignError> {
    File::create(path).map(BufWriter::new).map_err(|source| CampaignError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_report_csv<W: Write>(report: &CampaignReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.date,
            u8::from(r.activated),
            r.interval,
            r.incentive,
            r.expected_profit,
            opt(r.credit_energy),
            opt(r.credit_regulation),
            opt(r.reward),
            opt(r.profit),
            opt(r.avg_rho)
        )?;
    }
    if report.rows.is_empty() {
        return Ok(());
    }
    // Footer: activation count, then means over activated days.
    let activated = report.rows.iter().filter(|r| r.credit_energy.is_some()).count();
    match report.summary() {
        Some(s) => writeln!(
            out,
            "mean,{activated},,,,{},{},{},{},{}",
            s.mean_credit_energy, s.mean_credit_regulation, s.mean_reward, s.mean_profit, s.mean_rho
        ),
        None => writeln!(out, "mean,0,,,,,,,,"),
    }
}

/// Writes `report.csv`, `hourly_offers.csv`, `performance.csv`,
/// `settlements.csv` and one `plans/<date>.csv` per working day.
pub fn emit_report(report: &CampaignReport, dir: &Path) -> Result<(), CampaignError> {
    let plans_dir = dir.join("plans");
    fs::create_dir_all(&plans_dir).map_err(io_at(&plans_dir))?;

    let path = dir.join("report.csv");
    let mut out = create(&path)?;
    write_report_csv(report, &mut out).and_then(|_| out.flush()).map_err(io_at(&path))?;

    let path = dir.join("hourly_offers.csv");
    let mut out = create(&path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{HOURLY_OFFERS_HEADER}")?;
        for (h, n, c, d, r) in report.hourly_offers() {
            writeln!(out, "{h},{n},{c},{d},{r}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_at(&path))?;

    let path = dir.join("performance.csv");
    let mut out = create(&path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{PERFORMANCE_HEADER}")?;
        for (h, n, dp, rho) in report.hourly_performance() {
            writeln!(out, "{h},{n},{dp},{rho}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_at(&path))?;

    let path = dir.join("settlements.csv");
    let mut out = create(&path)?;
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{SETTLEMENT_HEADER}")?;
        for (date, r) in &report.results {
            write_settlement_rows(&date.to_string(), r, &mut *out)?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_at(&path))?;

    for (row, plan) in report.rows.iter().zip(&report.plans) {
        let path = plans_dir.join(format!("{}.csv", row.date));
        let mut out = create(&path)?;
        write_da_plan_csv(plan, &mut out).and_then(|_| out.flush()).map_err(io_at(&path))?;
    }
    Ok(())
}
