//! Plan files: one row per operating hour under [`DA_PLAN_HEADER`], then a
//! final row
//! `summary,activate,interval,incentive,fixed_reward,credit_e,credit_r,expected_profit,infeasible`
//! where `activate` is 0/1 and `infeasible` lists interval indices joined by `;`.
//! Numbers use the shortest representation that reads back exactly.

use std::io::{Read, Write};

use super::{DaPlan, HourPlan, PlanError};

pub const DA_PLAN_HEADER: &str = "hour,p_ch,p_dis,p_reg,delta,p_agg_ch,p_agg_dis,e_agg,e_agg_dep";

pub fn write_da_plan_csv<W: Write>(plan: &DaPlan, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DA_PLAN_HEADER}")?;
    for h in &plan.schedule {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            h.hour,
            h.p_ch,
            h.p_dis,
            h.p_reg,
            u8::from(h.charging),
            h.p_agg_ch,
            h.p_agg_dis,
            h.e_agg,
            h.e_agg_dep
        )?;
    }
    let infeasible: Vec<String> = plan.infeasible_intervals.iter().map(usize::to_string).collect();
    writeln!(
        out,
        "summary,{},{},{},{},{},{},{},{}",
        u8::from(plan.activate),
        plan.interval,
        plan.incentive,
        plan.fixed_reward,
        plan.credit_energy,
        plan.credit_regulation,
        plan.expected_profit,
        infeasible.join(";")
    )
}

pub fn read_da_plan_csv<R: Read>(reader: R) -> Result<DaPlan, PlanError> {
    let err = |m: String| PlanError::Format(m);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| err(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != DA_PLAN_HEADER {
        return Err(err("unexpected header".into()));
    }
    let mut schedule = Vec::new();
    let mut summary = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if summary.is_some() {
            return Err(err(format!("row {}: data after summary", row + 1)));
        }
        let num = |i: usize| -> Result<f64, PlanError> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| err(format!("row {}: bad number `{}`", row + 1, &rec[i])))
        };
        let int = |i: usize| -> Result<usize, PlanError> {
            rec[i]
                .parse::<usize>()
                .map_err(|_| err(format!("row {}: bad integer `{}`", row + 1, &rec[i])))
        };
        let flag = |i: usize| -> Result<bool, PlanError> {
            match &rec[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(format!("row {}: bad flag `{other}`", row + 1))),
            }
        };
        if &rec[0] == "summary" {
            let infeasible = rec[8]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| err(format!("bad interval `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            summary = Some((
                flag(1)?,
                int(2)?,
                num(3)?,
                num(4)?,
                num(5)?,
                num(6)?,
                num(7)?,
                infeasible,
            ));
        } else {
            schedule.push(HourPlan {
                hour: int(0)? as u32,
                p_ch: num(1)?,
                p_dis: num(2)?,
                p_reg: num(3)?,
                charging: flag(4)?,
                p_agg_ch: num(5)?,
                p_agg_dis: num(6)?,
                e_agg: num(7)?,
                e_agg_dep: num(8)?,
            });
        }
    }
    let (activate, interval, incentive, fixed_reward, credit_energy, credit_regulation, expected_profit, infeasible) =
        summary.ok_or_else(|| err("missing summary row".into()))?;
    Ok(DaPlan {
        activate,
        interval,
        incentive,
        fixed_reward,
        credit_energy,
        credit_regulation,
        expected_profit,
        schedule,
        infeasible_intervals: infeasible,
    })
}
