//! `evagg`: backtests a workplace EV aggregator bidding into energy and
//! regulation markets.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::{Duration, NaiveDate};
use clap::{Parser, Subcommand};

use evagg_core::campaign::{emit_report, Campaign, CampaignConfig, MarketSource};
use evagg_core::da_planner::{read_da_plan_csv, write_da_plan_csv};
use evagg_core::forecast::{fit_sarima, forecast_steps, seasonal_naive};
use evagg_core::market_data::{
    generate_synthetic_market, write_market_csv, Field, MarketSeries, PreprocessParams, SynthConfig,
};
use evagg_core::rt_operator::{write_settlement_rows, SETTLEMENT_HEADER};

#[derive(Parser)]
#[command(name = "evagg", version, about = "EV aggregator day-ahead planning and real-time bidding backtester")]
struct Cli {
    /// Seed for the synthetic market and the fleet; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Campaign configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full campaign and write the report directory.
    Simulate {
        /// Report directory; defaults to the config's output.
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
    },
    /// Write a synthetic market CSV.
    GenMarket {
        #[arg(long)]
        days: Option<usize>,
        /// First day, YYYY-MM-DD.
        #[arg(long)]
        start: Option<NaiveDate>,
        /// Output file; stdout when absent.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Fit one column's seasonal ARIMA model and print diagnostics and a forecast.
    Fit {
        #[arg(long, default_value = "lmp")]
        field: Field,
        /// Train on the window ending at this day's decision time; defaults
        /// to the last window of the data.
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long, default_value_t = 27)]
        horizon: usize,
    },
    /// Print the day-ahead plan of one day as CSV.
    Plan {
        #[arg(long)]
        date: NaiveDate,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Operate one day from a saved plan and print its settlements.
    Replay {
        #[arg(long)]
        date: NaiveDate,
        /// Plan CSV as written by `plan` or `simulate`.
        #[arg(long, value_name = "FILE")]
        plan: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<CampaignConfig> {
    let mut config = match &cli.config {
        Some(path) => CampaignConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => CampaignConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(config: CampaignConfig, output: Option<PathBuf>) -> Result<()> {
    let dir = output.unwrap_or_else(|| config.output.clone());
    let mut campaign = Campaign::new(config)?;
    let report = campaign.run()?;
    emit_report(&report, &dir)?;
    let activated = report.results.len();
    match report.summary() {
        Some(s) => println!(
            "{} days, {activated} activated; mean credit {:.2}, reward {:.2}, profit {:.2}, rho {:.4}",
            report.rows.len(),
            s.mean_credit,
            s.mean_reward,
            s.mean_profit,
            s.mean_rho
        ),
        None => println!("{} days, none activated", report.rows.len()),
    }
    println!("report written to {}", dir.display());
    Ok(())
}

fn gen_market(
    config: &CampaignConfig,
    seed: Option<u64>,
    days: Option<usize>,
    start: Option<NaiveDate>,
    output: Option<PathBuf>,
) -> Result<()> {
    let (mut synth, config_seed) = match &config.market {
        MarketSource::Synthetic { config, seed } => (config.clone(), *seed),
        MarketSource::Csv(_) => (SynthConfig::default(), 0),
    };
    if let Some(d) = days {
        synth.days = d;
    }
    if let Some(s) = start {
        synth.start = s;
    }
    if synth.days < 2 {
        bail!("--days must be at least 2");
    }
    let market = generate_synthetic_market(&synth, seed.unwrap_or(config_seed));
    let mut out = sink(output.as_deref())?;
    write_market_csv(&market, &mut out)?;
    out.flush()?;
    Ok(())
}

fn fit(config: &CampaignConfig, field: Field, date: Option<NaiveDate>, horizon: usize) -> Result<()> {
    if horizon == 0 {
        bail!("--horizon must be positive");
    }
    let market: MarketSeries = config.load_market()?;
    let hours = config.training_days * 24;
    let window = match date {
        Some(d) => {
            let end = Campaign::decision_time(d);
            market.window(end - Duration::hours(hours as i64 - 1), end + Duration::hours(1))
        }
        None => &market.hours()[market.len().saturating_sub(hours)..],
    };
    if window.len() < hours {
        bail!("training window needs {hours} hours of data, found {}", window.len());
    }
    let spec = config
        .forecast
        .specs
        .get(&field)
        .copied()
        .with_context(|| format!("no model configured for {}", field.name()))?;
    let raw: Vec<f64> = window.iter().map(|h| h.get(field)).collect();
    let prep = PreprocessParams::fit(&raw);
    let transformed = prep.transform(&raw);

    let mut out = io::stdout().lock();
    let last = window[window.len() - 1].timestamp;
    writeln!(out, "field,{}", field.name())?;
    writeln!(out, "spec,{spec}")?;
    writeln!(out, "training,{},{},{}", window[0].timestamp, last, window.len())?;
    writeln!(out, "clip,{},{}", prep.lower(), prep.upper())?;
    writeln!(out, "log_offset,{}", prep.log_offset)?;
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    let forecast = match fit_sarima(&transformed, &spec) {
        Ok(model) => {
            writeln!(out, "ar,{}", join(&model.phi))?;
            writeln!(out, "seasonal_ar,{}", join(&model.seasonal_phi))?;
            writeln!(out, "ma,{}", join(&model.theta))?;
            writeln!(out, "seasonal_ma,{}", join(&model.seasonal_theta))?;
            writeln!(out, "mean,{}", model.mu)?;
            writeln!(out, "sigma2,{}", model.sigma2)?;
            prep.inverse(&forecast_steps(&model, &transformed, horizon)?)
        }
        Err(e) => {
            writeln!(out, "fit_failed,{e}")?;
            seasonal_naive(&raw, horizon)
        }
    };
    writeln!(out, "timestamp,forecast")?;
    for (h, v) in forecast.iter().enumerate() {
        writeln!(out, "{},{v}", last + Duration::hours(h as i64 + 1))?;
    }
    Ok(())
}

fn plan(config: CampaignConfig, date: NaiveDate, output: Option<PathBuf>) -> Result<()> {
    let mut campaign = Campaign::new(config)?;
    let fc = campaign.forecaster(date)?;
    let plan = campaign.plan(date, fc.as_ref())?;
    let mut out = sink(output.as_deref())?;
    write_da_plan_csv(&plan, &mut out)?;
    out.flush()?;
    Ok(())
}

fn replay(config: CampaignConfig, date: NaiveDate, plan_path: &Path, output: Option<PathBuf>) -> Result<()> {
    let file = File::open(plan_path).with_context(|| format!("opening {}", plan_path.display()))?;
    let plan = read_da_plan_csv(file).with_context(|| format!("reading {}", plan_path.display()))?;
    let mut out = sink(output.as_deref())?;
    writeln!(out, "{SETTLEMENT_HEADER}")?;
    if plan.activate {
        let mut campaign = Campaign::new(config)?;
        let fc = campaign.forecaster(date)?;
        let result = campaign.operate(date, &plan, fc.as_ref())?;
        write_settlement_rows(&date.to_string(), &result, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Simulate { output } => simulate(config, output),
        Command::GenMarket { days, start, output } => gen_market(&config, cli.seed, days, start, output),
        Command::Fit { field, date, horizon } => fit(&config, field, date, horizon),
        Command::Plan { date, output } => plan(config, date, output),
        Command::Replay { date, plan: p, output } => replay(config, date, &p, output),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 inside `parse`.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
