//! Hourly market observations: loading, validation, preprocessing and a
//! seeded synthetic generator.

mod csv_io;
mod preprocess;
mod synthetic;

pub use csv_io::{
    load_market_csv, parse_timestamp, read_market_csv, write_market_csv, MARKET_CSV_HEADER,
};
pub use preprocess::{clip_outliers, inverse_log_transform, log_transform, PreprocessParams};
pub use synthetic::{generate_synthetic_market, SeriesShape, SynthConfig};

use chrono::{Duration, NaiveDateTime};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:00";

#[derive(Debug, thiserror::Error)]
pub enum MarketDataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: column `{column}` has unparseable value `{value}`")]
    Parse {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: missing column `{column}`")]
    MissingColumn { row: usize, column: &'static str },
    #[error("row {row}: gap in hourly series, previous hour {previous}")]
    Gap { row: usize, previous: String },
    #[error("row {row}: duplicate hour {timestamp}")]
    Duplicate { row: usize, timestamp: String },
    #[error("row {row}: {msg}")]
    Invariant { row: usize, msg: String },
    #[error("series is empty")]
    Empty,
    #[error("log transform domain error: value {value} + offset {offset} is not positive")]
    LogDomain { value: f64, offset: f64 },
}

/// One hour of market data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketHour {
    pub timestamp: NaiveDateTime,
    /// Locational marginal price, $/MWh. May be negative.
    pub lmp: f64,
    /// Regulation capability clearing price, $/MW-h.
    pub rmccp: f64,
    /// Regulation performance clearing price, $/MW-h.
    pub rmpcp: f64,
    pub mileage_ratio: f64,
    /// Fraction of the hour's regulation energy spent following up (discharge) movement.
    pub regd_up: f64,
    /// Fraction spent following down (charge) movement.
    pub regd_down: f64,
    pub perf_score: f64,
}

impl MarketHour {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("lmp", self.lmp),
            ("rmccp", self.rmccp),
            ("rmpcp", self.rmpcp),
            ("mileage_ratio", self.mileage_ratio),
            ("regd_up", self.regd_up),
            ("regd_down", self.regd_down),
            ("perf_score", self.perf_score),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("{name} is not finite"));
        }
        for (name, v) in [
            ("rmccp", self.rmccp),
            ("rmpcp", self.rmpcp),
            ("mileage_ratio", self.mileage_ratio),
        ] {
            if v < 0.0 {
                return Err(format!("{name} = {v} is negative"));
            }
        }
        for (name, v) in [
            ("regd_up", self.regd_up),
            ("regd_down", self.regd_down),
            ("perf_score", self.perf_score),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.regd_up + self.regd_down > 1.0 + 1e-12 {
            return Err(format!(
                "regd_up + regd_down = {} exceeds 1",
                self.regd_up + self.regd_down
            ));
        }
        Ok(())
    }

    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::Lmp => self.lmp,
            Field::Rmccp => self.rmccp,
            Field::Rmpcp => self.rmpcp,
            Field::MileageRatio => self.mileage_ratio,
            Field::RegdUp => self.regd_up,
            Field::RegdDown => self.regd_down,
            Field::PerfScore => self.perf_score,
        }
    }
}

/// The numeric columns of a [`MarketHour`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Lmp,
    Rmccp,
    Rmpcp,
    MileageRatio,
    RegdUp,
    RegdDown,
    PerfScore,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::Lmp,
        Field::Rmccp,
        Field::Rmpcp,
        Field::MileageRatio,
        Field::RegdUp,
        Field::RegdDown,
        Field::PerfScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Lmp => "lmp",
            Field::Rmccp => "rmccp",
            Field::Rmpcp => "rmpcp",
            Field::MileageRatio => "mileage_ratio",
            Field::RegdUp => "regd_up",
            Field::RegdDown => "regd_down",
            Field::PerfScore => "perf_score",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown column `{s}`"))
    }
}

/// Contiguous, strictly hourly sequence of [`MarketHour`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSeries {
    hours: Vec<MarketHour>,
}

impl MarketSeries {
    /// Validates every hour and the hourly spacing. Row numbers in errors are
    /// 1-based positions in `hours`.
    pub fn new(hours: Vec<MarketHour>) -> Result<Self, MarketDataError> {
        if hours.is_empty() {
            return Err(MarketDataError::Empty);
        }
        for (i, h) in hours.iter().enumerate() {
            h.validate()
                .map_err(|msg| MarketDataError::Invariant { row: i + 1, msg })?;
            if i > 0 {
                check_step(&hours[i - 1], h, i + 1)?;
            }
        }
        Ok(MarketSeries { hours })
    }

    pub fn hours(&self) -> &[MarketHour] {
        &self.hours
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.hours[0].timestamp
    }

    pub fn end(&self) -> NaiveDateTime {
        self.hours[self.hours.len() - 1].timestamp
    }

    /// Position of `ts`, if it lies in the series.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let offset = (ts - self.start()).num_hours();
        if ts < self.start() || (ts - self.start()) != Duration::hours(offset) {
            return None;
        }
        let idx = usize::try_from(offset).ok()?;
        (idx < self.hours.len()).then_some(idx)
    }

    pub fn get(&self, ts: NaiveDateTime) -> Option<&MarketHour> {
        self.index_of(ts).map(|i| &self.hours[i])
    }

    /// Hours with `from <= timestamp < to`.
    pub fn window(&self, from: NaiveDateTime, to: NaiveDateTime) -> &[MarketHour] {
        let clamp = |ts: NaiveDateTime| -> usize {
            if ts <= self.start() {
                0
            } else {
                let h = (ts - self.start()).num_hours();
                usize::try_from(h).unwrap_or(0).min(self.hours.len())
            }
        };
        let (a, b) = (clamp(from), clamp(to));
        &self.hours[a..b.max(a)]
    }

    pub fn column(&self, field: Field) -> Vec<f64> {
        self.hours.iter().map(|h| h.get(field)).collect()
    }
}

fn check_step(prev: &MarketHour, cur: &MarketHour, row: usize) -> Result<(), MarketDataError> {
    let step = cur.timestamp - prev.timestamp;
    if step == Duration::hours(1) {
        Ok(())
    } else if step == Duration::zero() {
        Err(MarketDataError::Duplicate {
            row,
            timestamp: cur.timestamp.format(TIMESTAMP_FORMAT).to_string(),
        })
    } else {
        Err(MarketDataError::Gap {
            row,
            previous: prev.timestamp.format(TIMESTAMP_FORMAT).to_string(),
        })
    }
}

#[cfg(test)]
pub(crate) fn flat_hour(ts: NaiveDateTime) -> MarketHour {
    MarketHour {
        timestamp: ts,
        lmp: 30.0,
        rmccp: 20.0,
        rmpcp: 2.0,
        mileage_ratio: 3.0,
        regd_up: 0.2,
        regd_down: 0.2,
        perf_score: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ts(h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 2, 26)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
            + Duration::hours(i64::from(h))
    }

    #[test]
    fn contiguous_series_and_lookup() {
        let s = MarketSeries::new((0..30).map(|h| flat_hour(ts(h))).collect()).unwrap();
        assert_eq!(s.len(), 30);
        assert_eq!(s.index_of(ts(25)), Some(25));
        assert_eq!(s.index_of(ts(30)), None);
        assert_eq!(s.window(ts(5), ts(8)).len(), 3);
        assert_eq!(s.window(ts(28), ts(40)).len(), 2);
    }

    #[test]
    fn invariant_violations() {
        let mut h = flat_hour(ts(0));
        h.regd_up = 0.7;
        h.regd_down = 0.5;
        assert!(h.validate().is_err());
        let mut h = flat_hour(ts(0));
        h.lmp = -40.0;
        assert!(h.validate().is_ok());
        h.rmccp = -1.0;
        assert!(h.validate().is_err());
    }

    #[test]
    fn gaps_and_duplicates() {
        let hours = vec![flat_hour(ts(0)), flat_hour(ts(2))];
        assert!(matches!(
            MarketSeries::new(hours),
            Err(MarketDataError::Gap { row: 2, .. })
        ));
        let hours = vec![flat_hour(ts(0)), flat_hour(ts(0))];
        assert!(matches!(
            MarketSeries::new(hours),
            Err(MarketDataError::Duplicate { row: 2, .. })
        ));
    }
}
