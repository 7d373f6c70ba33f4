use std::f64::consts::PI;

use chrono::{Duration, NaiveDate, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Field, MarketHour, MarketSeries};
use crate::kv::{KvError, KvFile};

/// Daily cosine profile plus AR(1) noise for one market column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesShape {
    pub mean: f64,
    pub amplitude: f64,
    /// Hour of day at which the cosine peaks.
    pub peak_hour: f64,
    /// AR(1) coefficient of the noise process.
    pub ar: f64,
    /// Standard deviation of the noise innovations.
    pub noise: f64,
}

impl SeriesShape {
    const fn new(mean: f64, amplitude: f64, peak_hour: f64, ar: f64, noise: f64) -> Self {
        SeriesShape {
            mean,
            amplitude,
            peak_hour,
            ar,
            noise,
        }
    }

    fn base(&self, hour_of_day: u32) -> f64 {
        let phase = 2.0 * PI * (f64::from(hour_of_day) - self.peak_hour) / 24.0;
        self.mean + self.amplitude * phase.cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub lmp: SeriesShape,
    pub rmccp: SeriesShape,
    pub rmpcp: SeriesShape,
    pub mileage_ratio: SeriesShape,
    pub regd_up: SeriesShape,
    pub regd_down: SeriesShape,
    pub perf_score: SeriesShape,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            days: 120,
            lmp: SeriesShape::new(32.0, 10.0, 17.0, 0.8, 3.0),
            rmccp: SeriesShape::new(22.0, 8.0, 18.0, 0.8, 3.0),
            rmpcp: SeriesShape::new(2.5, 1.0, 18.0, 0.7, 0.4),
            mileage_ratio: SeriesShape::new(3.0, 0.8, 12.0, 0.7, 0.3),
            regd_up: SeriesShape::new(0.22, 0.03, 9.0, 0.6, 0.03),
            regd_down: SeriesShape::new(0.22, 0.03, 21.0, 0.6, 0.03),
            perf_score: SeriesShape::new(1.0, 0.0, 0.0, 0.0, 0.0),
        }
    }
}

impl SynthConfig {
    pub fn hours(&self) -> usize {
        self.days * 24
    }

    pub fn shape(&self, field: Field) -> &SeriesShape {
        match field {
            Field::Lmp => &self.lmp,
            Field::Rmccp => &self.rmccp,
            Field::Rmpcp => &self.rmpcp,
            Field::MileageRatio => &self.mileage_ratio,
            Field::RegdUp => &self.regd_up,
            Field::RegdDown => &self.regd_down,
            Field::PerfScore => &self.perf_score,
        }
    }

    fn shape_mut(&mut self, field: Field) -> &mut SeriesShape {
        match field {
            Field::Lmp => &mut self.lmp,
            Field::Rmccp => &mut self.rmccp,
            Field::Rmpcp => &mut self.rmpcp,
            Field::MileageRatio => &mut self.mileage_ratio,
            Field::RegdUp => &mut self.regd_up,
            Field::RegdDown => &mut self.regd_down,
            Field::PerfScore => &mut self.perf_score,
        }
    }

    /// Reads `start`, `days` and `<column>.{mean,amplitude,peak_hour,ar,noise}`
    /// from `section`, keeping defaults for absent keys.
    pub fn from_kv(kv: &KvFile, section: &str) -> Result<Self, KvError> {
        let mut cfg = SynthConfig::default();
        if let Some(start) = kv.raw(section, "start") {
            cfg.start = NaiveDate::parse_from_str(start, "%Y-%m-%d").map_err(|_| KvError::Value {
                section: section.into(),
                key: "start".into(),
                value: start.into(),
            })?;
        }
        cfg.days = kv.get_or(section, "days", cfg.days)?;
        for field in Field::ALL {
            let name = field.name();
            let shape = cfg.shape_mut(field);
            shape.mean = kv.get_or(section, &format!("{name}.mean"), shape.mean)?;
            shape.amplitude = kv.get_or(section, &format!("{name}.amplitude"), shape.amplitude)?;
            shape.peak_hour = kv.get_or(section, &format!("{name}.peak_hour"), shape.peak_hour)?;
            shape.ar = kv.get_or(section, &format!("{name}.ar"), shape.ar)?;
            shape.noise = kv.get_or(section, &format!("{name}.noise"), shape.noise)?;
        }
        Ok(cfg)
    }
}

/// Seeded synthetic market. Each column is its daily profile plus AR(1)
/// noise; columns are then clamped to their valid ranges and the RegD pair
/// is rescaled onto `up + down <= 1`.
pub fn generate_synthetic_market(config: &SynthConfig, seed: u64) -> MarketSeries {
    assert!(config.days >= 2, "synthetic horizon must cover at least 48 hours");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.hours();
    let start = config.start.and_hms_opt(0, 0, 0).expect("midnight exists");

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(Field::ALL.len());
    for field in Field::ALL {
        let shape = config.shape(field);
        let mut noise = 0.0;
        let mut col = Vec::with_capacity(n);
        for t in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise = shape.ar * noise + shape.noise * z;
            let hour = start + Duration::hours(t as i64);
            col.push(shape.base(hour.hour()) + noise);
        }
        columns.push(col);
    }

    let hours = (0..n)
        .map(|t| {
            let v = |f: Field| columns[f as usize][t];
            let mut up = v(Field::RegdUp).clamp(0.0, 1.0);
            let mut down = v(Field::RegdDown).clamp(0.0, 1.0);
            let total = up + down;
            if total > 1.0 {
                up /= total;
                down /= total;
            }
            MarketHour {
                timestamp: start + Duration::hours(t as i64),
                lmp: v(Field::Lmp),
                rmccp: v(Field::Rmccp).max(0.0),
                rmpcp: v(Field::Rmpcp).max(0.0),
                mileage_ratio: v(Field::MileageRatio).max(0.0),
                regd_up: up,
                regd_down: down,
                perf_score: v(Field::PerfScore).clamp(0.0, 1.0),
            }
        })
        .collect();
    MarketSeries::new(hours).expect("generator output satisfies market invariants")
}
