use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};

use super::{check_step, MarketDataError, MarketHour, MarketSeries, TIMESTAMP_FORMAT};

pub const MARKET_CSV_HEADER: &str =
    "timestamp,lmp,rmccp,rmpcp,mileage_ratio,regd_up,regd_down,perf_score";

const COLUMNS: [&str; 8] = [
    "timestamp",
    "lmp",
    "rmccp",
    "rmpcp",
    "mileage_ratio",
    "regd_up",
    "regd_down",
    "perf_score",
];

pub fn load_market_csv(path: &Path) -> Result<MarketSeries, MarketDataError> {
    let file = std::fs::File::open(path).map_err(|source| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_market_csv(file)
}

/// Parses market rows, sorts them by timestamp and validates contiguity.
/// Row numbers in errors count data rows from 1 in file order.
pub fn read_market_csv<R: Read>(reader: R) -> Result<MarketSeries, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(MarketDataError::Header {
            expected: MARKET_CSV_HEADER.to_string(),
            found: header.join(","),
        });
    }

    let mut rows: Vec<(usize, MarketHour)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |k: usize| -> Result<&str, MarketDataError> {
            record.get(k).ok_or(MarketDataError::MissingColumn {
                row,
                column: COLUMNS[k],
            })
        };
        let num = |k: usize| -> Result<f64, MarketDataError> {
            let raw = cell(k)?;
            raw.parse::<f64>().map_err(|_| MarketDataError::Parse {
                row,
                column: COLUMNS[k],
                value: raw.to_string(),
            })
        };
        let ts_raw = cell(0)?;
        let timestamp = parse_timestamp(ts_raw).ok_or_else(|| MarketDataError::Parse {
            row,
            column: "timestamp",
            value: ts_raw.to_string(),
        })?;
        let mut values = [0.0; 6];
        for (k, v) in values.iter_mut().enumerate() {
            *v = num(k + 1)?;
        }
        let perf_score = if cell(7)?.is_empty() { 1.0 } else { num(7)? };
        let [lmp, rmccp, rmpcp, mileage_ratio, regd_up, regd_down] = values;
        let hour = MarketHour {
            timestamp,
            lmp,
            rmccp,
            rmpcp,
            mileage_ratio,
            regd_up,
            regd_down,
            perf_score,
        };
        hour.validate()
            .map_err(|msg| MarketDataError::Invariant { row, msg })?;
        rows.push((row, hour));
    }
    if rows.is_empty() {
        return Err(MarketDataError::Empty);
    }

    rows.sort_by_key(|(_, h)| h.timestamp);
    for w in rows.windows(2) {
        check_step(&w[0].1, &w[1].1, w[1].0)?;
    }
    MarketSeries::new(rows.into_iter().map(|(_, h)| h).collect())
}

/// Parses `YYYY-MM-DDTHH:00`.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let ts = NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M").ok()?;
    (ts.minute() == 0).then_some(ts)
}

pub fn write_market_csv<W: Write>(series: &MarketSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MARKET_CSV_HEADER}")?;
    for h in series.hours() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            h.timestamp.format(TIMESTAMP_FORMAT),
            h.lmp,
            h.rmccp,
            h.rmpcp,
            h.mileage_ratio,
            h.regd_up,
            h.regd_down,
            h.perf_score
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day_csv(skip_hour: Option<u32>) -> String {
        let mut s = format!("{MARKET_CSV_HEADER}\n");
        for h in 0..24 {
            if Some(h) == skip_hour {
                continue;
            }
            s.push_str(&format!("2018-03-01T{h:02}:00,31.5,20,2,3.1,0.2,0.25,\n"));
        }
        s
    }

    #[test]
    fn well_formed_day() {
        let series = read_market_csv(day_csv(None).as_bytes()).unwrap();
        assert_eq!(series.len(), 24);
        assert_eq!(series.hours()[0].perf_score, 1.0);
        assert_eq!(series.hours()[5].lmp, 31.5);
    }

    #[test]
    fn missing_hour_is_a_gap_at_row_six() {
        let err = read_market_csv(day_csv(Some(5)).as_bytes()).unwrap_err();
        assert!(matches!(err, MarketDataError::Gap { row: 6, .. }), "{err}");
    }

    #[test]
    fn regd_sum_above_one_is_rejected() {
        let text = format!("{MARKET_CSV_HEADER}\n2018-03-01T00:00,1,1,1,1,0.7,0.5,1\n");
        let err = read_market_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, MarketDataError::Invariant { row: 1, .. }), "{err}");
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let text = format!(
            "{MARKET_CSV_HEADER}\n2018-03-01T01:00,2,1,1,1,0.1,0.1,1\n2018-03-01T00:00,1,1,1,1,0.1,0.1,1\n"
        );
        let s = read_market_csv(text.as_bytes()).unwrap();
        assert_eq!(s.hours()[0].lmp, 1.0);
    }

    #[test]
    fn bad_cells_and_headers() {
        let text = format!("{MARKET_CSV_HEADER}\n2018-03-01T00:00,abc,1,1,1,0.1,0.1,1\n");
        assert!(matches!(
            read_market_csv(text.as_bytes()),
            Err(MarketDataError::Parse { row: 1, column: "lmp", .. })
        ));
        let text = format!("{MARKET_CSV_HEADER}\n2018-03-01T00:00,1,1\n");
        assert!(matches!(
            read_market_csv(text.as_bytes()),
            Err(MarketDataError::MissingColumn { row: 1, column: "rmpcp" })
        ));
        let text = "timestamp,lmp\n2018-03-01T00:00,1\n";
        assert!(matches!(
            read_market_csv(text.as_bytes()),
            Err(MarketDataError::Header { .. })
        ));
        let text = format!("{MARKET_CSV_HEADER}\n2018-03-01T00:00,1,1,1,1,0.1,0.1,1\n2018-03-01T00:00,1,1,1,1,0.1,0.1,1\n");
        assert!(matches!(
            read_market_csv(text.as_bytes()),
            Err(MarketDataError::Duplicate { row: 2, .. })
        ));
    }

    #[test]
    fn timestamps_must_be_on_the_hour() {
        assert!(parse_timestamp("2018-03-01T07:00").is_some());
        assert!(parse_timestamp("2018-03-01T07:30").is_none());
        assert!(parse_timestamp("2018-03-01 07:00").is_none());
    }

    #[test]
    fn write_then_read_is_identity() {
        let series = read_market_csv(day_csv(None).as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_market_csv(&series, &mut buf).unwrap();
        assert_eq!(read_market_csv(buf.as_slice()).unwrap(), series);
    }
}
