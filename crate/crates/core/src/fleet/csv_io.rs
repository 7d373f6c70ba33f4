//! Fleet dump format: one row per EV,
//! `ev,arrival,departure,soc_arrival,soc_departure,<b>_steps...` where each
//! steps cell lists `threshold:value` pairs separated by `;` (empty when the
//! behavior never changes).

use std::io::{Read, Write};

use super::{EvResponse, FleetError, StepFunction};

pub const FLEET_CSV_HEADER: &str = "ev,arrival,departure,soc_arrival,soc_departure,\
arrival_steps,departure_steps,soc_arrival_steps,soc_departure_steps";

pub fn write_fleet_csv<W: Write>(responses: &[EvResponse], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FLEET_CSV_HEADER}")?;
    for (i, r) in responses.iter().enumerate() {
        let fs = r.functions();
        write!(out, "{i}")?;
        for f in fs {
            write!(out, ",{}", f.baseline())?;
        }
        for f in fs {
            let cell: Vec<String> = f
                .thresholds
                .iter()
                .zip(&f.values[1..])
                .map(|(t, v)| format!("{t}:{v}"))
                .collect();
            write!(out, ",{}", cell.join(";"))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_fleet_csv<R: Read>(reader: R) -> Result<Vec<EvResponse>, FleetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let err = |m: String| FleetError::Format(m);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != FLEET_CSV_HEADER {
        return Err(err(format!("unexpected header `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let num = |s: &str| -> Result<f64, FleetError> {
            s.parse::<f64>()
                .map_err(|_| err(format!("row {}: bad number `{s}`", row + 1)))
        };
        let mut fs = Vec::with_capacity(4);
        for k in 0..4 {
            let base = num(&rec[1 + k])?;
            let mut f = StepFunction::constant(base);
            let steps = &rec[5 + k];
            for pair in steps.split(';').filter(|p| !p.is_empty()) {
                let (t, v) = pair
                    .split_once(':')
                    .ok_or_else(|| err(format!("row {}: bad step `{pair}`", row + 1)))?;
                f.thresholds.push(num(t)?);
                f.values.push(num(v)?);
            }
            if f.thresholds.windows(2).any(|w| w[1] < w[0]) {
                return Err(err(format!("row {}: thresholds not sorted", row + 1)));
            }
            fs.push(f);
        }
        let mut it = fs.into_iter();
        let mut next = || it.next().expect("four behaviors");
        out.push(EvResponse {
            arrival: next(),
            departure: next(),
            soc_arrival: next(),
            soc_departure: next(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_fleet, FleetParams};
    use super::*;

    #[test]
    fn dump_and_restore() {
        let params = FleetParams {
            n_ev: 25,
            seed: 3,
            ..FleetParams::default()
        };
        let fleet = generate_fleet(&params).unwrap();
        let mut buf = Vec::new();
        write_fleet_csv(&fleet, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert_eq!(read_fleet_csv(buf.as_slice()).unwrap(), fleet);
    }

    #[test]
    fn rejects_malformed_rows() {
        let text = format!("{FLEET_CSV_HEADER}\n0,9,17,50,90,100:x,,,\n");
        assert!(read_fleet_csv(text.as_bytes()).is_err());
        assert!(read_fleet_csv("a,b\n".as_bytes()).is_err());
    }
}
