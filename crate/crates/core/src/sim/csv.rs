//! CSV output of sweep results.
//!
//! Fixed column order `precoder,B,U,L,snr_db,eps,metric,value,stderr,trials`
//! with a header row, `.` decimals and no locale dependence. Floats are
//! written in Rust's shortest round-trip form, so parsing a written file
//! reproduces the rows bit-exactly.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{MetricKind, ResultRow};

pub const CSV_HEADER: &str = "precoder,B,U,L,snr_db,eps,metric,value,stderr,trials";

/// Writes rows in the fixed column order, header first.
pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let levels = match r.levels {
            Some(l) => l.to_string(),
            None => "inf".to_string(),
        };
        let eps = match r.eps {
            Some(e) => e.to_string(),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.precoder, r.b, r.u, levels, r.snr_db, eps, r.metric.tag(), r.value, r.stderr, r.trials
        )?;
    }
    Ok(())
}

/// Writes rows to a file path.
pub fn write_csv_path<P: AsRef<Path>>(rows: &[ResultRow], path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Renders rows to an in-memory CSV string (used by determinism checks).
pub fn rows_to_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Parses a CSV produced by [`write_csv`].
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let reader = BufReader::new(input);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line != CSV_HEADER {
                return Err(Error::Config(format!("unexpected CSV header '{line}'")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Config(format!("line {}: expected 10 fields", lineno + 1)));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("line {}: bad {what} '{s}'", lineno + 1)))
        };
        rows.push(ResultRow {
            precoder: f[0].to_string(),
            b: f[1].parse().map_err(|_| Error::Config(format!("line {}: bad B", lineno + 1)))?,
            u: f[2].parse().map_err(|_| Error::Config(format!("line {}: bad U", lineno + 1)))?,
            levels: match f[3] {
                "inf" => None,
                other => Some(
                    other
                        .parse()
                        .map_err(|_| Error::Config(format!("line {}: bad L", lineno + 1)))?,
                ),
            },
            snr_db: parse_f64(f[4], "snr_db")?,
            eps: if f[5].is_empty() { None } else { Some(parse_f64(f[5], "eps")?) },
            metric: MetricKind::parse(f[6])?,
            value: parse_f64(f[7], "value")?,
            stderr: parse_f64(f[8], "stderr")?,
            trials: f[9]
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad trials", lineno + 1)))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                precoder: "wf".into(),
                b: 128,
                u: 16,
                levels: Some(2),
                snr_db: -3.5,
                eps: None,
                metric: MetricKind::Ber,
                value: 0.012345678901234567,
                stderr: 1.2e-4,
                trials: 20000,
            },
            ResultRow {
                precoder: "squid".into(),
                b: 128,
                u: 16,
                levels: Some(2),
                snr_db: 4.0,
                eps: Some(0.1),
                metric: MetricKind::Ber,
                value: 3.0e-7,
                stderr: 0.0,
                trials: 123456789,
            },
            ResultRow {
                precoder: "zf".into(),
                b: 8,
                u: 2,
                levels: None,
                snr_db: 0.0,
                eps: None,
                metric: MetricKind::AnalyticRate,
                value: 42.0,
                stderr: 0.0,
                trials: 0,
            },
        ]
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(rows_to_csv_string(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn round_trip() {
        let rows = sample_rows();
        let text = rows_to_csv_string(&rows);
        let back = parse_csv(text.as_bytes()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn byte_identical_rerender() {
        let rows = sample_rows();
        assert_eq!(rows_to_csv_string(&rows), rows_to_csv_string(&rows.clone()));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_csv("bogus header\n".as_bytes()).is_err());
        let bad = format!("{CSV_HEADER}\nwf,8,2,inf,0,,ber,0.1\n");
        assert!(parse_csv(bad.as_bytes()).is_err());
    }
}
