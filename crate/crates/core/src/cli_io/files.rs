//! CSV persistence for decision-value tables and run-length reports, and
//! ingestion of newline-delimited observation streams.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::chart_engine::{DecisionValueTable, TableEntry};
use crate::error::{Error, Result};
use crate::mc_harness::{ArlReport, RunLengthConvention, ShiftScenario};

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    m: usize,
    m0: usize,
    alpha: f64,
    n: usize,
    h: f64,
    sequences: u64,
    seed: u64,
}

pub fn write_table<W: Write>(table: &DecisionValueTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in table.entries() {
        w.serialize(TableRow {
            m: e.m,
            m0: e.m0,
            alpha: e.alpha,
            n: e.n,
            h: e.h,
            sequences: e.sequences,
            seed: e.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(input: R) -> Result<DecisionValueTable> {
    let mut r = csv::Reader::from_reader(input);
    let mut entries = Vec::new();
    for row in r.deserialize::<TableRow>() {
        let row = row?;
        entries.push(TableEntry {
            m: row.m,
            m0: row.m0,
            alpha: row.alpha,
            n: row.n,
            h: row.h,
            sequences: row.sequences,
            seed: row.seed,
        });
    }
    if entries.is_empty() {
        return Err(Error::config("decision-value table file has no rows"));
    }
    DecisionValueTable::from_entries(&entries)
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRow {
    dist: String,
    mu0: f64,
    sigma: f64,
    tau: usize,
    delta: f64,
    m: usize,
    max_n: usize,
    replications: u64,
    seed: u64,
    convention: String,
    arl: f64,
    stderr: f64,
    censored: u64,
    false_alarms: u64,
    runs: u64,
}

pub fn write_reports<W: Write>(reports: &[ArlReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let s = &r.scenario;
        w.serialize(ReportRow {
            dist: s.dist.to_string(),
            mu0: s.mu0,
            sigma: s.sigma,
            tau: s.tau,
            delta: s.delta,
            m: s.m,
            max_n: s.max_n,
            replications: s.replications,
            seed: s.seed,
            convention: r.convention.to_string(),
            arl: r.arl,
            stderr: r.stderr,
            censored: r.censored,
            false_alarms: r.false_alarms,
            runs: r.runs,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports<R: Read>(input: R) -> Result<Vec<ArlReport>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<ReportRow>()
        .map(|row| {
            let row = row?;
            Ok(ArlReport {
                scenario: ShiftScenario {
                    dist: row.dist.parse()?,
                    mu0: row.mu0,
                    sigma: row.sigma,
                    tau: row.tau,
                    delta: row.delta,
                    m: row.m,
                    max_n: row.max_n,
                    replications: row.replications,
                    seed: row.seed,
                },
                convention: row.convention.parse::<RunLengthConvention>()?,
                arl: row.arl,
                stderr: row.stderr,
                censored: row.censored,
                false_alarms: row.false_alarms,
                runs: row.runs,
            })
        })
        .collect()
}

/// Parses one input line (1-based `line_no`); `Ok(None)` for blank lines.
/// With `column = Some(c)` the line is split on commas and field `c`
/// (1-based) is used.
pub fn parse_observation_line(
    line: &str,
    line_no: usize,
    column: Option<usize>,
) -> Result<Option<f64>> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    let field = match column {
        None => trimmed,
        Some(0) => return Err(Error::config("column numbers start at 1")),
        Some(c) => trimmed.split(',').nth(c - 1).map(str::trim).ok_or_else(|| {
            Error::Ingestion(format!("line {line_no}: no column {c} in `{trimmed}`"))
        })?,
    };
    let v: f64 = field
        .parse()
        .map_err(|_| Error::Ingestion(format!("line {line_no}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Ingestion(format!("line {line_no}: `{field}` is not finite")));
    }
    Ok(Some(v))
}

/// Reads one number per line, skipping blank lines. Errors name the
/// offending line.
pub fn read_observations<R: BufRead>(input: R, column: Option<usize>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if let Some(v) = parse_observation_line(&line?, i + 1, column)? {
            out.push(v);
        }
    }
    Ok(out)
}

/// Writes observations one per line in round-trip form.
pub fn write_observations<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    for v in values {
        writeln!(out, "{v:?}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_harness::Dist;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn table_round_trip_is_lossless(
            hs in prop::collection::vec(1e-6f64..1e6, 1..20),
            alpha in 1e-4f64..0.5,
            seed in any::<u64>(),
        ) {
            let points: Vec<(usize, f64)> = hs.iter().enumerate().map(|(i, &h)| (i * 3 + 1, h)).collect();
            let mut t = DecisionValueTable::new();
            t.insert_series(10, 4, alpha, &points, 200_000, seed).unwrap();
            let mut buf = Vec::new();
            write_table(&t, &mut buf).unwrap();
            prop_assert_eq!(read_table(&buf[..]).unwrap(), t);
        }

        #[test]
        fn observation_round_trip_is_lossless(v in prop::collection::vec(-1e300f64..1e300, 0..50)) {
            let mut buf = Vec::new();
            write_observations(&v, &mut buf).unwrap();
            prop_assert_eq!(read_observations(&buf[..], None).unwrap(), v);
        }
    }

    #[test]
    fn report_round_trip() {
        let r = ArlReport {
            scenario: ShiftScenario {
                dist: Dist::StudentT { df: 5.0 },
                ..ShiftScenario::in_control(10, 2000, 10_000, 3).with_shift(50, 0.1 + 0.2)
            },
            convention: RunLengthConvention::DelayWithRestart,
            arl: 1.0 / 3.0,
            stderr: 0.1,
            censored: 2,
            false_alarms: 7,
            runs: 9993,
        };
        let mut buf = Vec::new();
        write_reports(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dist,mu0,sigma,tau,delta,m,max_n,replications,seed,convention,arl,stderr,censored,false_alarms"));
        assert_eq!(read_reports(&buf[..]).unwrap(), vec![r]);
    }

    #[test]
    fn ingestion_errors_name_lines() {
        let err = read_observations("1.0\n\n2.5\nabc\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Ingestion(ref m) if m.contains("line 4")), "{err}");
        let err = read_observations("1.0\nNaN\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Ingestion(ref m) if m.contains("line 2")));
        let v = read_observations("a,1.5\nb,2\n".as_bytes(), Some(2)).unwrap();
        assert_eq!(v, vec![1.5, 2.0]);
        assert!(read_observations("a\n".as_bytes(), Some(2)).is_err());
    }

    #[test]
    fn empty_table_file_rejected() {
        assert!(read_table("m,m0,alpha,n,h,sequences,seed\n".as_bytes()).is_err());
    }
}
