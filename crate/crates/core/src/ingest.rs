//! Two-column `date,value` CSV ingestion.
//!
//! Dates are ISO-8601 calendar dates and must be strictly increasing; values
//! are positive concentrations. A header row is recognised by a second field
//! that does not parse as a number.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub date: NaiveDate,
    pub value: f64,
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<Observation>> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_observations(&text)
}

pub fn parse_observations(text: &str) -> Result<Vec<Observation>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut out: Vec<Observation> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let malformed = |message: String| Error::MalformedRow { line, message };
        if record.len() != 2 {
            return Err(malformed(format!(
                "expected 2 fields, found {}",
                record.len()
            )));
        }
        let is_header = first && record[1].parse::<f64>().is_err();
        first = false;
        if is_header {
            continue;
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| malformed(format!("bad date {:?}: {e}", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| malformed(format!("bad value {:?}", &record[1])))?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(malformed(format!("value must be positive, got {value}")));
        }
        if let Some(prev) = out.last() {
            if date <= prev.date {
                return Err(Error::NonMonotoneDate {
                    line,
                    date: date.to_string(),
                    previous: prev.date.to_string(),
                });
            }
        }
        out.push(Observation { date, value });
    }
    if out.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least 2 observations, found {}",
            out.len()
        )));
    }
    Ok(out)
}

pub fn values(observations: &[Observation]) -> Vec<f64> {
    observations.iter().map(|o| o.value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let obs = parse_observations("2021-01-01,0.5\n2021-01-08,0.7").unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(values(&obs), vec![0.5, 0.7]);
    }

    #[test]
    fn header_is_skipped() {
        let obs = parse_observations("date,TN\n2021-01-01,0.5\n2021-01-08,0.7\n").unwrap();
        assert_eq!(obs.len(), 2);
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let err = parse_observations("2021-01-01,0.5\n2021-01-01,0.7").unwrap_err();
        assert!(
            matches!(err, Error::NonMonotoneDate { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn negative_value_is_malformed() {
        let err = parse_observations("2021-01-01,0.5\n2021-01-08,-0.1").unwrap_err();
        assert!(
            matches!(err, Error::MalformedRow { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn bad_rows_report_their_line() {
        let err = parse_observations("d,v\n2021-01-01,0.5\n2021-13-08,0.7").unwrap_err();
        assert!(
            matches!(err, Error::MalformedRow { line: 3, .. }),
            "{err:?}"
        );
        let err = parse_observations("2021-01-01,0.5\n2021-01-08").unwrap_err();
        assert!(
            matches!(err, Error::MalformedRow { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            parse_observations("2021-01-01,0.5\n"),
            Err(Error::DegenerateSample(_))
        ));
    }
}
