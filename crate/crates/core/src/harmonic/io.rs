//! CSV form of a [`TimeSeries`]: header `time_hours,elevation_m`, one sample
//! per LF-terminated line, times non-decreasing.

use std::fs;
use std::path::Path;

use super::types::TimeSeries;
use super::{HarmonicError, Result};

const HEADER: [&str; 2] = ["time_hours", "elevation_m"];

pub fn series_from_csv_str(text: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut times = Vec::new();
    let mut elevations = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| HarmonicError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if !saw_header {
            if record.iter().collect::<Vec<_>>() != HEADER {
                return Err(HarmonicError::Parse {
                    line,
                    message: format!("expected header '{}'", HEADER.join(",")),
                });
            }
            saw_header = true;
            continue;
        }
        if record.len() != 2 {
            return Err(HarmonicError::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let t = parse_field(&record[0], line, HEADER[0])?;
        let y = parse_field(&record[1], line, HEADER[1])?;
        if let Some(&prev) = times.last() {
            if t < prev {
                return Err(HarmonicError::Parse {
                    line,
                    message: format!("time {t} is earlier than the previous sample {prev}"),
                });
            }
        }
        times.push(t);
        elevations.push(y);
    }
    if !saw_header {
        return Err(HarmonicError::Parse {
            line: 1,
            message: "empty file".to_string(),
        });
    }
    if times.is_empty() {
        return Err(HarmonicError::Parse {
            line: 2,
            message: "no samples".to_string(),
        });
    }
    TimeSeries::new(times, elevations)
}

fn parse_field(field: &str, line: usize, column: &str) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| HarmonicError::Parse {
        line,
        message: format!("{column}: '{field}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(HarmonicError::Parse {
            line,
            message: format!("{column}: '{field}' is not finite"),
        });
    }
    Ok(value)
}

pub fn series_to_csv_string(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(24 * series.len() + 32);
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for (t, y) in series.times().iter().zip(series.elevations()) {
        out.push_str(&format!("{t},{y}\n"));
    }
    out
}

pub fn read_series_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let text = fs::read_to_string(path.as_ref())
        .map_err(|e| HarmonicError::Io(format!("{}: {e}", path.as_ref().display())))?;
    series_from_csv_str(&text)
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    fs::write(path.as_ref(), series_to_csv_string(series))
        .map_err(|e| HarmonicError::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_simple_file() {
        let s = series_from_csv_str("time_hours,elevation_m\n0,1.5\n1,-0.25\n").unwrap();
        assert_eq!(s.times(), &[0.0, 1.0]);
        assert_eq!(s.elevations(), &[1.5, -0.25]);
    }

    #[test]
    fn rejects_non_monotonic_time_with_line_number() {
        let err = series_from_csv_str("time_hours,elevation_m\n0,1\n2,1\n1,1\n").unwrap_err();
        match err {
            HarmonicError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equal_times_are_allowed() {
        assert!(series_from_csv_str("time_hours,elevation_m\n0,1\n0,2\n").is_ok());
    }

    #[test]
    fn bad_header_and_fields() {
        let err = series_from_csv_str("t,y\n0,1\n").unwrap_err();
        assert!(matches!(err, HarmonicError::Parse { line: 1, .. }));
        let err = series_from_csv_str("time_hours,elevation_m\n0,abc\n").unwrap_err();
        assert!(matches!(err, HarmonicError::Parse { line: 2, .. }));
        let err = series_from_csv_str("time_hours,elevation_m\n0,1\n1,NaN\n").unwrap_err();
        assert!(matches!(err, HarmonicError::Parse { line: 3, .. }));
        let err = series_from_csv_str("time_hours,elevation_m\n0,1\n1,2,3\n").unwrap_err();
        assert!(matches!(err, HarmonicError::Parse { line: 3, .. }));
        assert!(series_from_csv_str("").is_err());
        assert!(series_from_csv_str("time_hours,elevation_m\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(steps in prop::collection::vec((0.0f64..5.0, -10.0f64..10.0), 1..40)) {
            let mut t = -3.0;
            let mut times = Vec::new();
            let mut elev = Vec::new();
            for (dt, y) in steps {
                t += dt;
                times.push(t);
                elev.push(y);
            }
            let series = TimeSeries::new(times, elev).unwrap();
            let text = series_to_csv_string(&series);
            prop_assert!(text.starts_with("time_hours,elevation_m\n"));
            prop_assert_eq!(series_from_csv_str(&text).unwrap(), series);
        }
    }
}
