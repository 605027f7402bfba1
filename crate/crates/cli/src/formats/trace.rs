use std::path::Path;

use wavens_core::ensemble::TraceRow;

use super::{csv_reader, csv_string, fmt_f64, line_of, parse_f64, write_text};
use crate::error::{CliError, Result};

fn header(models: usize) -> Vec<String> {
    (1..=models)
        .map(|i| format!("wt{i}"))
        .chain(["acc".to_string()])
        .collect()
}

/// `wt1,..,wtM,acc` rows in visiting order.
pub fn trace_csv(path: &Path, models: usize, rows: &[TraceRow]) -> Result<String> {
    let body = rows.iter().map(|r| {
        r.weights
            .iter()
            .map(|&w| fmt_f64(w))
            .chain([fmt_f64(r.accuracy)])
            .collect::<Vec<_>>()
    });
    csv_string(path, &header(models), body)
}

pub fn write_trace(path: &Path, models: usize, rows: &[TraceRow]) -> Result<()> {
    write_text(path, &trace_csv(path, models, rows)?)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut reader = csv_reader(path)?;
    let columns = reader
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .clone();
    let models = columns.len().saturating_sub(1);
    if models == 0 || columns.iter().collect::<Vec<_>>() != header(models) {
        return Err(CliError::format(path, "expected header wt1,..,wtM,acc"));
    }
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| CliError::csv(path, e))?;
            let line = line_of(&record);
            let mut values = record
                .iter()
                .map(|f| parse_f64(path, line, f))
                .collect::<Result<Vec<_>>>()?;
            let accuracy = values.pop().expect("header has acc");
            Ok(TraceRow {
                weights: values,
                accuracy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_header_only() {
        let p = Path::new("grid_trace.csv");
        assert_eq!(trace_csv(p, 3, &[]).unwrap(), "wt1,wt2,wt3,acc\n");
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("grid_trace.csv");
        let rows = vec![
            TraceRow {
                weights: vec![0.0, 1.0],
                accuracy: 98.348018,
            },
            TraceRow {
                weights: vec![0.1, 0.9],
                accuracy: 100.0 / 3.0,
            },
        ];
        write_trace(&p, 2, &rows).unwrap();
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("wt1,wt2,acc\n0.0,1.0,98.348018\n"));
        assert_eq!(read_trace(&p).unwrap(), rows);
    }
}
