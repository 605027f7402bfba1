use std::collections::HashMap;
use std::path::Path;

use super::{csv_reader, csv_string, line_of, write_text};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub sample_id: String,
    /// Index into the class names the file was read against.
    pub label: usize,
}

/// `sample_id,label` with labels written as class names.
pub fn write_labels(path: &Path, rows: &[LabelRow], class_names: &[String]) -> Result<()> {
    let header = ["sample_id".to_string(), "label".to_string()];
    let body = rows
        .iter()
        .map(|r| [r.sample_id.clone(), class_names[r.label].clone()]);
    write_text(path, &csv_string(path, &header, body)?)
}

pub fn read_labels(path: &Path, class_names: &[String]) -> Result<Vec<LabelRow>> {
    let mut reader = csv_reader(path)?;
    let columns = reader
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .clone();
    if columns.iter().collect::<Vec<_>>() != ["sample_id", "label"] {
        return Err(CliError::format(path, "expected header sample_id,label"));
    }
    let index: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let line = line_of(&record);
        let label = *index.get(&record[1]).ok_or_else(|| {
            CliError::format(path, format!("line {line}: unknown class {:?}", &record[1]))
        })?;
        if !seen.insert(record[0].to_string()) {
            return Err(CliError::format(
                path,
                format!("line {line}: duplicate sample id {:?}", &record[0]),
            ));
        }
        rows.push(LabelRow {
            sample_id: record[0].to_string(),
            label,
        });
    }
    if rows.is_empty() {
        return Err(CliError::format(path, "no labels"));
    }
    Ok(rows)
}

/// Positions (in prediction order) of the labelled samples, with their
/// labels. Every labelled id must have a prediction.
pub fn align_labels(
    path: &Path,
    sample_ids: &[String],
    labels: &[LabelRow],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let position: HashMap<&str, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut pairs = Vec::with_capacity(labels.len());
    for row in labels {
        let &i = position.get(row.sample_id.as_str()).ok_or_else(|| {
            CliError::format(
                path,
                format!("sample {:?} has no prediction", row.sample_id),
            )
        })?;
        pairs.push((i, row.label));
    }
    pairs.sort_unstable();
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_alignment() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        let names = vec!["Healthy".to_string(), "Rust".to_string()];
        let rows = vec![
            LabelRow {
                sample_id: "b".into(),
                label: 1,
            },
            LabelRow {
                sample_id: "a".into(),
                label: 0,
            },
        ];
        write_labels(&p, &rows, &names).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "sample_id,label\nb,Rust\na,Healthy\n"
        );
        let back = read_labels(&p, &names).unwrap();
        assert_eq!(back, rows);
        let ids: Vec<String> = ["a", "c", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            align_labels(&p, &ids, &back).unwrap(),
            (vec![0, 2], vec![0, 1])
        );
        assert!(read_labels(&p, &names[..1]).is_err());
        assert!(align_labels(&p, &ids[..2], &back).is_err());
    }
}
