use std::path::Path;

use serde::{Deserialize, Serialize};
use wavens_core::ensemble::{PredictionSet, ROW_SUM_TOLERANCE};
use wavens_core::numerics::softmax_in_place;
use wavens_core::Matrix;

use super::{
    check_version, csv_reader, csv_string, fmt_f64, line_of, parse_f64, read_json, sidecar_path,
    write_json, write_text,
};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Probabilities,
    /// Rows are softmaxed on load.
    Logits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionHeader {
    pub format_version: u32,
    pub model_name: String,
    pub class_names: Vec<String>,
    pub num_samples: usize,
    pub kind: ScoreKind,
}

/// One model's scores over a sample list.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub header: PredictionHeader,
    pub sample_ids: Vec<String>,
    pub scores: Matrix,
}

pub fn write_prediction_file(csv_path: &Path, file: &PredictionFile) -> Result<()> {
    let h = &file.header;
    if file.sample_ids.len() != h.num_samples || file.scores.rows() != h.num_samples {
        return Err(CliError::format(
            csv_path,
            "sample count disagrees with header",
        ));
    }
    if file.scores.cols() != h.class_names.len() {
        return Err(CliError::format(
            csv_path,
            "class count disagrees with header",
        ));
    }
    let mut header = vec!["sample_id".to_string()];
    header.extend(h.class_names.iter().cloned());
    let rows = file
        .sample_ids
        .iter()
        .zip(file.scores.row_iter())
        .map(|(id, row)| std::iter::once(id.clone()).chain(row.iter().map(|&v| fmt_f64(v))));
    write_text(csv_path, &csv_string(csv_path, &header, rows)?)?;
    write_json(&sidecar_path(csv_path), h)
}

/// Reads a CSV body and its sidecar; logits come back as probabilities.
pub fn read_prediction_file(csv_path: &Path) -> Result<PredictionFile> {
    let side = sidecar_path(csv_path);
    let mut header: PredictionHeader = read_json(&side)?;
    check_version(&side, header.format_version)?;
    let c = header.class_names.len();
    if c == 0 {
        return Err(CliError::format(&side, "no class names"));
    }

    let mut reader = csv_reader(csv_path)?;
    let columns = reader
        .headers()
        .map_err(|e| CliError::csv(csv_path, e))?
        .clone();
    let expected: Vec<&str> = std::iter::once("sample_id")
        .chain(header.class_names.iter().map(String::as_str))
        .collect();
    if columns.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::format(
            csv_path,
            format!(
                "header {:?} does not match sidecar columns {expected:?}",
                columns.iter().collect::<Vec<_>>()
            ),
        ));
    }

    let mut ids = Vec::with_capacity(header.num_samples);
    let mut values = Vec::with_capacity(header.num_samples * c);
    for record in reader.records() {
        let record = record.map_err(|e| CliError::csv(csv_path, e))?;
        let line = line_of(&record);
        let mut row = record
            .iter()
            .skip(1)
            .map(|f| parse_f64(csv_path, line, f))
            .collect::<Result<Vec<_>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CliError::format(
                csv_path,
                format!("line {line}: non-finite score"),
            ));
        }
        match header.kind {
            ScoreKind::Logits => softmax_in_place(&mut row)?,
            ScoreKind::Probabilities => {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(CliError::format(
                        csv_path,
                        format!("line {line}: probabilities must be nonnegative and sum to 1, got sum {sum}"),
                    ));
                }
            }
        }
        ids.push(record[0].to_string());
        values.extend_from_slice(&row);
    }
    if ids.len() != header.num_samples {
        return Err(CliError::format(
            csv_path,
            format!(
                "sidecar declares {} samples, body has {}",
                header.num_samples,
                ids.len()
            ),
        ));
    }
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::format(
            csv_path,
            format!("duplicate sample id {:?}", w[0]),
        ));
    }
    let scores = Matrix::new(ids.len(), c, values)?;
    header.kind = ScoreKind::Probabilities;
    Ok(PredictionFile {
        header,
        sample_ids: ids,
        scores,
    })
}

/// Loads several models' files into one set. Every file must list the same
/// sample ids in the same order and the same classes.
pub fn load_predictions(paths: &[impl AsRef<Path>]) -> Result<(PredictionSet, Vec<String>)> {
    let first = paths
        .first()
        .ok_or_else(|| CliError::Usage("at least one prediction file is required".into()))?;
    let mut files = Vec::with_capacity(paths.len());
    for p in paths {
        files.push((p.as_ref(), read_prediction_file(p.as_ref())?));
    }
    let (_, reference) = &files[0];
    for (path, f) in &files[1..] {
        if f.header.class_names != reference.header.class_names {
            return Err(CliError::format(
                path,
                format!("class names differ from {}", first.as_ref().display()),
            ));
        }
        if let Some(i) = (0..f.sample_ids.len().max(reference.sample_ids.len()))
            .find(|&i| f.sample_ids.get(i) != reference.sample_ids.get(i))
        {
            return Err(CliError::format(
                path,
                format!(
                    "sample ids differ from {} at row {} ({:?} vs {:?})",
                    first.as_ref().display(),
                    i + 1,
                    f.sample_ids.get(i),
                    reference.sample_ids.get(i)
                ),
            ));
        }
    }
    let ids = reference.sample_ids.clone();
    let class_names = reference.header.class_names.clone();
    let names = files
        .iter()
        .map(|(_, f)| f.header.model_name.clone())
        .collect();
    let matrices = files.into_iter().map(|(_, f)| f.scores).collect();
    Ok((PredictionSet::new(names, class_names, matrices)?, ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(name: &str, ids: &[&str], rows: &[[f64; 2]], kind: ScoreKind) -> PredictionFile {
        PredictionFile {
            header: PredictionHeader {
                format_version: 1,
                model_name: name.into(),
                class_names: vec!["a".into(), "b".into()],
                num_samples: ids.len(),
                kind,
            },
            sample_ids: ids.iter().map(|s| s.to_string()).collect(),
            scores: Matrix::from_rows(rows).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let third = 1.0 / 3.0;
        let f = file(
            "m",
            &["x", "y"],
            &[[third, 1.0 - third], [0.1, 0.9]],
            ScoreKind::Probabilities,
        );
        write_prediction_file(&p, &f).unwrap();
        assert_eq!(read_prediction_file(&p).unwrap(), f);
        let (set, ids) = load_predictions(&[&p]).unwrap();
        assert_eq!((set.num_models(), ids.len()), (1, 2));
    }

    #[test]
    fn logits_are_softmaxed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_prediction_file(&p, &file("m", &["x"], &[[3.0, -1.0]], ScoreKind::Logits)).unwrap();
        let back = read_prediction_file(&p).unwrap();
        let row = back.scores.row(0);
        assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
        assert!((row[0] - 1.0 / (1.0 + (-4.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn bad_rows_and_permuted_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        write_prediction_file(
            &p,
            &file("m", &["x"], &[[0.5, 0.6]], ScoreKind::Probabilities),
        )
        .unwrap();
        let err = read_prediction_file(&p).unwrap_err().to_string();
        assert!(err.contains("bad.csv") && err.contains("line 2"), "{err}");

        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_prediction_file(
            &a,
            &file(
                "a",
                &["x", "y"],
                &[[1.0, 0.0], [0.0, 1.0]],
                ScoreKind::Probabilities,
            ),
        )
        .unwrap();
        write_prediction_file(
            &b,
            &file(
                "b",
                &["y", "x"],
                &[[1.0, 0.0], [0.0, 1.0]],
                ScoreKind::Probabilities,
            ),
        )
        .unwrap();
        let err = load_predictions(&[&a, &b]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("sample ids differ"));
    }

    #[test]
    fn missing_file_is_io() {
        let err = read_prediction_file(Path::new("/nonexistent/m.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
