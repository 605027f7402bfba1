use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavens_core::ensemble::{SweepRow, TraceRow, WeightVector};
use wavens_core::metrics::{EvalReport, RocCurve};

use crate::error::Result;
use crate::formats::{
    csv_string, fmt_f64, read_json, write_json, write_text, write_trace, write_weights,
    FORMAT_VERSION,
};

/// How percentages appear in the CSV tables. `report.json` always keeps
/// full precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Full,
    /// Precision, recall and F1 rounded to whole percent.
    Paper,
}

impl Rounding {
    fn apply(self, v: f64) -> String {
        match self {
            Rounding::Full => fmt_f64(v),
            Rounding::Paper => format!("{}", v.round()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub models: Vec<String>,
    /// Combination weights in model order; `None` for a single model.
    pub weights: Option<Vec<f64>>,
    /// Whether combined scores were row-normalized before ROC and MSE.
    pub normalized: bool,
    pub num_samples: usize,
    pub mse: f64,
    pub report: EvalReport,
}

impl ReportFile {
    pub fn new(
        models: Vec<String>,
        weights: Option<&WeightVector>,
        normalized: bool,
        mse: f64,
        report: EvalReport,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            models,
            weights: weights.map(|w| w.as_slice().to_vec()),
            normalized,
            num_samples: report.confusion.total() as usize,
            mse,
            report,
        }
    }
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    read_json(path)
}

/// Per-class table with a trailing macro row; accuracy sits on the first
/// row only.
pub fn class_table(report: &EvalReport, rounding: Rounding) -> Result<String> {
    let header: Vec<String> = ["class", "precision", "recall", "f1", "support", "accuracy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let names = &report.confusion.class_names;
    let mut rows = Vec::with_capacity(names.len() + 1);
    for (k, score) in report.per_class.classes.iter().enumerate() {
        rows.push(vec![
            names[k].clone(),
            rounding.apply(score.precision),
            rounding.apply(score.recall),
            rounding.apply(score.f1),
            score.support.to_string(),
            if k == 0 {
                fmt_f64(report.accuracy)
            } else {
                String::new()
            },
        ]);
    }
    let m = &report.macro_avg;
    rows.push(vec![
        "Macro Avg.".to_string(),
        rounding.apply(m.precision),
        rounding.apply(m.recall),
        rounding.apply(m.f1),
        report.confusion.total().to_string(),
        String::new(),
    ]);
    csv_string(Path::new("tables.csv"), &header, rows)
}

/// One row per average ensemble: pairs first, then all models.
pub fn sweep_table(rows: &[SweepRow], rounding: Rounding) -> Result<String> {
    let header: Vec<String> = [
        "ensemble_type",
        "model_name",
        "precision",
        "recall",
        "f1",
        "accuracy",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let body = rows.iter().map(|r| {
        let kind = if r.members.len() == 2 { "pair" } else { "all" };
        vec![
            kind.to_string(),
            r.name.clone(),
            rounding.apply(r.macro_avg.precision),
            rounding.apply(r.macro_avg.recall),
            rounding.apply(r.macro_avg.f1),
            fmt_f64(r.accuracy),
        ]
    });
    csv_string(Path::new("ensemble_table.csv"), &header, body)
}

fn roc_csv(curve: &RocCurve) -> Result<String> {
    let header = vec!["fpr".to_string(), "tpr".to_string()];
    csv_string(
        Path::new("roc.csv"),
        &header,
        curve.points.iter().map(|&(f, t)| [fmt_f64(f), fmt_f64(t)]),
    )
}

/// Tuning artifacts to write next to the report.
pub struct TuneArtifacts<'a> {
    pub model_names: &'a [String],
    pub weights: &'a WeightVector,
    pub trace: &'a [TraceRow],
}

/// Writes `report.json`, `tables.csv`, `roc_micro.csv`, one `roc_class<k>.csv`
/// per class with a defined curve, and optionally `weights.json` and
/// `grid_trace.csv`. Returns the written paths.
pub fn emit_report(
    out_dir: &Path,
    report: &ReportFile,
    tune: Option<&TuneArtifacts<'_>>,
    rounding: Rounding,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = out_dir.join(name);
        write_text(&p, &text)?;
        written.push(p);
        Ok(())
    };
    put("tables.csv", class_table(&report.report, rounding)?)?;
    put("roc_micro.csv", roc_csv(&report.report.roc_micro)?)?;
    for (k, curve) in report.report.roc_per_class.iter().enumerate() {
        if let Some(curve) = curve {
            put(&format!("roc_class{k}.csv"), roc_csv(curve)?)?;
        }
    }
    let report_path = out_dir.join("report.json");
    write_json(&report_path, report)?;
    written.push(report_path);
    if let Some(t) = tune {
        let w = out_dir.join("weights.json");
        write_weights(&w, t.model_names, t.weights)?;
        let g = out_dir.join("grid_trace.csv");
        write_trace(&g, t.model_names.len(), t.trace)?;
        written.extend([w, g]);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavens_core::metrics::evaluate;
    use wavens_core::Matrix;

    fn sample_report() -> ReportFile {
        let scores = Matrix::from_rows(&[[0.9, 0.1], [0.3, 0.7], [0.6, 0.4], [0.2, 0.8]]).unwrap();
        let names = vec!["Healthy".to_string(), "Rust".to_string()];
        let report = evaluate(&scores, &[0, 1, 1, 1], &names).unwrap();
        ReportFile::new(vec!["m".into()], None, false, 0.125, report)
    }

    #[test]
    fn report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample_report();
        let files = emit_report(dir.path(), &r, None, Rounding::Full).unwrap();
        assert!(files.iter().all(|f| f.exists()));
        assert_eq!(read_report(&dir.path().join("report.json")).unwrap(), r);
    }

    #[test]
    fn class_table_layout() {
        let r = sample_report();
        let full = class_table(&r.report, Rounding::Full).unwrap();
        let lines: Vec<&str> = full.lines().collect();
        assert_eq!(lines[0], "class,precision,recall,f1,support,accuracy");
        assert_eq!(lines[1], "Healthy,50.0,100.0,66.66666666666667,1,75.0");
        assert!(lines[3].starts_with("Macro Avg.,"));
        let rounded = class_table(&r.report, Rounding::Paper).unwrap();
        assert_eq!(rounded.lines().nth(1).unwrap(), "Healthy,50,100,67,1,75.0");
    }
}
