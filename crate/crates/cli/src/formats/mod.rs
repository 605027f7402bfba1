//! On-disk formats. CSV bodies carry numbers; JSON sidecars carry headers.
//! Floats are written in Rust's shortest round-trip form, so every `f64`
//! survives a write/read cycle bit for bit.

mod labels;
mod manifest;
mod params;
mod predictions;
mod trace;
mod weights;

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub use labels::{align_labels, read_labels, write_labels, LabelRow};
pub use manifest::{read_manifest, write_manifest, ManifestHeader, PayloadKind};
pub use params::{read_params, write_params, ParamsFile};
pub use predictions::{
    load_predictions, read_prediction_file, write_prediction_file, PredictionFile,
    PredictionHeader, ScoreKind,
};
pub use trace::{read_trace, trace_csv, write_trace};
pub use weights::{read_weights, weights_json, write_weights};

pub const FORMAT_VERSION: u32 = 1;

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// `preds/model_1.csv` → `preds/model_1.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::json(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::json(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Renders rows to an in-memory CSV document.
pub(crate) fn csv_string<I, R>(path: &Path, header: &[String], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::csv(path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::format(path, e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::format(path, e.to_string()))
}

pub(crate) fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| CliError::format(path, format!("line {line}: {field:?} is not a number")))
}

pub(crate) fn check_version(path: &Path, version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(CliError::format(
            path,
            format!("unsupported format_version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

pub(crate) fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}
