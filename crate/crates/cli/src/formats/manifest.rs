use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wavens_core::data::{DatasetManifest, Payload, Record, IMAGE_SIZE};

use super::{
    check_version, csv_reader, csv_string, fmt_f64, line_of, parse_f64, read_json, sidecar_path,
    write_json, write_text, FORMAT_VERSION,
};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Features,
    ImagePath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format_version: u32,
    pub class_names: Vec<String>,
    pub payload: PayloadKind,
    pub feature_dim: Option<usize>,
    /// Input size the upstream feature extractor resized images to.
    pub image_size: [usize; 2],
}

fn feature_columns(dim: usize) -> impl Iterator<Item = String> {
    (0..dim).map(|j| format!("f{j}"))
}

/// `sample_id,label,f0..f{d-1}` or `sample_id,label,image_path`, plus a
/// JSON sidecar.
pub fn write_manifest(csv_path: &Path, manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    let kind = match manifest.records.first().map(|r| &r.payload) {
        Some(Payload::ImagePath(_)) => PayloadKind::ImagePath,
        _ => PayloadKind::Features,
    };
    let mut header = vec!["sample_id".to_string(), "label".to_string()];
    match kind {
        PayloadKind::Features => header.extend(feature_columns(manifest.feature_dim.unwrap_or(0))),
        PayloadKind::ImagePath => header.push("image_path".into()),
    }
    let mut rows = Vec::with_capacity(manifest.len());
    for r in &manifest.records {
        let mut row = vec![r.id.clone(), manifest.class_names[r.label].clone()];
        match (&r.payload, kind) {
            (Payload::Features(f), PayloadKind::Features) => {
                row.extend(f.iter().map(|&v| fmt_f64(v)))
            }
            (Payload::ImagePath(p), PayloadKind::ImagePath) => row.push(p.clone()),
            _ => {
                return Err(CliError::format(
                    csv_path,
                    "manifest mixes feature and image payloads",
                ))
            }
        }
        rows.push(row);
    }
    write_text(csv_path, &csv_string(csv_path, &header, rows)?)?;
    write_json(
        &sidecar_path(csv_path),
        &ManifestHeader {
            format_version: FORMAT_VERSION,
            class_names: manifest.class_names.clone(),
            payload: kind,
            feature_dim: manifest.feature_dim,
            image_size: [IMAGE_SIZE.0, IMAGE_SIZE.1],
        },
    )
}

pub fn read_manifest(csv_path: &Path) -> Result<DatasetManifest> {
    let side = sidecar_path(csv_path);
    let header: ManifestHeader = read_json(&side)?;
    check_version(&side, header.format_version)?;
    if header.image_size != [IMAGE_SIZE.0, IMAGE_SIZE.1] {
        return Err(CliError::format(
            &side,
            format!(
                "image_size {:?}, expected {:?}",
                header.image_size, IMAGE_SIZE
            ),
        ));
    }
    let mut reader = csv_reader(csv_path)?;
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::csv(csv_path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut expected = vec!["sample_id".to_string(), "label".to_string()];
    match header.payload {
        PayloadKind::Features => {
            let dim = header
                .feature_dim
                .ok_or_else(|| CliError::format(&side, "feature manifest without feature_dim"))?;
            expected.extend(feature_columns(dim));
        }
        PayloadKind::ImagePath => expected.push("image_path".into()),
    }
    if columns != expected {
        return Err(CliError::format(
            csv_path,
            "columns do not match the sidecar header",
        ));
    }
    let index: HashMap<&str, usize> = header
        .class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::csv(csv_path, e))?;
        let line = line_of(&record);
        let label = *index.get(&record[1]).ok_or_else(|| {
            CliError::format(
                csv_path,
                format!("line {line}: unknown class {:?}", &record[1]),
            )
        })?;
        let payload = match header.payload {
            PayloadKind::Features => Payload::Features(
                record
                    .iter()
                    .skip(2)
                    .map(|f| parse_f64(csv_path, line, f))
                    .collect::<Result<_>>()?,
            ),
            PayloadKind::ImagePath => Payload::ImagePath(record[2].to_string()),
        };
        records.push(Record {
            id: record[0].to_string(),
            label,
            payload,
        });
    }
    DatasetManifest::new(header.class_names, header.feature_dim, records)
        .map_err(|e| CliError::format(csv_path, e.to_string()))
}
