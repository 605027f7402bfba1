use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::Matrix;

/// Image side length expected of whatever upstream extractor produced the
/// features. Images themselves are never decoded here.
pub const IMAGE_SIZE: (usize, usize) = (224, 224);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Features(Vec<f64>),
    ImagePath(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    /// Index into the manifest's class names.
    pub label: usize,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub class_names: Vec<String>,
    /// Declared length of every feature payload.
    pub feature_dim: Option<usize>,
    pub records: Vec<Record>,
}

impl DatasetManifest {
    /// Validates unique ids, label range and feature dimensions.
    pub fn new(
        class_names: Vec<String>,
        feature_dim: Option<usize>,
        records: Vec<Record>,
    ) -> Result<Self> {
        let manifest = Self {
            class_names,
            feature_dim,
            records,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.is_empty() {
            return Err(Error::Empty {
                what: "class names",
            });
        }
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid!("duplicate sample id {:?}", w[0]));
        }
        for r in &self.records {
            if r.label >= self.class_names.len() {
                return Err(Error::LabelOutOfRange {
                    label: r.label,
                    num_classes: self.class_names.len(),
                });
            }
            if let Payload::Features(_) = r.payload {
                preprocess_contract(r, self.feature_dim)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Copies the chosen records, in order, into a manifest with the same
    /// header.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            class_names: self.class_names.clone(),
            feature_dim: self.feature_dim,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Feature matrix and labels; every record must carry features.
    pub fn features(&self) -> Result<(Matrix, Vec<usize>)> {
        let dim = self
            .feature_dim
            .ok_or_else(|| invalid!("manifest declares no feature dimension"))?;
        let mut values = Vec::with_capacity(self.records.len() * dim);
        for r in &self.records {
            values.extend_from_slice(preprocess_contract(r, Some(dim))?);
        }
        Ok((Matrix::new(self.records.len(), dim, values)?, self.labels()))
    }
}

/// Checks a record's feature vector against the declared dimension.
///
/// Resizing images to [`IMAGE_SIZE`] and running the backbone happen
/// upstream; image-path payloads are rejected here.
pub fn preprocess_contract(record: &Record, declared_dim: Option<usize>) -> Result<&[f64]> {
    let features = match &record.payload {
        Payload::Features(f) => f,
        Payload::ImagePath(p) => {
            return Err(invalid!(
                "record {:?} points at image {p:?}; extract {}x{} backbone features upstream",
                record.id,
                IMAGE_SIZE.0,
                IMAGE_SIZE.1
            ))
        }
    };
    let dim = declared_dim.ok_or_else(|| invalid!("manifest declares no feature dimension"))?;
    if features.len() != dim {
        return Err(invalid!(
            "record {:?}: expected {dim} features, got {}",
            record.id,
            features.len()
        ));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("record {:?}: non-finite feature value", record.id));
    }
    Ok(features)
}
