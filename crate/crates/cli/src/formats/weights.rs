use std::path::Path;

use serde_json::{Map, Number, Value};
use wavens_core::ensemble::WeightVector;

use super::{read_text, write_text};
use crate::error::{CliError, Result};

/// Compact `{"model": weight, ...}` in model order.
pub fn weights_json(model_names: &[String], weights: &WeightVector) -> Result<String> {
    if model_names.len() != weights.len() {
        return Err(CliError::Usage(format!(
            "{} model names for {} weights",
            model_names.len(),
            weights.len()
        )));
    }
    let mut map = Map::new();
    for (name, &w) in model_names.iter().zip(weights.as_slice()) {
        let n = Number::from_f64(w).expect("weights are finite");
        map.insert(name.clone(), Value::Number(n));
    }
    Ok(Value::Object(map).to_string())
}

pub fn write_weights(path: &Path, model_names: &[String], weights: &WeightVector) -> Result<()> {
    let mut text = weights_json(model_names, weights)?;
    text.push('\n');
    write_text(path, &text)
}

/// Weights reordered to `model_names`; the key sets must match exactly.
pub fn read_weights(path: &Path, model_names: &[String]) -> Result<WeightVector> {
    let value: Value =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::json(path, e))?;
    let map = value
        .as_object()
        .ok_or_else(|| CliError::format(path, "expected a JSON object of model weights"))?;
    if map.len() != model_names.len() {
        return Err(CliError::format(
            path,
            format!("{} weights for {} models", map.len(), model_names.len()),
        ));
    }
    let weights = model_names
        .iter()
        .map(|name| {
            map.get(name).and_then(Value::as_f64).ok_or_else(|| {
                CliError::format(path, format!("missing numeric weight for model {name:?}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(weights).map_err(|e| CliError::format(path, e.to_string()))
}
