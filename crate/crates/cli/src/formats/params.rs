use std::path::Path;

use serde::{Deserialize, Serialize};
use wavens_core::head::{HeadParams, TrainingHistory};

use super::{check_version, read_json, write_json, FORMAT_VERSION};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub format_version: u32,
    pub rng: String,
    pub class_names: Vec<String>,
    pub params: HeadParams,
    pub history: Option<TrainingHistory>,
}

impl ParamsFile {
    pub fn new(
        class_names: Vec<String>,
        params: HeadParams,
        history: Option<TrainingHistory>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            rng: wavens_core::SeededRng::new(0).algorithm().to_string(),
            class_names,
            params,
            history,
        }
    }
}

pub fn write_params(path: &Path, file: &ParamsFile) -> Result<()> {
    write_json(path, file)
}

/// Reads and revalidates shapes and hyperparameters.
pub fn read_params(path: &Path) -> Result<ParamsFile> {
    let file: ParamsFile = read_json(path)?;
    check_version(path, file.format_version)?;
    let p = &file.params;
    HeadParams::new(p.config.clone(), p.dense.clone(), p.renorm.clone())
        .map_err(|e| CliError::format(path, e.to_string()))?;
    if file.class_names.len() != p.config.num_classes {
        return Err(CliError::format(
            path,
            "class names disagree with the head's output width",
        ));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavens_core::head::HeadConfig;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("head.json");
        let mut config = HeadConfig::new(3, 2);
        config.hidden_dims = [4, 3, 2];
        let file = ParamsFile::new(
            vec!["a".into(), "b".into()],
            HeadParams::init(&config).unwrap(),
            None,
        );
        write_params(&p, &file).unwrap();
        assert_eq!(read_params(&p).unwrap(), file);
    }
}
