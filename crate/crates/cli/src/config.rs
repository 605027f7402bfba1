use std::path::PathBuf;

use wavens_core::ensemble::GridSpec;
use wavens_core::head::HeadConfig;

use crate::error::{CliError, Result};
use crate::report::Rounding;

/// Everything one command needs, checked before any work starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub seed: u64,
    pub grid: Option<GridSpec>,
    pub head: Option<HeadConfig>,
    pub out_dir: PathBuf,
    pub rounding: Rounding,
}

impl RunConfig {
    pub fn new(out_dir: PathBuf) -> Self {
        Self {
            inputs: Vec::new(),
            labels: None,
            seed: 0,
            grid: None,
            head: None,
            out_dir,
            rounding: Rounding::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.inputs.iter().chain(&self.labels) {
            if !p.exists() {
                return Err(CliError::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        if let Some(grid) = &self.grid {
            grid.units()?;
        }
        if let Some(head) = &self.head {
            head.validate()?;
        }
        Ok(())
    }
}
