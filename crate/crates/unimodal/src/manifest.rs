use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unimodal_core::data::Split;

use crate::error::{CliError, Result};

/// The index sets of one split together with the inputs that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: [f64; 3],
    pub stratified: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitManifest {
    pub fn new(split: &Split, fractions: [f64; 3], seed: u64) -> Self {
        Self {
            seed,
            fractions,
            stratified: split.stratified,
            warnings: split.warnings.clone(),
            train: split.train.clone(),
            validation: split.validation.clone(),
            test: split.test.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }
}
