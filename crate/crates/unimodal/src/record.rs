//! Stored run records and training curves.
//!
//! A record file is a JSON object:
//!
//! | field | meaning |
//! |---|---|
//! | `schema_version` | [`SCHEMA_VERSION`] |
//! | `name` | table row the run belongs to |
//! | `sweep_index` | position of that row in the sweep |
//! | `seed` | seed offset of the run |
//! | `record` | the trainer's `RunRecord`: config snapshot, per-epoch loss and validation metrics, selected epochs, test metrics, wall time, failure message |
//!
//! SOI values are fractions in `[0, 1]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unimodal_core::trainer::RunRecord;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub schema_version: u32,
    pub name: String,
    pub sweep_index: usize,
    pub seed: u64,
    pub record: RunRecord,
}

/// Why a file in a run directory was not used.
#[derive(Debug, Clone, PartialEq)]
pub enum Skipped {
    Corrupt(String),
    Version(u32),
}

impl RecordFile {
    pub fn file_stem(&self) -> String {
        format!("{:02}-{}-seed{}", self.sweep_index, sanitize(&self.name), self.seed)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("record serialises");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    /// Parses a record, distinguishing unreadable files from other schema versions.
    pub fn parse(text: &str) -> std::result::Result<Self, Skipped> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Skipped::Corrupt(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Skipped::Corrupt("missing schema_version".into()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(Skipped::Version(version.try_into().unwrap_or(u32::MAX)));
        }
        serde_json::from_value(value).map_err(|e| Skipped::Corrupt(e.to_string()))
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Per-epoch rows `(epoch, train_loss, val_mae, val_soi)`.
pub fn curve(record: &RunRecord) -> Vec<[f64; 4]> {
    record
        .epochs
        .iter()
        .map(|e| {
            [
                e.epoch as f64,
                e.train_loss,
                e.validation.mae,
                e.validation.soi_predicted,
            ]
        })
        .collect()
}

/// Trailing moving average over `window` rows; the first rows average what is available.
pub fn smooth(rows: &[[f64; 4]], window: usize) -> Vec<[f64; 4]> {
    let window = window.max(1);
    (0..rows.len())
        .map(|i| {
            let from = (i + 1).saturating_sub(window);
            let span = &rows[from..=i];
            let mut out = [rows[i][0], 0.0, 0.0, 0.0];
            for col in 1..4 {
                out[col] = span.iter().map(|r| r[col]).sum::<f64>() / span.len() as f64;
            }
            out
        })
        .collect()
}

pub fn write_curve(path: &Path, rows: &[[f64; 4]]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "epoch,train_loss,val_mae,val_soi").unwrap();
    for r in rows {
        writeln!(out, "{},{},{},{}", r[0], r[1], r[2], r[3]).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_window() {
        let rows: Vec<[f64; 4]> = (1..=4).map(|i| [i as f64, i as f64, 0.0, 1.0]).collect();
        let s = smooth(&rows, 2);
        assert_eq!(s[0], [1.0, 1.0, 0.0, 1.0]);
        assert_eq!(s[1], [2.0, 1.5, 0.0, 1.0]);
        assert_eq!(s[3], [4.0, 3.5, 0.0, 1.0]);
        assert_eq!(smooth(&rows, 1), rows);
    }

    #[test]
    fn version_and_corruption_are_told_apart() {
        assert!(matches!(RecordFile::parse("{"), Err(Skipped::Corrupt(_))));
        assert_eq!(RecordFile::parse(r#"{"schema_version": 7}"#), Err(Skipped::Version(7)));
        assert!(matches!(
            RecordFile::parse(r#"{"schema_version": 1}"#),
            Err(Skipped::Corrupt(_))
        ));
    }
}
