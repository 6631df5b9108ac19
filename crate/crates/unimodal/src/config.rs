//! Experiment configuration.
//!
//! A minimal config:
//!
//! ```json
//! {
//!   "dataset": { "synthetic": { "classes": 10, "dim": 16, "n": 3000, "noise_sigma": 0.6,
//!                               "embed_seed": 0, "sample_seed": 0 } },
//!   "split": { "fractions": [0.6667, 0.1667, 0.1667], "seed": 0 },
//!   "seeds": [0, 1, 2],
//!   "sweep": ["CE", "PN", { "loss": "ELB", "barrier": { "t_init": 1, "growth_factor": 1.001, "t_max": 5 } }],
//!   "trainer": { "epochs": 300 },
//!   "output_dir": "runs/c10"
//! }
//! ```
//!
//! Each entry of `seeds` is added to the sample, split and trainer seeds, so
//! a sweep over `n` seeds trains every loss on the same `n` dataset draws.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unimodal_core::data::SyntheticSpec;
use unimodal_core::losses::{BarrierSchedule, LdConfig, MvConfig, PenaltyConfig, PoConfig};
use unimodal_core::trainer::{LossKind, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic(SyntheticSpec),
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            fractions: [0.6, 0.2, 0.2],
            seed: 0,
        }
    }
}

/// One swept loss with optional per-loss settings that replace the trainer's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub loss: LossKind,
    /// Table row label; defaults to the loss name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ld: Option<LdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mv: Option<MvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub po: Option<PoConfig>,
}

impl SweepEntry {
    pub fn plain(loss: LossKind) -> Self {
        Self {
            loss,
            name: None,
            barrier: None,
            penalty: None,
            ld: None,
            mv: None,
            po: None,
        }
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.loss.name().to_string())
    }

    /// The trainer settings with this entry's loss and overrides applied.
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        cfg.loss = self.loss;
        if let Some(b) = self.barrier {
            cfg.barrier = b;
        }
        if let Some(p) = self.penalty {
            cfg.penalty = p;
        }
        if let Some(l) = self.ld {
            cfg.ld = l;
        }
        if let Some(m) = self.mv {
            cfg.mv = m;
        }
        if let Some(p) = self.po {
            cfg.po = p;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub sweep: Vec<SweepEntry>,
    /// Shared trainer settings; `loss` is taken from each sweep entry.
    #[serde(default)]
    pub trainer: TrainConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    /// Parses a config document. Sweep entries may be bare loss names.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        if let Some(sweep) = value.get_mut("sweep").and_then(|s| s.as_array_mut()) {
            for entry in sweep.iter_mut() {
                if entry.is_string() {
                    *entry = serde_json::json!({ "loss": entry.take() });
                }
            }
        }
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("field `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative dataset and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let DatasetConfig::Csv { path: p } = &mut cfg.dataset {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.sweep.is_empty() {
            return bad("field `sweep`: at least one loss is required".into());
        }
        if self.seeds.is_empty() {
            return bad("field `seeds`: at least one seed is required".into());
        }
        if self.workers == 0 {
            return bad("field `workers`: must be >= 1".into());
        }
        let f = self.split.fractions;
        if f.iter().any(|x| !(*x > 0.0)) || f.iter().sum::<f64>() > 1.0 + 1e-9 {
            return bad(format!(
                "field `split.fractions`: must be positive with sum <= 1, got {f:?}"
            ));
        }
        if let DatasetConfig::Synthetic(spec) = &self.dataset {
            spec.validate()
                .map_err(|e| CliError::Config(format!("field `dataset.synthetic`: {e}")))?;
        }
        for (i, entry) in self.sweep.iter().enumerate() {
            entry
                .apply(&self.trainer)
                .validate()
                .map_err(|e| CliError::Config(format!("field `sweep[{i}]`: {e}")))?;
        }
        Ok(())
    }

    /// Trainer settings for sweep entry `entry` under seed offset `seed`.
    pub fn train_config(&self, entry: &SweepEntry, seed: u64) -> TrainConfig {
        let mut cfg = entry.apply(&self.trainer);
        cfg.seed = cfg.seed.wrapping_add(seed);
        cfg
    }
}
