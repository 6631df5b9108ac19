//! MAE, the Sides Order Index and per-pair violation counts.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ordinal::Label;
use crate::{Error, Result};

/// Mean absolute difference between predicted and true labels.
pub fn mae(predictions: &[Label], truths: &[Label]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("mae input"));
    }
    let total: usize = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| p.get().abs_diff(t.get()))
        .sum();
    Ok(total as f64 / predictions.len() as f64)
}

/// Which pairs of `values` are correctly ordered about `nu`: rising strictly
/// up to `nu`, falling strictly after it. Ties are violations.
pub fn ordered_pairs(values: &[f64], nu: Label) -> Result<impl Iterator<Item = bool> + '_> {
    let c = values.len();
    if c < 2 {
        return Err(Error::TooFewLabels(c));
    }
    if nu.get() == 0 || nu.get() > c {
        return Err(Error::LabelOutOfRange {
            label: nu.get(),
            classes: c,
        });
    }
    let split = nu.index();
    Ok(values.windows(2).enumerate().map(move |(j, w)| {
        if j < split {
            w[0] - w[1] < 0.0
        } else {
            w[1] - w[0] < 0.0
        }
    }))
}

/// Number of satisfied adjacent-order constraints about `nu`.
pub fn soi_count(values: &[f64], nu: Label) -> Result<usize> {
    Ok(ordered_pairs(values, nu)?.filter(|&ok| ok).count())
}

/// Fraction of the `c - 1` adjacent pairs ordered about `nu`.
pub fn soi(values: &[f64], nu: Label) -> Result<f64> {
    Ok(soi_count(values, nu)? as f64 / (values.len() - 1) as f64)
}

/// Reference label used by the dataset-level SOI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Predicted,
    True,
}

/// One evaluated sample: the model's distribution over labels plus both labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    /// Posterior over labels, or any strictly increasing transform of it
    /// (log-probabilities); only the order of adjacent entries is read.
    pub distribution: Vec<f64>,
    pub predicted: Label,
    pub truth: Label,
}

impl Evaluated {
    fn reference(&self, reference: Reference) -> Label {
        match reference {
            Reference::Predicted => self.predicted,
            Reference::True => self.truth,
        }
    }
}

/// Mean per-sample SOI.
pub fn soi_dataset(samples: &[Evaluated], reference: Reference) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut total = 0.0;
    for s in samples {
        total += soi(&s.distribution, s.reference(reference))?;
    }
    Ok(total / samples.len() as f64)
}

/// Per-pair count of samples whose order about `reference` is violated.
pub fn violation_histogram(samples: &[Evaluated], reference: Reference) -> Result<Vec<usize>> {
    let first = samples.first().ok_or(Error::Empty("evaluation set"))?;
    let pairs = first.distribution.len().saturating_sub(1);
    let mut counts = vec![0; pairs];
    for s in samples {
        if s.distribution.len() != first.distribution.len() {
            return Err(Error::LengthMismatch {
                left: first.distribution.len(),
                right: s.distribution.len(),
            });
        }
        for (count, ok) in counts
            .iter_mut()
            .zip(ordered_pairs(&s.distribution, s.reference(reference))?)
        {
            if !ok {
                *count += 1;
            }
        }
    }
    Ok(counts)
}

/// Metrics of one evaluation pass. SOI values are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub soi_predicted: f64,
    pub soi_true: f64,
    /// Violations per adjacent pair, relative to each sample's predicted label.
    pub violations: Vec<usize>,
    pub n_samples: usize,
}

impl MetricsReport {
    pub fn from_samples(samples: &[Evaluated]) -> Result<Self> {
        let predicted: Vec<Label> = samples.iter().map(|s| s.predicted).collect();
        let truths: Vec<Label> = samples.iter().map(|s| s.truth).collect();
        Ok(Self {
            mae: mae(&predicted, &truths)?,
            soi_predicted: soi_dataset(samples, Reference::Predicted)?,
            soi_true: soi_dataset(samples, Reference::True)?,
            violations: violation_histogram(samples, Reference::Predicted)?,
            n_samples: samples.len(),
        })
    }
}
