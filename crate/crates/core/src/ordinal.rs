//! Label space, posterior container, the adjacent difference and prediction rules.
//!
//! Labels are 1-based everywhere in the public interface: a space with
//! `c` labels contains `1..=c`, ordered `1 < 2 < ... < c`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::diff::log_sum_exp;
use crate::{Error, Result};

/// A 1-based ordinal label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(usize);

impl Label {
    /// Wraps a 1-based label. Range is checked against a [`LabelSpace`] by the caller.
    pub const fn new(one_based: usize) -> Self {
        Label(one_based)
    }

    /// Builds a label from a 0-based position.
    pub const fn from_index(index: usize) -> Self {
        Label(index + 1)
    }

    pub const fn get(self) -> usize {
        self.0
    }

    /// 0-based position of the label.
    pub const fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Ordered label set `{1, ..., c}` with `c >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct LabelSpace {
    classes: usize,
}

impl LabelSpace {
    pub fn new(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewLabels(classes));
        }
        Ok(Self { classes })
    }

    pub fn classes(self) -> usize {
        self.classes
    }

    /// Number of adjacent pairs, `c - 1`.
    pub fn pairs(self) -> usize {
        self.classes - 1
    }

    pub fn check(self, label: Label) -> Result<Label> {
        if (1..=self.classes).contains(&label.0) {
            Ok(label)
        } else {
            Err(Error::LabelOutOfRange {
                label: label.0,
                classes: self.classes,
            })
        }
    }

    pub fn labels(self) -> impl Iterator<Item = Label> {
        (1..=self.classes).map(Label)
    }
}

impl TryFrom<usize> for LabelSpace {
    type Error = Error;

    fn try_from(classes: usize) -> Result<Self> {
        Self::new(classes)
    }
}

impl From<LabelSpace> for usize {
    fn from(space: LabelSpace) -> usize {
        space.classes
    }
}

/// A probability vector over a label space.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior(Vec<f64>);

impl Posterior {
    /// Validates non-negativity and unit mass (to 1e-9).
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(Error::TooFewLabels(probabilities.len()));
        }
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(*p >= 0.0)) || libm::fabs(total - 1.0) > 1e-9 {
            return Err(Error::Config(alloc::format!("not a probability vector (sum {total})")));
        }
        Ok(Self(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }
}

/// Max-subtracted softmax of a score vector.
pub fn softmax(scores: &[f64]) -> Posterior {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Posterior(p)
}

/// `s - ln sum exp(s)`: the log of [`softmax`] without underflow to `-inf`.
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(scores);
    scores.iter().map(|s| s - lse).collect()
}

/// Direction of the sliding difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `v[k] - v[k + 1]`
    LeftToRight,
    /// `v[k + 1] - v[k]`
    RightToLeft,
}

/// Differences of adjacent entries, length `c - 1`.
pub fn adjacent_diff(v: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::TooFewLabels(v.len()));
    }
    let sign = match direction {
        Direction::LeftToRight => 1.0,
        Direction::RightToLeft => -1.0,
    };
    Ok(v.windows(2).map(|w| sign * (w[0] - w[1])).collect())
}

/// Label of the largest entry; ties go to the smallest label.
pub fn predict_argmax(values: &[f64]) -> Label {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Label::from_index(best)
}

/// `round(sum k * p_k)` with halves rounded away from zero, clamped to `1..=c`.
pub fn predict_expectation(posterior: &Posterior) -> Label {
    let p = posterior.probabilities();
    let mean: f64 = p.iter().enumerate().map(|(i, pk)| (i + 1) as f64 * pk).sum();
    let rounded = libm::round(mean);
    Label(rounded.clamp(1.0, p.len() as f64) as usize)
}
