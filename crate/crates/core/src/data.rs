//! Datasets, the synthetic ordinal generator and deterministic splitting.
//!
//! Synthetic samples draw a latent `z ~ U[0, 1)`, label it by equal-width
//! bins `1 + floor(z c)` and observe `A phi(z) + noise` with
//! `phi(z) = [z, z^2, sin 2 pi z, cos 2 pi z]`. The embedding `A` depends
//! only on `embed_seed`; latents and noise depend only on `sample_seed`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ordinal::{Label, LabelSpace};
use crate::{Error, Result};

/// Parameters of a synthetic ordinal dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    pub n: usize,
    pub noise_sigma: f64,
    pub embed_seed: u64,
    pub sample_seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::TooFewLabels(self.classes));
        }
        if self.dim == 0 {
            return Err(Error::Config("feature dimension must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("sample count must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic(SyntheticSpec),
    File(String),
    Subset,
}

/// Row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<Label>,
    space: LabelSpace,
    provenance: Provenance,
}

impl Dataset {
    /// Checks shapes, finiteness and the label range.
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<Label>,
        space: LabelSpace,
        provenance: Provenance,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: dim * labels.len(),
            });
        }
        if let Some(i) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::Config(format!("non-finite feature in row {}", i / dim + 1)));
        }
        for &y in &labels {
            space.check(y)?;
        }
        Ok(Self {
            features,
            dim,
            labels,
            space,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> LabelSpace {
        self.space
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Shape {
                    op: "subset",
                    left: self.len(),
                    right: i,
                });
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(features, self.dim, labels, self.space, Provenance::Subset)
    }

    /// Same labels with every feature row replaced by `f(row)`.
    pub fn map_features(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut features = vec![0.0; self.features.len()];
        for (src, dst) in self
            .features
            .chunks_exact(self.dim)
            .zip(features.chunks_exact_mut(self.dim))
        {
            f(src, dst);
        }
        Self {
            features,
            ..self.clone()
        }
    }

    /// Per-class sample counts, index 0 for label 1.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.space.classes()];
        for y in &self.labels {
            counts[y.index()] += 1;
        }
        counts
    }
}

/// `[z, z^2, sin 2 pi z, cos 2 pi z]`.
pub fn latent_features(z: f64) -> [f64; 4] {
    let angle = 2.0 * core::f64::consts::PI * z;
    [z, z * z, libm::sin(angle), libm::cos(angle)]
}

/// Equal-width binning of a latent in `[0, 1)`.
pub fn label_for_latent(z: f64, classes: usize) -> Label {
    let bin = libm::floor(z * classes as f64) as usize;
    Label::from_index(bin.min(classes - 1))
}

/// Row-major `dim x 4` embedding drawn from a standard normal under `embed_seed`.
pub fn embedding_matrix(spec: &SyntheticSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.embed_seed);
    (0..spec.dim * 4).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    generate_with_embedding(spec, &embedding_matrix(spec))
}

/// [`generate`] with a caller-supplied `dim x 4` embedding.
pub fn generate_with_embedding(spec: &SyntheticSpec, embedding: &[f64]) -> Result<Dataset> {
    spec.validate()?;
    if embedding.len() != spec.dim * 4 {
        return Err(Error::LengthMismatch {
            left: embedding.len(),
            right: spec.dim * 4,
        });
    }
    let space = LabelSpace::new(spec.classes)?;
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.sample_seed);
    let mut features = Vec::with_capacity(spec.n * spec.dim);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let z: f64 = rng.random();
        let phi = latent_features(z);
        for row in embedding.chunks_exact(4) {
            let clean: f64 = row.iter().zip(&phi).map(|(a, p)| a * p).sum();
            features.push(clean + noise.sample(&mut rng));
        }
        labels.push(label_for_latent(z, spec.classes));
    }
    Dataset::new(features, spec.dim, labels, space, Provenance::Synthetic(spec.clone()))
}

/// Index sets of a train / validation / test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub stratified: bool,
    pub warnings: Vec<String>,
}

/// Deals `order` into buckets of the given sizes so that every prefix of
/// `order` is spread over the buckets in proportion to their sizes.
fn deal(order: &[usize], sizes: &[usize]) -> Vec<Vec<usize>> {
    let n = order.len();
    let mut buckets: Vec<Vec<usize>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (pos, &item) in order.iter().enumerate() {
        let mut best = None;
        let mut best_deficit = f64::NEG_INFINITY;
        for (j, &size) in sizes.iter().enumerate() {
            if buckets[j].len() >= size {
                continue;
            }
            let deficit = size as f64 * (pos + 1) as f64 / n as f64 - buckets[j].len() as f64;
            if deficit > best_deficit {
                best_deficit = deficit;
                best = Some(j);
            }
        }
        // Sizes sum to n, so some bucket always has room.
        buckets[best.expect("bucket sizes sum to item count")].push(item);
    }
    for b in &mut buckets {
        b.sort_unstable();
    }
    buckets
}

/// Visiting order that groups samples by class, shuffled within each class,
/// or one global shuffle when stratification is off.
fn visit_order(labels: &[Label], classes: usize, stratified: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
        for (i, y) in labels.iter().enumerate() {
            by_class[y.index()].push(i);
        }
        by_class
            .into_iter()
            .flat_map(|mut members| {
                members.shuffle(rng);
                members
            })
            .collect()
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(rng);
        all
    }
}

fn smallest_class(labels: &[Label], classes: usize) -> usize {
    let mut counts = vec![0usize; classes];
    for y in labels {
        counts[y.index()] += 1;
    }
    counts.into_iter().filter(|&c| c > 0).min().unwrap_or(0)
}

/// Stratified, seeded train / validation / test split. Sizes are
/// `round(fraction * n)`; rows not covered by the fractions are left out.
pub fn split(ds: &Dataset, fractions: [f64; 3], seed: u64) -> Result<Split> {
    if fractions.iter().any(|&f| !(f > 0.0)) || fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must be positive and sum to at most 1, got {fractions:?}"
        )));
    }
    let n = ds.len();
    let mut sizes: Vec<usize> = fractions.iter().map(|f| libm::round(f * n as f64) as usize).collect();
    while sizes.iter().sum::<usize>() > n {
        let largest = (0..3).max_by_key(|&j| (sizes[j], j)).unwrap_or(0);
        sizes[largest] -= 1;
    }
    sizes.push(n - sizes.iter().sum::<usize>());
    let parts = sizes[..3].iter().filter(|&&s| s > 0).count();
    let mut warnings = Vec::new();
    let stratified = smallest_class(ds.labels(), ds.space().classes()) >= parts;
    if !stratified {
        warnings.push(format!(
            "a class has fewer than {parts} samples; falling back to an unstratified split"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = visit_order(ds.labels(), ds.space().classes(), stratified, &mut rng);
    let mut buckets = deal(&order, &sizes).into_iter();
    Ok(Split {
        train: buckets.next().unwrap_or_default(),
        validation: buckets.next().unwrap_or_default(),
        test: buckets.next().unwrap_or_default(),
        stratified,
        warnings,
    })
}

/// `k` disjoint folds covering every index, stratified when each class has at least `k` samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folds {
    pub folds: Vec<Vec<usize>>,
    pub stratified: bool,
    pub warnings: Vec<String>,
}

pub fn kfold_indices(labels: &[Label], classes: usize, k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Config(format!(
            "cannot split {} samples into {k} folds",
            labels.len()
        )));
    }
    let n = labels.len();
    let sizes: Vec<usize> = (0..k).map(|i| n / k + usize::from(i < n % k)).collect();
    let stratified = smallest_class(labels, classes) >= k;
    let mut warnings = Vec::new();
    if !stratified {
        warnings.push(format!("a class has fewer than {k} samples; folds are unstratified"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = visit_order(labels, classes, stratified, &mut rng);
    Ok(Folds {
        folds: deal(&order, &sizes),
        stratified,
        warnings,
    })
}
