//! Training losses.
//!
//! Every loss maps a model output recorded on a [`Tape`] and a target label
//! to a scalar node. The two constrained losses add one term per adjacent
//! label pair to the cross-entropy:
//!
//! * pairs `k < y` must satisfy `s_k < s_{k+1}` (scores rise towards `y`),
//! * pairs `y <= k < c` must satisfy `s_{k+1} < s_k` (scores fall after `y`).
//!
//! Both are written as a residual `r_k < 0` computed from the sliding
//! `[+1, -1]` difference of the scores, negated on the upper side.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diff::{Tape, Var};
use crate::ordinal::{self, Label, Posterior};
use crate::{Error, Result};

/// Weight and slack of the quadratic penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub epsilon: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            epsilon: 1e-1,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config(alloc::format!(
                "penalty requires lambda >= 0 and epsilon > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Temperature sequence of the extended log-barrier.
///
/// `t` starts at `t_init` and is multiplied by `growth_factor` once per
/// epoch, saturating at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSchedule {
    pub t_init: f64,
    pub growth_factor: f64,
    pub t_max: f64,
    #[serde(default)]
    t_current: Option<f64>,
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self::new(1.0, 1.001, 5.0).expect("default schedule is valid")
    }
}

impl BarrierSchedule {
    pub fn new(t_init: f64, growth_factor: f64, t_max: f64) -> Result<Self> {
        let schedule = Self {
            t_init,
            growth_factor,
            t_max,
            t_current: None,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_init > 0.0) || !(self.growth_factor >= 1.0) || !(self.t_max >= self.t_init) {
            return Err(Error::Config(alloc::format!(
                "barrier schedule requires t_init > 0, growth_factor >= 1, t_max >= t_init, got \
                 ({}, {}, {})",
                self.t_init,
                self.growth_factor,
                self.t_max
            )));
        }
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.t_current.unwrap_or(self.t_init)
    }

    /// Epoch-boundary update: `t <- min(t * growth_factor, t_max)`.
    pub fn step(&mut self) {
        self.t_current = Some(libm::fmin(self.t() * self.growth_factor, self.t_max));
    }

    /// Returns the schedule to `t_init`.
    pub fn reset(&mut self) {
        self.t_current = None;
    }
}

/// Width of the Gaussian soft target used by label distribution learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdConfig {
    pub sigma: f64,
}

impl Default for LdConfig {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

/// Weights of the mean and variance terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MvConfig {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for MvConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.2,
            lambda2: 0.05,
        }
    }
}

/// Softmax temperature applied to the Poisson log-probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoConfig {
    pub tau: f64,
}

impl Default for PoConfig {
    fn default() -> Self {
        Self { tau: 1.0 }
    }
}

fn check_label(classes: usize, y: Label) -> Result<usize> {
    if classes < 2 {
        return Err(Error::TooFewLabels(classes));
    }
    if y.get() == 0 || y.get() > classes {
        return Err(Error::LabelOutOfRange {
            label: y.get(),
            classes,
        });
    }
    Ok(y.index())
}

/// `-ln softmax(s)_y`, through log-sum-exp.
pub fn ce_loss(tape: &mut Tape, scores: Var, y: Label) -> Result<Var> {
    let index = check_label(tape.value(scores).len(), y)?;
    let lse = tape.log_sum_exp(scores)?;
    let target = tape.select(scores, index)?;
    tape.sub(lse, target)
}

/// Quadratic penalty for `a < b` on `delta = a - b`: `(delta + eps)^2` when
/// `delta >= 0`, zero otherwise.
pub fn penalty_h(delta: f64, epsilon: f64) -> f64 {
    penalty_h_with_slope(delta, epsilon).0
}

fn penalty_h_with_slope(delta: f64, epsilon: f64) -> (f64, f64) {
    if delta >= 0.0 {
        let shifted = delta + epsilon;
        (shifted * shifted, 2.0 * shifted)
    } else {
        (0.0, 0.0)
    }
}

/// Breakpoint `-1 / t^2` of the extended log-barrier.
pub fn barrier_breakpoint(t: f64) -> f64 {
    -1.0 / (t * t)
}

/// Extended log-barrier for `r < 0`: `-(1/t) ln(-r)` up to `r = -1/t^2`, then
/// continued linearly with slope `t`.
pub fn barrier_psi(r: f64, t: f64) -> f64 {
    barrier_psi_with_slope(r, t).0
}

/// [`barrier_psi`] and its derivative in `r`.
pub fn barrier_psi_with_slope(r: f64, t: f64) -> (f64, f64) {
    if r <= barrier_breakpoint(t) {
        (-libm::log(-r) / t, -1.0 / (t * r))
    } else {
        (t * r - libm::log(1.0 / (t * t)) / t + 1.0 / t, t)
    }
}

/// Elementwise quadratic penalty on a node.
pub fn penalty_terms(tape: &mut Tape, delta: Var, epsilon: f64) -> Var {
    tape.elementwise(delta, |d| penalty_h_with_slope(d, epsilon))
}

/// Elementwise extended log-barrier on a node.
pub fn barrier_terms(tape: &mut Tape, residuals: Var, t: f64) -> Var {
    let breakpoint = barrier_breakpoint(t);
    tape.piecewise(
        residuals,
        breakpoint,
        |r| (-libm::log(-r) / t, -1.0 / (t * r)),
        |r| (t * r - libm::log(1.0 / (t * t)) / t + 1.0 / t, t),
    )
}

/// Signs turning the left-to-right difference into constraint residuals:
/// `+1` on the `y - 1` pairs below `y`, `-1` on the `c - y` pairs from `y` up.
pub fn constraint_signs(classes: usize, y: Label) -> Result<Vec<f64>> {
    let index = check_label(classes, y)?;
    Ok((0..classes - 1).map(|k| if k < index { 1.0 } else { -1.0 }).collect())
}

/// Residuals `r` of the `c - 1` order constraints about `y`; pair `k` is
/// satisfied iff `r[k] < 0`.
pub fn constraint_residuals(tape: &mut Tape, scores: Var, y: Label) -> Result<Var> {
    let signs = constraint_signs(tape.value(scores).len(), y)?;
    let diff = tape.adjacent_diff(scores)?;
    let signs = tape.leaf(signs);
    tape.mul(diff, signs)
}

/// A constrained loss broken into its parts.
#[derive(Debug, Clone, Copy)]
pub struct ConstrainedLoss {
    pub total: Var,
    pub ce: Var,
    /// Per-pair constraint terms, length `c - 1`, ordered by pair.
    pub terms: Var,
    /// Number of terms on pairs below the target.
    pub below: usize,
    /// Number of terms on pairs at or above the target.
    pub above: usize,
}

fn sides(classes: usize, y: Label) -> (usize, usize) {
    (y.get() - 1, classes - y.get())
}

/// Cross-entropy plus `lambda` times the quadratic penalties of all pairs.
pub fn pn_loss_terms(tape: &mut Tape, scores: Var, y: Label, cfg: &PenaltyConfig) -> Result<ConstrainedLoss> {
    let ce = ce_loss(tape, scores, y)?;
    let residuals = constraint_residuals(tape, scores, y)?;
    let terms = penalty_terms(tape, residuals, cfg.epsilon);
    let penalty = tape.sum(terms);
    let weighted = tape.scale(penalty, cfg.lambda);
    let total = tape.add(ce, weighted)?;
    let (below, above) = sides(tape.value(scores).len(), y);
    Ok(ConstrainedLoss {
        total,
        ce,
        terms,
        below,
        above,
    })
}

pub fn pn_loss(tape: &mut Tape, scores: Var, y: Label, cfg: &PenaltyConfig) -> Result<Var> {
    Ok(pn_loss_terms(tape, scores, y, cfg)?.total)
}

/// Cross-entropy plus the unweighted extended log-barrier of all pairs at temperature `t`.
pub fn elb_loss_terms(tape: &mut Tape, scores: Var, y: Label, t: f64) -> Result<ConstrainedLoss> {
    if !(t > 0.0) {
        return Err(Error::Config(alloc::format!(
            "barrier temperature must be positive, got {t}"
        )));
    }
    let ce = ce_loss(tape, scores, y)?;
    let residuals = constraint_residuals(tape, scores, y)?;
    let terms = barrier_terms(tape, residuals, t);
    let barrier = tape.sum(terms);
    let total = tape.add(ce, barrier)?;
    let (below, above) = sides(tape.value(scores).len(), y);
    Ok(ConstrainedLoss {
        total,
        ce,
        terms,
        below,
        above,
    })
}

pub fn elb_loss(tape: &mut Tape, scores: Var, y: Label, schedule: &BarrierSchedule) -> Result<Var> {
    Ok(elb_loss_terms(tape, scores, y, schedule.t())?.total)
}

/// Cumulative binary target: `1` for labels up to `y`, `0` after.
pub fn ren_targets(classes: usize, y: Label) -> Result<Vec<f64>> {
    let index = check_label(classes, y)?;
    Ok((0..classes).map(|k| if k <= index { 1.0 } else { 0.0 }).collect())
}

/// Mean squared error between squashed outputs in `(0, 1)` and the cumulative target.
pub fn ren_loss(tape: &mut Tape, outputs: Var, y: Label) -> Result<Var> {
    let classes = tape.value(outputs).len();
    let target = ren_targets(classes, y)?;
    let target = tape.leaf(target);
    let err = tape.sub(outputs, target)?;
    let sq = tape.square(err);
    let total = tape.sum(sq);
    Ok(tape.scale(total, 1.0 / classes as f64))
}

/// Threshold used to read a cumulative binary code.
pub const REN_THRESHOLD: f64 = 0.5;

/// Number of outputs above the threshold, at least 1.
pub fn ren_predict(outputs: &[f64]) -> Label {
    Label::new(outputs.iter().filter(|&&o| o > REN_THRESHOLD).count().max(1))
}

/// Discretised Gaussian over label indices centred on `y`.
pub fn ld_targets(classes: usize, y: Label, sigma: f64) -> Result<Vec<f64>> {
    check_label(classes, y)?;
    if !(sigma > 0.0) {
        return Err(Error::Config(alloc::format!("sigma must be positive, got {sigma}")));
    }
    let centre = y.get() as f64;
    // Log-domain normalisation keeps very small sigma from underflowing to 0/0.
    let logits: Vec<f64> = (1..=classes)
        .map(|k| {
            let d = k as f64 - centre;
            -d * d / (2.0 * sigma * sigma)
        })
        .collect();
    Ok(ordinal::softmax(&logits).into_inner())
}

/// `KL(q || softmax(s))` for the Gaussian soft target `q`.
pub fn ld_loss(tape: &mut Tape, scores: Var, y: Label, cfg: &LdConfig) -> Result<Var> {
    let q = ld_targets(tape.value(scores).len(), y, cfg.sigma)?;
    let entropy_term: f64 = q.iter().filter(|&&qk| qk > 0.0).map(|&qk| qk * libm::log(qk)).sum();
    let lse = tape.log_sum_exp(scores)?;
    let q = tape.leaf(q);
    let weighted = tape.mul(q, scores)?;
    let cross = tape.sum(weighted);
    let kl = tape.sub(lse, cross)?;
    Ok(tape.shift(kl, entropy_term))
}

/// Cross-entropy plus `lambda1 / 2 (m - y)^2 + lambda2 v`, with `m` and `v` the
/// mean and variance of the label under `softmax(s)`.
pub fn mv_loss(tape: &mut Tape, scores: Var, y: Label, cfg: &MvConfig) -> Result<Var> {
    let classes = tape.value(scores).len();
    let ce = ce_loss(tape, scores, y)?;
    let lse = tape.log_sum_exp(scores)?;
    let log_p = tape.sub(scores, lse)?;
    let p = tape.exp(log_p);
    let ks = tape.leaf((1..=classes).map(|k| k as f64).collect::<Vec<_>>());
    let pk = tape.mul(p, ks)?;
    let mean = tape.sum(pk);
    let offset = tape.shift(mean, -(y.get() as f64));
    let mean_sq = tape.square(offset);
    let mean_term = tape.scale(mean_sq, cfg.lambda1 / 2.0);
    let centred = tape.sub(ks, mean)?;
    let centred_sq = tape.square(centred);
    let spread = tape.mul(p, centred_sq)?;
    let variance = tape.sum(spread);
    let variance_term = tape.scale(variance, cfg.lambda2);
    let total = tape.add(ce, mean_term)?;
    tape.add(total, variance_term)
}

fn ln_factorials(classes: usize) -> Vec<f64> {
    (1..=classes).map(|k| libm::lgamma(k as f64 + 1.0)).collect()
}

/// Tempered Poisson label logits `(k ln eta - eta - ln k!) / tau`, `k = 1..=c`.
pub fn po_logits(tape: &mut Tape, rate: Var, classes: usize, cfg: &PoConfig) -> Result<Var> {
    if classes < 2 {
        return Err(Error::TooFewLabels(classes));
    }
    if !(cfg.tau > 0.0) {
        return Err(Error::Config(alloc::format!("tau must be positive, got {}", cfg.tau)));
    }
    let eta = tape.value(rate)[0];
    if !(eta > 0.0) {
        return Err(Error::Domain {
            op: "poisson rate",
            node: rate.id(),
            value: eta,
        });
    }
    let ln_rate = tape.ln(rate)?;
    let ks = tape.leaf((1..=classes).map(|k| k as f64).collect::<Vec<_>>());
    let k_ln = tape.mul(ln_rate, ks)?;
    let centred = tape.sub(k_ln, rate)?;
    let norm = tape.leaf(ln_factorials(classes).into_iter().map(|v| -v).collect::<Vec<_>>());
    let logits = tape.add(centred, norm)?;
    Ok(tape.scale(logits, 1.0 / cfg.tau))
}

/// Cross-entropy of the label under the tempered Poisson distribution.
pub fn po_loss(tape: &mut Tape, rate: Var, y: Label, classes: usize, cfg: &PoConfig) -> Result<Var> {
    check_label(classes, y)?;
    let logits = po_logits(tape, rate, classes, cfg)?;
    ce_loss(tape, logits, y)
}

/// Tempered Poisson label logits for a plain rate value.
pub fn po_label_logits(rate: f64, classes: usize, cfg: &PoConfig) -> Result<Vec<f64>> {
    if classes < 2 {
        return Err(Error::TooFewLabels(classes));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain {
            op: "poisson rate",
            node: 0,
            value: rate,
        });
    }
    let ln_rate = libm::log(rate);
    Ok(ln_factorials(classes)
        .iter()
        .enumerate()
        .map(|(i, lf)| ((i + 1) as f64 * ln_rate - rate - lf) / cfg.tau)
        .collect())
}

/// Label distribution implied by a Poisson rate.
pub fn po_distribution(rate: f64, classes: usize, cfg: &PoConfig) -> Result<Posterior> {
    Ok(ordinal::softmax(&po_label_logits(rate, classes, cfg)?))
}

/// Mean of per-sample losses.
pub fn batch_reduce(tape: &mut Tape, losses: &[Var]) -> Result<Var> {
    if losses.is_empty() {
        return Err(Error::Empty("batch"));
    }
    tape.mean(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::LN_2;

    fn eval(build: impl FnOnce(&mut Tape, Var) -> Result<Var>, s: &[f64]) -> f64 {
        let mut tape = Tape::new();
        let v = tape.leaf(s.to_vec());
        let out = build(&mut tape, v).unwrap();
        tape.scalar_value(out)
    }

    #[test]
    fn ce_rejects_bad_labels() {
        let mut tape = Tape::new();
        let s = tape.leaf([0.0, 0.0]);
        assert!(matches!(
            ce_loss(&mut tape, s, Label::new(0)),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            ce_loss(&mut tape, s, Label::new(3)),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn ce_saturates() {
        let v = eval(|t, s| ce_loss(t, s, Label::new(2)), &[0.0, 100.0, 0.0]);
        assert!((0.0..1e-40).contains(&v));
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty_h(-0.5, 0.1), 0.0);
        assert!((penalty_h(0.0, 0.1) - 0.01).abs() < 1e-15);
        assert!((penalty_h(1.0, 0.1) - 1.21).abs() < 1e-12);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(barrier_psi(-1.0, 1.0), 0.0);
        assert_eq!(barrier_psi(0.0, 1.0), 1.0);
        assert!((barrier_psi(-0.25, 2.0) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn schedule_steps_and_saturates() {
        let mut s = BarrierSchedule::default();
        s.step();
        assert!((s.t() - 1.001).abs() < 1e-15);
        let mut s = BarrierSchedule::new(5.0, 1.001, 5.0).unwrap();
        s.step();
        assert_eq!(s.t(), 5.0);
        let mut s = BarrierSchedule::new(2.0, 1.0, 5.0).unwrap();
        s.step();
        assert_eq!(s.t(), 2.0);
        assert!(BarrierSchedule::new(2.0, 0.9, 5.0).is_err());
        assert!(BarrierSchedule::new(6.0, 1.1, 5.0).is_err());
    }

    #[test]
    fn constraint_signs_partition() {
        assert_eq!(constraint_signs(4, Label::new(1)).unwrap(), vec![-1.0, -1.0, -1.0]);
        assert_eq!(constraint_signs(4, Label::new(4)).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(constraint_signs(4, Label::new(2)).unwrap(), vec![1.0, -1.0, -1.0]);
    }

    #[test]
    fn ren_examples() {
        let target = ren_targets(4, Label::new(2)).unwrap();
        assert_eq!(target, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(eval(|t, o| ren_loss(t, o, Label::new(2)), &target), 0.0);
        assert_eq!(ren_predict(&target), Label::new(2));
        assert_eq!(ren_predict(&[1.0; 5]), Label::new(5));
        assert_eq!(ren_predict(&[0.9, 0.6, 0.2, 0.1]), Label::new(2));
        assert_eq!(ren_predict(&[0.1, 0.2]), Label::new(1));
    }

    #[test]
    fn ld_small_sigma_is_one_hot() {
        let q = ld_targets(5, Label::new(3), 1e-3).unwrap();
        assert_eq!(q, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let s = [0.3, -0.1, 1.2, 0.0, 0.5];
        let ld = eval(|t, v| ld_loss(t, v, Label::new(3), &LdConfig { sigma: 1e-3 }), &s);
        let ce = eval(|t, v| ce_loss(t, v, Label::new(3)), &s);
        assert!((ld - ce).abs() < 1e-12);
    }

    #[test]
    fn po_rejects_non_positive_rate() {
        let mut tape = Tape::new();
        let eta = tape.scalar(0.0);
        assert!(matches!(
            po_loss(&mut tape, eta, Label::new(1), 3, &PoConfig::default()),
            Err(Error::Domain { .. })
        ));
        assert!(po_distribution(-1.0, 3, &PoConfig::default()).is_err());
    }

    #[test]
    fn po_high_temperature_is_uniform() {
        let p = po_distribution(3.0, 6, &PoConfig { tau: 1e12 }).unwrap();
        for v in p.probabilities() {
            assert!((v - 1.0 / 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn batch_reduce_examples() {
        let mut tape = Tape::new();
        assert_eq!(batch_reduce(&mut tape, &[]), Err(Error::Empty("batch")));
        let a = tape.scalar(1.0);
        let b = tape.scalar(3.0);
        let one = batch_reduce(&mut tape, &[a]).unwrap();
        assert_eq!(tape.scalar_value(one), 1.0);
        let m = batch_reduce(&mut tape, &[a, b]).unwrap();
        assert_eq!(tape.scalar_value(m), 2.0);
        let m2 = batch_reduce(&mut tape, &[b, a]).unwrap();
        assert_eq!(tape.scalar_value(m2), 2.0);
    }

    #[test]
    fn mv_label_shift_only_moves_mean_term() {
        let s = [0.2, 1.0, -0.4, 0.3];
        let cfg = MvConfig::default();
        let mut tape = Tape::new();
        let v = tape.leaf(s.to_vec());
        let mv2 = mv_loss(&mut tape, v, Label::new(2), &cfg).unwrap();
        let ce2 = ce_loss(&mut tape, v, Label::new(2)).unwrap();
        let mv3 = mv_loss(&mut tape, v, Label::new(3), &cfg).unwrap();
        let ce3 = ce_loss(&mut tape, v, Label::new(3)).unwrap();
        let p = ordinal::softmax(&s);
        let m: f64 = p
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, q)| (i + 1) as f64 * q)
            .sum();
        let extra2 = tape.scalar_value(mv2) - tape.scalar_value(ce2);
        let extra3 = tape.scalar_value(mv3) - tape.scalar_value(ce3);
        let expected = 0.1 * ((m - 3.0).powi(2) - (m - 2.0).powi(2));
        assert!((extra3 - extra2 - expected).abs() < 1e-12);
    }
}
