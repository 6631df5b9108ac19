//! Reverse-mode differentiation over dense `f64` vectors.
//!
//! A [`Tape`] records every primitive evaluated during a forward pass as a
//! node holding its value and the links to its operands. [`Tape::backward`]
//! then walks the nodes in reverse insertion order, which is a reverse
//! topological order because operands are always recorded before their
//! consumers.
//!
//! Nodes are vectors; matrices are vectors with a row count attached.
//! Binary operations accept equal lengths or a length-1 operand that is
//! broadcast against the other one. Nothing else broadcasts.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    /// Position of the node on its tape.
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Shift(Var),
    MatVec {
        matrix: Var,
        vector: Var,
    },
    /// Elementwise map whose local derivative was fixed at forward time.
    Elementwise {
        input: Var,
        slope: Vec<f64>,
    },
    Sum(Var),
    LogSumExp {
        input: Var,
        weights: Vec<f64>,
    },
    Select {
        input: Var,
        index: usize,
    },
    AdjacentDiff(Var),
    Concat(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    rows: usize,
    op: Op,
}

/// Append-only record of a forward evaluation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops every node while keeping the allocation for the next step.
    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        let rows = value.len();
        self.push_matrix(value, rows, op)
    }

    fn push_matrix(&mut self, value: Vec<f64>, rows: usize, op: Op) -> Var {
        self.nodes.push(Node { value, rows, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input vector.
    pub fn leaf(&mut self, value: impl Into<Vec<f64>>) -> Var {
        self.push(value.into(), Op::Leaf)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.push(vec![value], Op::Leaf)
    }

    /// Records a row-major `rows x (len / rows)` matrix input.
    pub fn matrix(&mut self, rows: usize, value: impl Into<Vec<f64>>) -> Result<Var> {
        let value = value.into();
        if rows == 0 || value.len() % rows != 0 {
            return Err(Error::Shape {
                op: "matrix",
                left: rows,
                right: value.len(),
            });
        }
        Ok(self.push_matrix(value, rows, Op::Leaf))
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// First (usually only) entry of a node.
    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn broadcast_len(&self, op: &'static str, a: Var, b: Var) -> Result<usize> {
        let (la, lb) = (self.nodes[a.0].value.len(), self.nodes[b.0].value.len());
        match (la, lb) {
            _ if la == lb => Ok(la),
            (1, _) => Ok(lb),
            (_, 1) => Ok(la),
            _ => Err(Error::Shape {
                op,
                left: la,
                right: lb,
            }),
        }
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, record: Op) -> Result<Var> {
        let n = self.broadcast_len(op, a, b)?;
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let value = (0..n)
            .map(|i| {
                f(
                    va[if va.len() == 1 { 0 } else { i }],
                    vb[if vb.len() == 1 { 0 } else { i }],
                )
            })
            .collect();
        Ok(self.push(value, record))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.nodes[a.0].value.iter().map(|x| x * factor).collect();
        self.push(value, Op::Scale(a, factor))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    /// Adds a constant to every entry.
    pub fn shift(&mut self, a: Var, offset: f64) -> Var {
        let value = self.nodes[a.0].value.iter().map(|x| x + offset).collect();
        self.push(value, Op::Shift(a))
    }

    /// Product of a matrix node with a vector node.
    pub fn matvec(&mut self, matrix: Var, vector: Var) -> Result<Var> {
        let m = &self.nodes[matrix.0];
        let v = &self.nodes[vector.0].value;
        let cols = m.value.len() / m.rows;
        if cols != v.len() {
            return Err(Error::Shape {
                op: "matvec",
                left: cols,
                right: v.len(),
            });
        }
        let value = m
            .value
            .chunks_exact(cols)
            .map(|row| row.iter().zip(v).map(|(w, x)| w * x).sum())
            .collect();
        Ok(self.push(value, Op::MatVec { matrix, vector }))
    }

    /// Applies `f`, which returns the value and the local derivative, to each entry.
    pub fn elementwise(&mut self, a: Var, f: impl Fn(f64) -> (f64, f64)) -> Var {
        let (value, slope) = self.nodes[a.0].value.iter().map(|&x| f(x)).unzip();
        self.push(value, Op::Elementwise { input: a, slope })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.elementwise(a, |x| {
            let e = libm::exp(x);
            (e, e)
        })
    }

    /// Natural log; fails on any non-positive entry.
    pub fn ln(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.nodes[a.0].value.iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::Domain {
                op: "ln",
                node: a.0,
                value: bad,
            });
        }
        Ok(self.elementwise(a, |x| (libm::log(x), 1.0 / x)))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.elementwise(a, |x| (x * x, 2.0 * x))
    }

    /// `max(x, floor)` per entry. Ties take the constant branch.
    pub fn max_const(&mut self, a: Var, floor: f64) -> Var {
        self.elementwise(a, |x| if x > floor { (x, 1.0) } else { (floor, 0.0) })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.max_const(a, 0.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.elementwise(a, |x| {
            let s = sigmoid(x);
            (s, s * (1.0 - s))
        })
    }

    /// `ln(1 + e^x)` per entry.
    pub fn softplus(&mut self, a: Var) -> Var {
        self.elementwise(a, |x| (softplus(x), sigmoid(x)))
    }

    /// Selects `left` where `x <= threshold` and `right` otherwise; both return
    /// value and derivative. The branch taken is the one differentiated.
    pub fn piecewise(
        &mut self,
        a: Var,
        threshold: f64,
        left: impl Fn(f64) -> (f64, f64),
        right: impl Fn(f64) -> (f64, f64),
    ) -> Var {
        self.elementwise(a, |x| if x <= threshold { left(x) } else { right(x) })
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.nodes[a.0].value.iter().sum();
        self.push(vec![total], Op::Sum(a))
    }

    /// `ln sum exp(x)` evaluated after subtracting the maximum entry.
    pub fn log_sum_exp(&mut self, a: Var) -> Result<Var> {
        let x = &self.nodes[a.0].value;
        if x.is_empty() {
            return Err(Error::Empty("log-sum-exp input"));
        }
        let lse = log_sum_exp(x);
        let weights = x.iter().map(|v| libm::exp(v - lse)).collect();
        Ok(self.push(vec![lse], Op::LogSumExp { input: a, weights }))
    }

    /// Entry `index` (0-based) as a scalar node.
    pub fn select(&mut self, a: Var, index: usize) -> Result<Var> {
        let x = &self.nodes[a.0].value;
        let v = *x.get(index).ok_or(Error::Shape {
            op: "select",
            left: x.len(),
            right: index,
        })?;
        Ok(self.push(vec![v], Op::Select { input: a, index }))
    }

    /// Sliding `[+1, -1]` difference: output `k` is `x[k] - x[k + 1]`.
    pub fn adjacent_diff(&mut self, a: Var) -> Result<Var> {
        let x = &self.nodes[a.0].value;
        if x.len() < 2 {
            return Err(Error::TooFewLabels(x.len()));
        }
        let value = x.windows(2).map(|w| w[0] - w[1]).collect();
        Ok(self.push(value, Op::AdjacentDiff(a)))
    }

    /// Stacks the given nodes into a single vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Empty("concat"));
        }
        let value = parts
            .iter()
            .flat_map(|p| self.nodes[p.0].value.iter().copied())
            .collect();
        Ok(self.push(value, Op::Concat(parts.to_vec())))
    }

    /// Arithmetic mean of scalar nodes.
    pub fn mean(&mut self, items: &[Var]) -> Result<Var> {
        let stacked = self.concat(items)?;
        let total = self.sum(stacked);
        Ok(self.scale(total, 1.0 / self.nodes[stacked.0].value.len() as f64))
    }

    /// Propagates adjoints from a scalar `root` to every node recorded before it.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let len = self.nodes[root.0].value.len();
        if len != 1 {
            return Err(Error::NonScalarRoot { node: root.0, len });
        }
        let mut grads: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        grads[root.0][0] = 1.0;
        let mut visited = 0;
        for id in (0..=root.0).rev() {
            visited += 1;
            let g = core::mem::take(&mut grads[id]);
            if g.iter().any(|&x| x != 0.0) {
                self.propagate(id, &g, &mut grads);
            }
            grads[id] = g;
        }
        Ok(Gradients { grads, visited })
    }

    fn propagate(&self, id: usize, g: &[f64], grads: &mut [Vec<f64>]) {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                accumulate(&mut grads[a.0], g, |_| 1.0);
                accumulate(&mut grads[b.0], g, |_| 1.0);
            }
            Op::Sub(a, b) => {
                accumulate(&mut grads[a.0], g, |_| 1.0);
                accumulate(&mut grads[b.0], g, |_| -1.0);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                accumulate(&mut grads[a.0], g, |i| pick(vb, i));
                accumulate(&mut grads[b.0], g, |i| pick(va, i));
            }
            Op::Scale(a, k) => accumulate(&mut grads[a.0], g, |_| *k),
            Op::Shift(a) => accumulate(&mut grads[a.0], g, |_| 1.0),
            Op::MatVec { matrix, vector } => {
                let m = &self.nodes[matrix.0].value;
                let v = &self.nodes[vector.0].value;
                let cols = v.len();
                let gm = &mut grads[matrix.0];
                for (r, &gr) in g.iter().enumerate() {
                    for (dst, x) in gm[r * cols..(r + 1) * cols].iter_mut().zip(v) {
                        *dst += gr * x;
                    }
                }
                let gv = &mut grads[vector.0];
                for (row, &gr) in m.chunks_exact(cols).zip(g) {
                    for (dst, w) in gv.iter_mut().zip(row) {
                        *dst += gr * w;
                    }
                }
            }
            Op::Elementwise { input, slope } => {
                accumulate(&mut grads[input.0], g, |i| slope[i]);
            }
            Op::Sum(a) => grads[a.0].iter_mut().for_each(|x| *x += g[0]),
            Op::LogSumExp { input, weights } => {
                for (dst, w) in grads[input.0].iter_mut().zip(weights) {
                    *dst += g[0] * w;
                }
            }
            Op::Select { input, index } => grads[input.0][*index] += g[0],
            Op::AdjacentDiff(a) => {
                let ga = &mut grads[a.0];
                for (k, &gk) in g.iter().enumerate() {
                    ga[k] += gk;
                    ga[k + 1] -= gk;
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let gp = &mut grads[p.0];
                    for (dst, x) in gp.iter_mut().zip(&g[offset..]) {
                        *dst += x;
                    }
                    offset += gp.len();
                }
            }
        }
    }
}

fn pick(v: &[f64], i: usize) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v[i]
    }
}

/// `dst += g * factor`, summing over `g` when `dst` was broadcast from a scalar.
fn accumulate(dst: &mut [f64], g: &[f64], factor: impl Fn(usize) -> f64) {
    if dst.len() == g.len() {
        for (i, (d, x)) in dst.iter_mut().zip(g).enumerate() {
            *d += x * factor(i);
        }
    } else {
        dst[0] += g.iter().enumerate().map(|(i, x)| x * factor(i)).sum::<f64>();
    }
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Vec<f64>>,
    visited: usize,
}

impl Gradients {
    /// Partial derivative of the root with respect to `v`. Nodes that cannot
    /// reach the root get zeros.
    pub fn wrt(&self, v: Var) -> &[f64] {
        &self.grads[v.0]
    }

    /// Number of nodes processed by the backward sweep.
    pub fn visited(&self) -> usize {
        self.visited
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Stabilised `ln sum exp(x)` of a non-empty slice.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + libm::log(x.iter().map(|v| libm::exp(v - max)).sum::<f64>())
}

/// Central differences of `f` at `x` along the coordinates in `indices`.
pub fn central_difference<F>(mut f: F, x: &[f64], step: f64, indices: &[usize]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    indices
        .iter()
        .map(|&i| {
            let wrap = |e| Error::Probe {
                index: i,
                source: Box::new(e),
            };
            probe[i] = x[i] + step;
            let up = f(&probe).map_err(wrap)?;
            probe[i] = x[i] - step;
            let down = f(&probe).map_err(wrap)?;
            probe[i] = x[i];
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}

/// Largest `|analytic - numeric| / max(1, |numeric|)` over all coordinates,
/// where `f` returns the value and analytic gradient at its argument.
pub fn finite_difference_check<F>(f: F, x: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let all: Vec<usize> = (0..x.len()).collect();
    finite_difference_check_at(f, x, step, &all)
}

/// [`finite_difference_check`] restricted to a subset of coordinates.
pub fn finite_difference_check_at<F>(mut f: F, x: &[f64], step: f64, indices: &[usize]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (_, analytic) = f(x)?;
    if analytic.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: analytic.len(),
            right: x.len(),
        });
    }
    let numeric = central_difference(|p| f(p).map(|(v, _)| v), x, step, indices)?;
    Ok(indices
        .iter()
        .zip(&numeric)
        .map(|(&i, &n)| libm::fabs(analytic[i] - n) / libm::fmax(1.0, libm::fabs(n)))
        .fold(0.0, f64::max))
}

/// Evaluates a graph built from a single input vector and returns its scalar
/// value together with the gradient with respect to that input.
pub fn tape_gradient<F>(mut build: F, x: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let input = tape.leaf(x.to_vec());
    let root = build(&mut tape, input)?;
    let grads = tape.backward(root)?;
    Ok((tape.scalar_value(root), grads.wrt(input).to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_sum_exp_of_two_zeros() {
        let mut tape = Tape::new();
        let x = tape.leaf([0.0, 0.0]);
        let l = tape.log_sum_exp(x).unwrap();
        assert!(close(tape.scalar_value(l), core::f64::consts::LN_2, 1e-15));
    }

    #[test]
    fn log_sum_exp_does_not_overflow() {
        assert!(close(
            log_sum_exp(&[1000.0, 1000.0]),
            1000.0 + core::f64::consts::LN_2,
            1e-12
        ));
    }

    #[test]
    fn piecewise_left_branch() {
        let mut tape = Tape::new();
        let r = tape.scalar(-2.0);
        let out = tape.piecewise(r, -1.0, |x| (-libm::log(-x), -1.0 / x), |x| (x + 1.0, 1.0));
        assert!(close(tape.scalar_value(out), -core::f64::consts::LN_2, 1e-15));
        let g = tape.backward(out).unwrap();
        assert!(close(g.wrt(r)[0], 0.5, 1e-15));
    }

    #[test]
    fn piecewise_breakpoint_takes_left() {
        let mut tape = Tape::new();
        let r = tape.scalar(-1.0);
        let out = tape.piecewise(r, -1.0, |_| (7.0, 3.0), |_| (0.0, 0.0));
        assert_eq!(tape.scalar_value(out), 7.0);
        assert_eq!(tape.backward(out).unwrap().wrt(r)[0], 3.0);
    }

    #[test]
    fn product_rule_on_square() {
        let mut tape = Tape::new();
        let x = tape.scalar(3.0);
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(x)[0], 6.0);
    }

    #[test]
    fn sum_has_unit_gradient() {
        let mut tape = Tape::new();
        let s = tape.leaf([1.0, -2.0, 5.0]);
        let total = tape.sum(s);
        assert_eq!(tape.backward(total).unwrap().wrt(s), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn cross_entropy_gradient_at_uniform_scores() {
        let mut tape = Tape::new();
        let s = tape.leaf([0.0, 0.0]);
        let lse = tape.log_sum_exp(s).unwrap();
        let sy = tape.select(s, 1).unwrap();
        let ce = tape.sub(lse, sy).unwrap();
        let g = tape.backward(ce).unwrap();
        assert!(close(g.wrt(s)[0], 0.5, 1e-15));
        assert!(close(g.wrt(s)[1], -0.5, 1e-15));
    }

    #[test]
    fn cross_entropy_gradient_for_first_label() {
        let mut tape = Tape::new();
        let s = tape.leaf([0.0, 0.0]);
        let lse = tape.log_sum_exp(s).unwrap();
        let sy = tape.select(s, 0).unwrap();
        let ce = tape.sub(lse, sy).unwrap();
        let g = tape.backward(ce).unwrap();
        assert_eq!(g.wrt(s), &[-0.5, 0.5]);
    }

    #[test]
    fn backward_rejects_vector_root() {
        let mut tape = Tape::new();
        let s = tape.leaf([1.0, 2.0]);
        assert!(matches!(tape.backward(s), Err(Error::NonScalarRoot { len: 2, .. })));
    }

    #[test]
    fn ln_reports_offending_node() {
        let mut tape = Tape::new();
        let _ = tape.scalar(1.0);
        let x = tape.leaf([1.0, 0.0]);
        assert_eq!(
            tape.ln(x),
            Err(Error::Domain {
                op: "ln",
                node: 1,
                value: 0.0
            })
        );
    }

    #[test]
    fn broadcast_is_scalar_vector_only() {
        let mut tape = Tape::new();
        let a = tape.leaf([1.0, 2.0, 3.0]);
        let b = tape.leaf([1.0, 2.0]);
        let k = tape.scalar(2.0);
        assert!(tape.add(a, b).is_err());
        let p = tape.mul(k, a).unwrap();
        assert_eq!(tape.value(p), &[2.0, 4.0, 6.0]);
        let total = tape.sum(p);
        let g = tape.backward(total).unwrap();
        assert_eq!(g.wrt(k), &[6.0]);
        assert_eq!(g.wrt(a), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn matvec_gradients() {
        let mut tape = Tape::new();
        let m = tape.matrix(2, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let v = tape.leaf([1.0, -1.0, 2.0]);
        let out = tape.matvec(m, v).unwrap();
        assert_eq!(tape.value(out), &[5.0, 11.0]);
        let w = tape.leaf([1.0, 10.0]);
        let weighted = tape.mul(out, w).unwrap();
        let total = tape.sum(weighted);
        let g = tape.backward(total).unwrap();
        assert_eq!(g.wrt(m), &[1.0, -1.0, 2.0, 10.0, -10.0, 20.0]);
        assert_eq!(g.wrt(v), &[41.0, 52.0, 63.0]);
    }

    #[test]
    fn backward_visits_each_node_once() {
        let mut tape = Tape::new();
        let x = tape.leaf([0.5, 1.5]);
        let e = tape.exp(x);
        let s = tape.sum(e);
        let _after = tape.scalar(9.0);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.visited(), 3);
        assert_eq!(g.wrt(_after), &[0.0]);
    }

    #[test]
    fn finite_difference_of_square() {
        let err = finite_difference_check(|x| Ok((x[0] * x[0], vec![2.0 * x[0]])), &[2.0], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn probe_failure_carries_index() {
        let f = |x: &[f64]| {
            if x[1] > 1.0 {
                Err(Error::Empty("boom"))
            } else {
                Ok((x[0] + x[1], vec![1.0, 1.0]))
            }
        };
        let err = finite_difference_check(f, &[0.0, 1.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Probe { index: 1, .. }));
    }

    #[test]
    fn tape_gradient_matches_central_difference_for_composite() {
        let build = |t: &mut Tape, x: Var| -> Result<Var> {
            let sq = t.square(x);
            let sp = t.softplus(sq);
            let d = t.adjacent_diff(sp)?;
            let sg = t.sigmoid(d);
            let l = t.log_sum_exp(sg)?;
            let e = t.exp(x);
            let ln = t.ln(e)?;
            let s = t.sum(ln);
            t.add(l, s)
        };
        let x = [0.3, -1.2, 0.7, 2.0];
        let err = finite_difference_check(|p| tape_gradient(build, p), &x, 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }
}
