//! Small rectifier MLP with a logits head or a single positive-rate head.
//!
//! Parameters are kept in one flat vector, layer by layer, each layer as a
//! row-major `out x in` weight matrix followed by its bias.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{self, Gradients, Tape, Var};
use crate::{Error, Result};

/// Output layer of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// `c` unbounded scores.
    Logits(usize),
    /// One softplus-squashed positive scalar.
    PoissonRate,
}

impl Head {
    pub fn width(self) -> usize {
        match self {
            Head::Logits(c) => c,
            Head::PoissonRate => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub head: Head,
    pub seed: u64,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.contains(&0) || self.head.width() == 0 {
            return Err(Error::Config(alloc::format!("all layer widths must be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// `(rows, cols)` = `(fan_out, fan_in)` of every layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(self.head.width());
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c + r).sum()
    }
}

/// Half-width of the scaled-uniform initialiser, `sqrt(6 / (fan_in + fan_out))`.
pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    shapes: Vec<(usize, usize)>,
    params: Vec<f64>,
}

/// Parameters of one step recorded as tape leaves.
#[derive(Debug, Clone)]
pub struct TapeParams {
    layers: Vec<(Var, Var)>,
}

impl Mlp {
    /// Seeded scaled-uniform weights, zero biases.
    pub fn init(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut params = Vec::with_capacity(spec.num_params());
        for &(rows, cols) in &shapes {
            let bound = init_bound(cols, rows);
            params.extend((0..rows * cols).map(|_| rng.random_range(-bound..bound)));
            params.extend(core::iter::repeat_n(0.0, rows));
        }
        Ok(Self { spec, shapes, params })
    }

    pub fn from_params(spec: MlpSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.num_params() {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: spec.num_params(),
            });
        }
        let shapes = spec.layer_shapes();
        Ok(Self { spec, shapes, params })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_layers(&self) -> usize {
        self.shapes.len()
    }

    /// Weights and bias of layer `i`.
    pub fn layer(&self, i: usize) -> (&[f64], &[f64]) {
        let offset: usize = self.shapes[..i].iter().map(|(r, c)| r * c + r).sum();
        let (rows, cols) = self.shapes[i];
        let w = &self.params[offset..offset + rows * cols];
        let b = &self.params[offset + rows * cols..offset + rows * cols + rows];
        (w, b)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::Dimension {
                expected: self.spec.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Affine outputs of every layer before its activation.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.shapes.len());
        let mut h = x.to_vec();
        for i in 0..self.shapes.len() {
            let (w, b) = self.layer(i);
            let cols = h.len();
            let z: Vec<f64> = w
                .chunks_exact(cols)
                .zip(b)
                .map(|(row, bias)| row.iter().zip(&h).map(|(a, x)| a * x).sum::<f64>() + bias)
                .collect();
            h = z.iter().map(|v| libm::fmax(*v, 0.0)).collect();
            out.push(z);
        }
        Ok(out)
    }

    /// Plain forward pass: `c` scores, or `[rate]` for the Poisson head.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.pre_activations(x)?.pop().expect("at least one layer");
        if self.spec.head == Head::PoissonRate {
            out[0] = diff::softplus(out[0]);
        }
        Ok(out)
    }

    /// Records every layer's weights and bias as leaves.
    pub fn register(&self, tape: &mut Tape) -> Result<TapeParams> {
        let layers = (0..self.shapes.len())
            .map(|i| {
                let (w, b) = self.layer(i);
                let w = tape.matrix(self.shapes[i].0, w.to_vec())?;
                let b = tape.leaf(b.to_vec());
                Ok((w, b))
            })
            .collect::<Result<_>>()?;
        Ok(TapeParams { layers })
    }

    /// Forward pass recorded on `tape` against previously registered parameters.
    pub fn forward_on_tape(&self, tape: &mut Tape, params: &TapeParams, x: &[f64]) -> Result<Var> {
        self.check_input(x)?;
        let mut h = tape.leaf(x.to_vec());
        let last = params.layers.len() - 1;
        for (i, &(w, b)) in params.layers.iter().enumerate() {
            let wx = tape.matvec(w, h)?;
            let z = tape.add(wx, b)?;
            h = if i < last {
                tape.relu(z)
            } else if self.spec.head == Head::PoissonRate {
                tape.softplus(z)
            } else {
                z
            };
        }
        Ok(h)
    }

    /// Flattens the gradients of registered parameters into the parameter layout.
    pub fn collect_gradient(&self, params: &TapeParams, grads: &Gradients) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.params.len());
        for &(w, b) in &params.layers {
            flat.extend_from_slice(grads.wrt(w));
            flat.extend_from_slice(grads.wrt(b));
        }
        flat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(hidden: Vec<usize>, head: Head) -> MlpSpec {
        MlpSpec {
            input_dim: 3,
            hidden,
            head,
            seed: 11,
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = Mlp::init(spec(vec![4, 5], Head::Logits(3))).unwrap();
        let b = Mlp::init(spec(vec![4, 5], Head::Logits(3))).unwrap();
        assert_eq!(a.params(), b.params());
        let mut other = spec(vec![4, 5], Head::Logits(3));
        other.seed = 12;
        assert_ne!(a.params(), Mlp::init(other).unwrap().params());
    }

    #[test]
    fn weights_within_bound_and_zero_bias() {
        assert_eq!(init_bound(3, 3), 1.0);
        let m = Mlp::init(spec(vec![4], Head::Logits(3))).unwrap();
        let (w, b) = m.layer(0);
        assert!(w.iter().all(|x| x.abs() <= init_bound(3, 4)));
        assert!(b.iter().all(|&x| x == 0.0));
        assert_eq!(m.num_params(), 4 * 3 + 4 + 3 * 4 + 3);
    }

    #[test]
    fn no_hidden_layer_is_affine() {
        let m = Mlp::init(spec(vec![], Head::Logits(2))).unwrap();
        assert_eq!(m.num_layers(), 1);
        let (w, _) = m.layer(0);
        let x = [1.0, -2.0, 0.5];
        let out = m.forward(&x).unwrap();
        for r in 0..2 {
            let expected: f64 = (0..3).map(|c| w[r * 3 + c] * x[c]).sum();
            assert_eq!(out[r], expected);
        }
    }

    #[test]
    fn zero_parameters_give_zero_scores() {
        let s = spec(vec![4], Head::Logits(3));
        let m = Mlp::from_params(s.clone(), vec![0.0; s.num_params()]).unwrap();
        assert_eq!(m.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn poisson_head_zero_pre_activation() {
        let s = spec(vec![2], Head::PoissonRate);
        let m = Mlp::from_params(s.clone(), vec![0.0; s.num_params()]).unwrap();
        let out = m.forward(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0] - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_input_dim() {
        let m = Mlp::init(spec(vec![2], Head::Logits(3))).unwrap();
        assert_eq!(m.forward(&[1.0]), Err(Error::Dimension { expected: 3, found: 1 }));
        let mut tape = Tape::new();
        let p = m.register(&mut tape).unwrap();
        assert!(m.forward_on_tape(&mut tape, &p, &[1.0; 4]).is_err());
        assert!(Mlp::init(spec(vec![0], Head::Logits(3))).is_err());
    }

    #[test]
    fn tape_forward_matches_plain_forward() {
        for head in [Head::Logits(4), Head::PoissonRate] {
            let m = Mlp::init(spec(vec![5, 3], head)).unwrap();
            let x = [0.4, -1.0, 2.0];
            let mut tape = Tape::new();
            let p = m.register(&mut tape).unwrap();
            let out = m.forward_on_tape(&mut tape, &p, &x).unwrap();
            assert_eq!(tape.value(out), m.forward(&x).unwrap().as_slice());
        }
    }

    #[test]
    fn first_layer_is_positively_homogeneous() {
        let m = Mlp::init(spec(vec![6], Head::Logits(2))).unwrap();
        let (w, _) = m.layer(0);
        let act = |x: &[f64]| -> Vec<f64> {
            w.chunks_exact(3)
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().max(0.0))
                .collect()
        };
        let x = [0.3, -0.7, 1.1];
        let alpha = 2.5;
        let scaled: Vec<f64> = x.iter().map(|v| v * alpha).collect();
        for (a, b) in act(&scaled).iter().zip(act(&x)) {
            assert!((a - alpha * b).abs() < 1e-12);
        }
    }
}
