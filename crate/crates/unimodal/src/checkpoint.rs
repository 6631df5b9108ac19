//! Plain-text parameter checkpoints.
//!
//! ```text
//! unimodal-checkpoint 1
//! input 16
//! hidden 32 32
//! head logits 10
//! seed 0
//! mean <input values>
//! scale <input values>
//! layer 32 16
//! <32 lines of 16 weights>
//! <1 line of 32 biases>
//! layer ...
//! ```
//!
//! `head` is either `logits <c>` or `poisson`. Weights are row-major with one
//! output unit per line. Numbers are written in the shortest form that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use unimodal_core::model::{Head, Mlp, MlpSpec};
use unimodal_core::trainer::Standardizer;

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "unimodal-checkpoint";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

fn join_usize(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Renders a model and its input standardiser.
pub fn to_text(model: &Mlp, standardizer: &Standardizer) -> String {
    let spec = model.spec();
    let mut out = String::new();
    writeln!(out, "{MAGIC} {FORMAT_VERSION}").unwrap();
    writeln!(out, "input {}", spec.input_dim).unwrap();
    writeln!(out, "hidden {}", join_usize(&spec.hidden)).unwrap();
    match spec.head {
        Head::Logits(c) => writeln!(out, "head logits {c}").unwrap(),
        Head::PoissonRate => writeln!(out, "head poisson").unwrap(),
    }
    writeln!(out, "seed {}", spec.seed).unwrap();
    writeln!(out, "mean {}", join(&standardizer.mean)).unwrap();
    writeln!(out, "scale {}", join(&standardizer.scale)).unwrap();
    for (i, (rows, cols)) in spec.layer_shapes().into_iter().enumerate() {
        let (w, b) = model.layer(i);
        writeln!(out, "layer {rows} {cols}").unwrap();
        for r in 0..rows {
            writeln!(out, "{}", join(&w[r * cols..(r + 1) * cols])).unwrap();
        }
        writeln!(out, "{}", join(b)).unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| CliError::parse(self.path, "unexpected end of checkpoint"))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next()?;
        let mut words = line.split_whitespace();
        if words.next() != Some(key) {
            return Err(CliError::parse(self.path, format!("line {n}: expected `{key}`")));
        }
        Ok((n, words.collect()))
    }

    fn err(&self, line: usize, what: &str) -> CliError {
        CliError::parse(self.path, format!("line {line}: {what}"))
    }
}

fn numbers<T: std::str::FromStr>(words: &[&str]) -> Option<Vec<T>> {
    words.iter().map(|w| w.parse().ok()).collect()
}

/// Parses a checkpoint produced by [`to_text`].
pub fn from_text(text: &str, path: &Path) -> Result<(Mlp, Standardizer)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
    };
    let (n, magic) = lines.next()?;
    let version = magic
        .strip_prefix(MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| lines.err(n, "not a checkpoint"))?;
    if version != FORMAT_VERSION {
        return Err(lines.err(n, &format!("unsupported version {version}, expected {FORMAT_VERSION}")));
    }
    let (n, w) = lines.keyed("input")?;
    let input_dim = match numbers::<usize>(&w).as_deref() {
        Some([d]) => *d,
        _ => return Err(lines.err(n, "bad input size")),
    };
    let (n, w) = lines.keyed("hidden")?;
    let hidden = numbers::<usize>(&w).ok_or_else(|| lines.err(n, "bad hidden sizes"))?;
    let (n, w) = lines.keyed("head")?;
    let head = match w.as_slice() {
        ["logits", c] => Head::Logits(c.parse().map_err(|_| lines.err(n, "bad class count"))?),
        ["poisson"] => Head::PoissonRate,
        _ => return Err(lines.err(n, "bad head")),
    };
    let (n, w) = lines.keyed("seed")?;
    let seed = match numbers::<u64>(&w).as_deref() {
        Some([s]) => *s,
        _ => return Err(lines.err(n, "bad seed")),
    };
    let spec = MlpSpec {
        input_dim,
        hidden,
        head,
        seed,
    };
    spec.validate().map_err(|e| lines.err(n, &e.to_string()))?;

    let mut vector = |key: &str, len: usize| -> Result<Vec<f64>> {
        let (n, w) = lines.keyed(key)?;
        numbers::<f64>(&w)
            .filter(|v| v.len() == len)
            .ok_or_else(|| lines.err(n, &format!("expected {len} numbers after `{key}`")))
    };
    let mean = vector("mean", input_dim)?;
    let scale = vector("scale", input_dim)?;

    let mut params = Vec::with_capacity(spec.num_params());
    for (rows, cols) in spec.layer_shapes() {
        let (n, w) = lines.keyed("layer")?;
        if numbers::<usize>(&w).as_deref() != Some(&[rows, cols]) {
            return Err(lines.err(n, &format!("expected layer {rows} {cols}")));
        }
        for width in std::iter::repeat_n(cols, rows).chain([rows]) {
            let (n, line) = lines.next()?;
            let words: Vec<&str> = line.split_whitespace().collect();
            let row = numbers::<f64>(&words)
                .filter(|v| v.len() == width)
                .ok_or_else(|| lines.err(n, &format!("expected {width} numbers")))?;
            params.extend(row);
        }
    }
    let model = Mlp::from_params(spec, params).map_err(|e| CliError::parse(path, e.to_string()))?;
    Ok((model, Standardizer { mean, scale }))
}

pub fn write(path: &Path, model: &Mlp, standardizer: &Standardizer) -> Result<()> {
    fs::write(path, to_text(model, standardizer)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<(Mlp, Standardizer)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_text(&text, path)
}
