use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A primitive was evaluated outside of its domain, e.g. `ln(x)` with `x <= 0`.
    #[error("{op}: value {value} outside of domain at node {node}")]
    Domain { op: &'static str, node: usize, value: f64 },
    #[error("backward requires a scalar root, node {node} has length {len}")]
    NonScalarRoot { node: usize, len: usize },
    #[error("{op}: incompatible shapes {left} and {right}")]
    Shape {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("label {label} outside of 1..={classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("at least two labels are required, got {0}")]
    TooFewLabels(usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("expected input of dimension {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite gradient for parameter {param} at batch {batch}")]
    NonFiniteGradient { param: usize, batch: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("evaluation failed at probe {index}: {source}")]
    Probe { index: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
