//! Ordinal classification with non-parametric uni-modality constraints.
//!
//! The crate trains small classifiers whose posterior over an ordered label
//! set is pushed towards uni-modality by `c - 1` pairwise inequality
//! constraints on adjacent logits. Constraints are handled either by a
//! quadratic penalty (PN) or by an extended log-barrier (ELB) with a growing
//! temperature. Five comparison losses (CE, REN, LD, MV, PO), the MAE and
//! Sides Order Index metrics, a reverse-mode tape, a seeded MLP, synthetic
//! ordinal data and a deterministic SGD trainer live here as well.
//!
//! Everything in this crate is `no_std` with `alloc`. File formats, the
//! experiment runner and the command line live in the `unimodal` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod diff;
mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod ordinal;
pub mod trainer;

pub use error::{Error, Result};
pub use ordinal::{Label, LabelSpace, Posterior};
