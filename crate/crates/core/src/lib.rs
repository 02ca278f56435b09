//! Classification-error bounds for unsupervised sequence labeling.
//!
//! The crate works with small, fully enumerable problems: an observation
//! alphabet `X`, a label alphabet `C` with `|X| > |C|`, and sequences of a
//! fixed length `N`. On top of dense probability tables it provides
//!
//! * Bayes and model-based decision rules and the exact classification
//!   error mismatch between them ([`decision`]),
//! * every quantity in the bound chain relating that mismatch to the
//!   distance between observation marginals, including the language-model
//!   matrix and its left-inverse ([`bounds`]),
//! * Monte-Carlo verification of the chain and constructive witnesses that
//!   both of its preconditions are necessary ([`simulate`]),
//! * the sequence-level cross-entropy criterion with exact gradients and a
//!   gradient-descent trainer ([`train`]),
//! * language-model matrix conditioning reports for label corpora
//!   ([`corpus`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod corpus;
pub mod decision;
mod error;
pub mod prob;
pub mod simulate;
pub mod train;

pub use error::{Error, Result};
