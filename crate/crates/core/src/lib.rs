//! Desk-scale workbench for voice-command fingerprinting over encrypted
//! smart-speaker traffic.
//!
//! The crate is organised along the pipeline:
//!
//! * [`trace`]: packets, traces, labelled datasets and summary histograms.
//! * [`synthgen`]: a seeded generator of smart-speaker-like traffic.
//! * [`preprocess`]: binary/numeric encodings, min-max scaling, pad/trim and
//!   stratified fold plans.
//! * [`classic`]: CUMUL and CNS19 feature extraction with AdaBoost, linear
//!   one-vs-rest and 1-NN classifiers.
//! * [`defense`]: adaptive padding combined with per-packet size noise, plus
//!   the latency/bandwidth cost model.
//! * [`eval`]: closed/open-world reports and the softmax ensemble.
//! * [`io`]: trace, tensor, probability and model file formats.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classic;
pub mod defense;
pub mod error;
pub mod eval;
pub mod io;
pub mod preprocess;
pub mod rng;
pub mod synthgen;
pub mod trace;

pub use error::{Error, Result};
