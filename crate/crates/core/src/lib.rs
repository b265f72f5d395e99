//! Semi-supervised architecture search over cell-DAG spaces.
//!
//! The crate trains an encoder-predictor-decoder surrogate on a handful
//! of architecture-accuracy pairs, boosts it with pseudo-labeled random
//! architectures, and searches by gradient ascent in the learned
//! embedding space. Evolutionary and random baselines plus seeded
//! synthetic / tabular evaluators with exact query accounting round out
//! the engine.
//!
//! Module map:
//! - [`grad`] — training kernel (tensors, LSTM cell, Adam, grad checks)
//! - [`space`] — cell-DAG search space, token codec, canonical hashing
//! - [`controller`] — encoder/predictor/decoder surrogate and training
//! - [`search`] — search loops: gradient-ascent, evolution, random
//! - [`bench`] — evaluators: synthetic oracle, tabular benchmark, ledger
//! - [`dfr`] — diagonal focus rate over attention maps
//! - [`stats`] — rank correlation, sign test, summary statistics
//! - [`experiment`] — presets, config files, multi-seed runs, reports

pub mod bench;
pub mod controller;
pub mod dfr;
pub mod error;
pub mod experiment;
pub mod grad;
pub mod search;
pub mod space;
pub mod stats;

pub use error::{Error, Result};
