//! Layer-wise phrase composition probing.
//!
//! The crate builds overlap-controlled phrase-pair evaluation sets, runs a
//! deterministic toy transformer encoder, extracts the five phrase
//! representation types from layer-wise token vectors, and analyses them with
//! similarity correlations, paraphrase probes, representation drift and a
//! swap-distance audit for paraphrase datasets.
//!
//! Every module is usable on its own; the `phrase-probe` binary wires them
//! into end-to-end workflows (see [`cli`]).

pub mod cli;
pub mod cue;
pub mod dataset;
pub mod drift;
pub mod embedding;
pub mod encoder;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod probe;
pub mod rng;
pub mod table;

pub use error::{Error, Result};
pub use model::{InputMode, LabeledPhrase, Phrase, PhrasePair, RepType, SentencePair};
