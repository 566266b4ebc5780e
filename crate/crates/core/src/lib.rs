//! Profile generation from persona-grounded dialogues.
//!
//! The crate covers the whole pipeline:
//!
//! * [`corpus`]: loading dialogue and NLI corpora and enumerating candidate
//!   utterance/profile pairs.
//! * [`nli`]: the three-way entailment classifier interface, its training loop
//!   and accuracy evaluation.
//! * [`alignment`]: selecting entailed profile sentences per utterance and
//!   summarizing entailment confidences.
//! * [`pgd`]: assembling the confidence-filtered dataset, statistics and I/O.
//! * [`annotation`]: stratified sampling for human validation, the judgment
//!   store and agreement/accuracy reporting.
//! * [`generator`]: example formatting with `<gen>`/`<sep>`, masked loss,
//!   decoder training and greedy decoding.
//! * [`metrics`]: BLEU, ROUGE, embedding similarity and multi-seed aggregation.

pub mod alignment;
pub mod annotation;
pub mod artifact;
pub mod corpus;
pub mod error;
pub mod generator;
pub mod metrics;
pub mod nli;
pub mod pgd;
pub mod text;
pub mod train;

pub use error::{Error, Result};
