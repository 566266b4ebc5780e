//! Human validation of aligned pairs.
//!
//! Pairs are sampled per confidence interval into an [`AnnotationBatch`],
//! annotators mark each item when the profile sentence can be extracted from
//! the utterance, and [`report`] turns the judgment log into per-interval
//! accuracy and inter-annotator agreement.

mod interval;
mod report;
mod sample;
mod store;

pub use interval::IntervalSpec;
pub use report::{
    agreement_rate, interval_accuracy, pairwise_agreement, report, unanimous_rate, AgreementReport,
    IntervalAccuracy,
};
pub use sample::{stratified_sample, AnnotationBatch, BatchItem};
pub use store::{Ack, Judgment, JudgmentStore, LogEntry, NextItem};
