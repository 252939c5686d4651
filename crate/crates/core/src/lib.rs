//! Hall and Van de Castle (HVdC) character and emotion coding.
//!
//! This crate holds the pure, allocation-only parts of the pipeline:
//!
//! - [`code`]: the four-class character grammar, emotion labels and subclass merging.
//! - [`serialize`]: natural-language target texts and their strict decoder.
//! - [`metrics`]: multiset precision/recall/F1 over six dimensions.
//! - [`wilcoxon`]: the signed-rank test used to compare two configurations.
//! - [`corpus`]: narrative records, filtering, statistics and name anonymization.
//! - [`split`]: leave-one-series-out and seeded k-fold plans.
//! - [`prompt`]: few-shot prompt construction and the assistant output parser.
//!
//! File formats, the CLI and model backends live in the `dreamcode` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod code;
pub mod corpus;
pub mod metrics;
pub mod prompt;
pub mod serialize;
pub mod split;
pub mod wilcoxon;

pub use code::{
    AgeClass, AnnotationSet, CharacterCode, CodeError, EmotionLabel, EmotionRecord, Experiencer,
    GenderClass, IdentityClass, RawCode, StatusClass,
};
pub use metrics::{Dimension, MatchCounts, MetricReport, SeriesReport};
pub use serialize::{LayoutPolicy, NullPrediction, NullReason, OrderPolicy, Strategy};
