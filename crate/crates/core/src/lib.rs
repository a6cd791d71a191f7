//! Detection and characterization of coordinated behavior in social-media
//! interaction data.
//!
//! The pipeline ingests retweet interaction records, builds a TF-IDF/cosine
//! user-similarity network over co-retweeted content, extracts its multiscale
//! backbone with the disparity filter, and then sweeps an edge-weight
//! threshold upward while re-running warm-started community detection at each
//! step. Communities that survive into the high-threshold regime are the
//! coordinated ones; the percentile rank of the threshold within the weight
//! distribution serves as a dimensionless coordination score. Companion
//! modules characterize the surviving communities: network measures along the
//! sweep, hashtag polarity via valence propagation from seed hashtags,
//! entropy-based word-shift text comparison, and a synthetic-data generator
//! with planted coordinated groups for validation.

pub mod backbone;
mod error;
mod fmt;
pub mod graph;
pub mod ingest;
pub mod netmetrics;
pub mod polarity;
pub mod simnet;
pub mod sweep;
pub mod synth;
pub mod textshift;

pub use error::{Error, Result};
pub use fmt::fmt_sig9;
pub use graph::SimilarityGraph;
pub use ingest::{AnnotationKind, AnnotationTable, InteractionRecord, ParsedRecords, Population};
pub use simnet::UserVector;
pub use sweep::{Partition, StepRule, SweepConfig, SweepTrace, TracedCommunities};
