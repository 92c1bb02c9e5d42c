//! Automatic metrics and MQM scoring.

pub mod chrf;
pub mod mqm;
pub mod report;

use alloc::string::String;

pub use chrf::{chrf, chrf_stats, corpus_chrf, ChrFParams, ChrFStats};
pub use mqm::{
    mqm_score, mqm_score_counts, word_count, IssueType, MqmAnnotation, MqmAnnotationSet, Severity,
    SeverityCounts, TaxonomyLeaf, TaxonomyNode, TAXONOMY,
};
pub use report::{
    evaluate_run, LearnedScorer, LineScores, MetricKind, MetricReport, ScoreItem, VolumeScores,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("scoring backend: {0}")]
    Backend(String),
    #[error("scoring protocol: {0}")]
    Protocol(String),
    #[error("run and volume are misaligned: {0}")]
    Alignment(String),
    #[error("line '{0}' has no reference translation")]
    MissingReference(String),
    #[error("annotation schema: {0}")]
    Schema(String),
}
