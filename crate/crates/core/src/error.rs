use std::io;

use thiserror::Error;

/// Errors shared by all pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Input data violates a documented interchange format.
    #[error("format error: {0}")]
    Format(String),

    /// A parameter is outside its documented domain.
    #[error("invalid config: {0}")]
    Config(String),

    /// No retweet records were available to select a population from.
    #[error("no retweet records; cannot select a population")]
    EmptyPopulation,

    /// A text corpus contained no tokens after filtering.
    #[error("corpus has no tokens")]
    EmptyCorpus,

    /// A graph operation was asked for something structurally impossible.
    #[error("graph error: {0}")]
    Graph(String),
}

pub type Result<T> = std::result::Result<T, Error>;
