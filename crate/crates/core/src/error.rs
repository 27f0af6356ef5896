use thiserror::Error;

/// Errors raised by the charting pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("trajectory has zero length")]
    DegeneratePath,

    #[error("coincident geometry: {0}")]
    CoincidentGeometry(String),

    #[error("channel {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("zero-norm channel vector")]
    ZeroNorm,

    #[error("degenerate correlation: input is orthogonal to every kept dictionary atom")]
    DegenerateCorrelation,

    #[error("{0} out of range")]
    OutOfRange(String),

    #[error("every training triplet hit a degenerate forward pass")]
    AllDegenerate,

    #[error("too few chartable samples: {0}")]
    TooFewSamples(usize),
}

impl Error {
    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::AtSample {
            index,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
