use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("not enough samples: need more than {needed}, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },
    #[error("tree has no agents")]
    EmptyTree,
    #[error("column {column} has zero scale")]
    ZeroScale { column: usize },
    #[error("matrix is not positive semidefinite")]
    NotPsd,
    #[error("all weights are zero")]
    ZeroWeights,
    #[error("no particle has a distance below epsilon = {0}")]
    NoParticleBelowEpsilon(f64),
    #[error("growth exceeded {0} agents")]
    GrowthLimit(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("extraction failed for morphology {index}: {source}")]
    Extraction {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
