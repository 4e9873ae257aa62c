use thiserror::Error;

/// Errors raised by validation, measure evaluation, metrics and generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability vector has total mass {0}, must be positive")]
    AllZero(f64),
    #[error("negative mass {value} at class {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("non-finite entry {value} at class {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("probabilities sum to {0}, more than 1e-6 away from 1")]
    NotNormalized(f64),
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("dimension mismatch: expected K={expected}, found K={found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("item has no posterior samples")]
    EmptySamples,
    #[error("label {label} out of range for K={k}")]
    BadLabel { label: usize, k: usize },
    #[error("measure needs the single-model prediction, which is absent")]
    MissingSingle,
    #[error("measure needs a reference prediction, which is absent")]
    MissingReference,
    #[error("off-diagonal pair estimate needs at least 2 samples, got {0}")]
    NeedTwoSamples(usize),
    #[error("invalid Renyi order {0}")]
    InvalidAlpha(f64),
    #[error("detection set needs at least one positive and one negative")]
    OneClassOnly,
    #[error("scores and flags differ in length ({scores} vs {flags})")]
    LengthMismatch { scores: usize, flags: usize },
    #[error("empty input")]
    Empty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("NaN score")]
    NanScore,
    #[error("item {id}: {source}")]
    Item {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn for_item(self, id: &str) -> Error {
        Error::Item {
            id: id.to_owned(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
