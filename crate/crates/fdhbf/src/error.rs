use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no paths")]
    NoPaths,
    #[error("no feasible beams")]
    NoFeasibleBeams,
    #[error("coincident antenna elements")]
    CoincidentElements,
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("effective channel rank below stream count (rank {rank}, streams {streams})")]
    RankDeficient { rank: usize, streams: usize },
    #[error("all singular values are zero")]
    ZeroSingularValues,
    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),
    #[error("zero matrix: {0}")]
    ZeroMatrix(&'static str),
    #[error("combiner row {row} has norm {norm}, expected 1")]
    UnnormalizedCombiner { row: usize, norm: f64 },
    #[error("zero row {0} in combiner")]
    ZeroRow(usize),
    #[error("zero power denominator")]
    ZeroDenominator,
    #[error("empty angular support")]
    EmptySupport,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dims(r: usize, c: usize) -> String {
    format!("{r}x{c}")
}
