use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("edge {0} - {0} is a self-loop")]
    SelfLoop(usize),
    #[error("more than one edge between vertices {0} and {1}")]
    MultiEdge(usize, usize),
    #[error("vertex {0} has a neighbor and also a parent or spouse")]
    ConditionOneViolated(usize),
    #[error("vertex {0} is an ancestor of one of its parents or spouses")]
    ConditionTwoViolated(usize),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("invalid adjacency coding at ({0}, {1})")]
    InvalidCoding(usize, usize),
    #[error("adjacency matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("vertex sets overlap or are empty")]
    OverlappingSets,
    #[error("exhaustive search over {p} vertices exceeds the limit of {limit}")]
    TooManyVertices { p: usize, limit: usize },
    #[error("matrix is singular: {0}")]
    SingularMatrix(&'static str),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter {0} is nonzero outside the graph's edge pattern")]
    SparsityViolated(&'static str),
    #[error("regression design for vertex {0} is rank deficient")]
    SingularDesign(usize),
    #[error("graph is not maximal: vertices {0} and {1} have no separating set")]
    NotMaximal(usize, usize),
    #[error("no convergence after {0} iterations")]
    MaxIterationsExceeded(usize),
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDf(i64),
    #[error("sample size {n} too small for {p} variables")]
    SampleTooSmall { n: usize, p: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
