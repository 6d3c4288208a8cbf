use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected: vertex {unreached} is not reachable from vertex {root}")]
    Disconnected { root: usize, unreached: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// A lift or lookup left the instantiated window; the caller should enlarge it.
    #[error("vertex (base {base}, index {index:?}) lies outside the instantiated window")]
    OutOfWindow { base: usize, index: Vec<i64> },

    #[error("window of {requested} vertices exceeds the cap of {cap}")]
    WindowTooLarge { requested: usize, cap: usize },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integer overflow in exact arithmetic ({0})")]
    Overflow(&'static str),

    #[error("kernel sublattice has torsion: invariant factors {factors:?}")]
    Torsion { factors: Vec<i64> },

    #[error("kernel sublattice is rank deficient: rank {rank} < {columns} columns")]
    RankDeficient { rank: usize, columns: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Refusal to estimate because the moment condition fails.
    #[error("moment condition fails: {witness}")]
    MomentCondition { witness: String },

    #[error("no realized vertex on the affine subspace inside the window")]
    EmptyAffineTarget,

    #[error("exhaustive enumeration needs {required} configurations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}
