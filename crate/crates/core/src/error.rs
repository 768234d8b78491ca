use thiserror::Error;

/// Errors produced by the code-design library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An integer argument fell outside its admissible range.
    #[error("{what} = {value} is out of range (expected {expected})")]
    OutOfRange {
        what: &'static str,
        value: i64,
        expected: String,
    },

    /// A real-valued argument fell outside its admissible range.
    #[error("{what} = {value} is out of range (expected {expected})")]
    OutOfRangeReal {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Two objects that must live in the same ambient space do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The input vectors are linearly dependent where independence is required.
    #[error("input vectors are linearly dependent")]
    LinearlyDependent,

    /// The generator matrix does not have full row rank.
    #[error("generator matrix has rank {rank}, expected full rank {kappa}")]
    RankDeficient { rank: usize, kappa: usize },

    /// A generator matrix would contain the all-zero column.
    #[error("generator matrix column {index} is the all-zero vector")]
    ZeroColumn { index: usize },

    /// The exhaustive oracle refuses blocklengths that would take too long.
    #[error("blocklength {n} exceeds the exhaustive-sweep limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    /// The code-definition vector cannot be turned into an integer column count.
    #[error("code definition vector is not realizable at n = {n}: n*q[{index}] = {value}")]
    NotRealizable { n: usize, index: usize, value: f64 },

    /// Rounded column counts do not add up to the blocklength.
    #[error("rounded column counts sum to {total}, expected {n}")]
    InconsistentCounts { total: usize, n: usize },

    /// The centroid rotation used by the mean adjustment has no solution.
    #[error("mean adjustment infeasible: target {target} outside centroid radius {radius}")]
    InfeasibleMeanAdjust { target: f64, radius: f64 },

    /// A search direction could not be formed because its pre-normalization
    /// magnitude vanished.
    #[error("degenerate {which} direction (magnitude {magnitude:e})")]
    DegenerateDirection { which: &'static str, magnitude: f64 },

    /// The descent exceeded its outer-iteration budget.
    #[error("descent did not terminate within {iterations} outer iterations")]
    Timeout { iterations: usize },

    /// Reading or writing a file failed.
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    /// Malformed input data (files, vectors, parameters).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
