//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("cyclic index equals the pivot index {0}; the pair direction is undefined")]
    CyclicEqualsPivot(usize),

    #[error("interiority cap requires a nonzero reduced gradient")]
    ZeroGradientCap,

    #[error("points lie on different hyperplanes: e'x' = {lhs}, e'x'' = {rhs}")]
    HyperplaneMismatch { lhs: f64, rhs: f64 },

    #[error("zeta undefined: the strict active set is empty")]
    ZetaUndefined,

    #[error("minimum non-active bound distance undefined: all coordinates active")]
    DminUndefined,

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("line search failed after {backtracks} backtracks (outer {outer}, cyclic {cyclic}): {detail}")]
    LineSearchFailure {
        outer: usize,
        cyclic: usize,
        backtracks: u32,
        detail: String,
    },

    #[error("trace did not converge to the certificate point: sup distance {dist} > tol {tol}")]
    NotConverged { dist: f64, tol: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("enumeration oracle supports n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("no classification pattern verifies the KKT conditions (numerical degeneracy)")]
    NoVerifiedPattern,

    #[error("reference solver exceeded its iteration cap without reaching tolerance")]
    ReferenceIterationCap,

    #[error("bounds require strong convexity (mu > 0)")]
    MuRequired,

    #[error("R0 estimation needs either mu > 0 or level-set samples")]
    NoLevelSetSamples,

    #[error("objective does not expose a constant Hessian")]
    NoHessian,

    #[error("inconsistent active pattern: {0}")]
    BadPattern(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("invalid instance: {0}")]
    BadInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
