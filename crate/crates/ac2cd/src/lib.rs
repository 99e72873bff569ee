//! Almost cyclic 2-coordinate descent (AC2CD) with Armijo line search for
//! problems with one linear coupling constraint and box bounds,
//!
//! ```text
//!     min f(x)   s.t.   e'x = b,   l <= x <= u,
//! ```
//!
//! plus a verification layer that computes the method's rate constant,
//! identification radii and active-set complexity bounds and confronts them
//! with exact small-instance ground truth.
//!
//! The crate is organized around the solver and its checkable theory:
//!
//! - [`problem`]: instances, the objective-oracle contract, feasibility, KKT
//!   certificates and active sets.
//! - [`seminorm`]: the pivot-excluding inner product and seminorm the
//!   analysis is stated in.
//! - [`linesearch`]: maximum feasible stepsizes, interiority-preserving
//!   initial stepsizes, Armijo backtracking.
//! - [`solver`]: the outer/inner iteration loop, traces, and the empirical
//!   identification detector.
//! - [`theory`]: Lipschitz tables, the rate constant `C`, identification
//!   radii, complexity bounds, the lemma suite, and per-trace checks.
//! - [`oracle`]: exact QP ground truth by active-set enumeration, simplex
//!   projection, projected-gradient fallback.
//! - [`zoo`]: deterministic instance generators with designed certificates.
//! - [`suites`]: the named verification suites behind `ac2cd verify`.
//! - [`instance`]: the JSON instance format.

// index-based loops are the clearer idiom in the dense kernels here
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod instance;
pub mod linesearch;
pub mod oracle;
pub mod problem;
pub mod seminorm;
pub mod solver;
pub mod suites;
pub mod theory;
pub mod zoo;

pub use error::{Error, Result};
pub use instance::Instance;
pub use linesearch::{ArmijoParams, StepRecord, StepStrategy};
pub use problem::{KktCertificate, Objective, Problem, SolutionCertificate};
pub use solver::{
    solve, PermutationStrategy, SolveResult, SolveStatus, SolverConfig, Trace, TraceLevel,
};
