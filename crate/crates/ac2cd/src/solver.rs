//! The almost cyclic 2-coordinate descent loop.
//!
//! Each outer iteration fixes a pivot coordinate `j(k)` whose bound distance
//! is maximal, then cycles the other index through a permutation; every inner
//! step moves the pair `(p, j(k))` along `g (e_p - e_j)` with an Armijo
//! stepsize. Working-set selection needs no derivatives; each inner step
//! needs exactly two partial derivatives.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::{armijo, initial_cap, max_feasible_stepsize, ArmijoParams, StepRecord};
use crate::problem::{KktCertificate, Problem, SolutionCertificate};

/// Order in which the cyclic coordinate runs through `0..n` per outer
/// iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationStrategy {
    Identity,
    /// One seeded shuffle, reused by every outer iteration.
    FixedShuffle(u64),
    /// A fresh seeded shuffle per outer iteration (stream = outer index).
    ReshufflePerOuter(u64),
}

/// How much of the inner state the trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Per-outer records without the inner iterates.
    Summary,
    /// Additionally store all inner points `z^{k,1..n+1}`; several properties
    /// quantify over them.
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Pivot admissibility fraction in (0,1]; the argmax pivot rule satisfies
    /// the admissibility inequality for every such tau.
    pub tau: f64,
    pub permutation: PermutationStrategy,
    pub armijo: ArmijoParams,
    pub max_outer: usize,
    /// Stop when the KKT residual drops to this level.
    pub kkt_tol: f64,
    /// Bound-membership tolerance for classification and snapshots.
    pub active_tol: f64,
    pub trace_level: TraceLevel,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            permutation: PermutationStrategy::ReshufflePerOuter(0),
            armijo: ArmijoParams::default(),
            max_outer: 100_000,
            kkt_tol: 1e-8,
            active_tol: 1e-8,
            trace_level: TraceLevel::Full,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::BadConfig(format!(
                "tau must be in (0,1], got {}",
                self.tau
            )));
        }
        if !(self.kkt_tol >= 0.0 && self.active_tol >= 0.0) {
            return Err(Error::BadConfig("tolerances must be nonnegative".into()));
        }
        self.armijo.validate()
    }
}

/// One executed outer iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterRecord {
    pub k: usize,
    /// Iterate at the start of the iteration.
    pub x: Vec<f64>,
    pub f: f64,
    pub kkt_residual: f64,
    /// Pivot index `j(k)`.
    pub j: usize,
    /// Maximum bound distance `D^k` at `x`.
    #[serde(with = "crate::problem::extended_real")]
    pub max_dist: f64,
    /// Set when `D^k = 0`: every coordinate at a bound, the pivot rule is
    /// vacuous and the lowest index was used.
    pub degenerate_stall: bool,
    pub permutation: Vec<usize>,
    /// Indices of `x` at a bound within the snapshot tolerance.
    pub active: Vec<usize>,
    pub steps: Vec<StepRecord>,
    /// Inner points `z^{k,1..n+1}` (n+1 vectors) under `TraceLevel::Full`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_points: Option<Vec<Vec<f64>>>,
}

/// Why a solve stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationCap,
    LineSearchFailure(String),
}

/// Full run history: one record per executed outer iteration plus the final
/// point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub outers: Vec<OuterRecord>,
    pub final_x: Vec<f64>,
    pub final_f: f64,
    pub final_residual: f64,
    pub final_active: Vec<usize>,
}

impl Trace {
    /// The iterate sequence `x^0, ..., x^K` (outer starts plus the final
    /// point).
    pub fn points(&self) -> Vec<&[f64]> {
        self.outers
            .iter()
            .map(|r| r.x.as_slice())
            .chain(std::iter::once(self.final_x.as_slice()))
            .collect()
    }

    /// One JSON object per line, one line per executed outer iteration.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.outers {
            out.push_str(&serde_json::to_string(rec).expect("trace serializes"));
            out.push('\n');
        }
        out
    }

    /// Fixed-column CSV: `k,f,gap,residual,j,Dk,n_active,min_alpha,max_backtracks`.
    ///
    /// `gap` is `f - f_star` when a reference value is available. The last
    /// row is the final point; it has no executed iteration behind it, so the
    /// per-iteration columns stay empty.
    pub fn csv_summary(&self, f_star: Option<f64>) -> String {
        let mut out = String::from("k,f,gap,residual,j,Dk,n_active,min_alpha,max_backtracks\n");
        let gap = |f: f64| match f_star {
            Some(fs) => format!("{:e}", f - fs),
            None => String::new(),
        };
        for rec in &self.outers {
            let min_alpha = rec
                .steps
                .iter()
                .filter(|s| s.alpha > 0.0)
                .map(|s| s.alpha)
                .fold(f64::INFINITY, f64::min);
            let max_backtracks = rec.steps.iter().map(|s| s.backtracks).max().unwrap_or(0);
            out.push_str(&format!(
                "{},{:e},{},{:e},{},{:e},{},{},{}\n",
                rec.k,
                rec.f,
                gap(rec.f),
                rec.kkt_residual,
                rec.j,
                rec.max_dist,
                rec.active.len(),
                if min_alpha.is_finite() {
                    format!("{min_alpha:e}")
                } else {
                    String::new()
                },
                max_backtracks,
            ));
        }
        out.push_str(&format!(
            "{},{:e},{},{:e},,,{},,\n",
            self.outers.len(),
            self.final_f,
            gap(self.final_f),
            self.final_residual,
            self.final_active.len(),
        ));
        out
    }
}

/// Solve outcome: trace, final stationarity certificate and stop reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub trace: Trace,
    pub certificate: KktCertificate,
    pub status: SolveStatus,
}

/// Pivot selection: argmax of the bound distances, lowest index on ties.
///
/// This is the strictest admissible choice: it satisfies
/// `D_j(x) >= tau * D(x)` for every `tau` in (0,1]. When all coordinates are
/// at bounds (`D = 0`) it degenerates to the lowest index; callers flag that
/// case.
pub fn select_pivot(p: &Problem, x: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_d = p.distance_to_bound(x, 0);
    for h in 1..p.dim() {
        let d = p.distance_to_bound(x, h);
        if d > best_d {
            best = h;
            best_d = d;
        }
    }
    best
}

/// The cyclic order used by outer iteration `k`.
pub fn permutation_for_outer(strategy: PermutationStrategy, n: usize, k: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    match strategy {
        PermutationStrategy::Identity => {}
        PermutationStrategy::FixedShuffle(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            perm.shuffle(&mut rng);
        }
        PermutationStrategy::ReshufflePerOuter(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            perm.shuffle(&mut rng);
        }
    }
    perm
}

/// One inner iteration: move the pair `(cyclic, pivot)` from `z`.
///
/// When `cyclic == pivot` the direction is structurally zero and the step is
/// recorded as a no-op, so every outer iteration carries exactly `n` step
/// records.
pub fn inner_step(
    p: &Problem,
    z: &[f64],
    cyclic: usize,
    pivot: usize,
    params: &ArmijoParams,
) -> Result<(Vec<f64>, StepRecord)> {
    if cyclic == pivot {
        return Ok((
            z.to_vec(),
            StepRecord {
                cyclic,
                g: 0.0,
                alpha_bar: 0.0,
                cap: params.a_upper,
                initial_step: 0.0,
                alpha: 0.0,
                backtracks: 0,
                hit_boundary: false,
            },
        ));
    }
    let g = p.partial(z, pivot) - p.partial(z, cyclic);
    let max_step = max_feasible_stepsize(p, z, cyclic, pivot, g)?;
    let cap = initial_cap(p, z, pivot, g, params);
    let initial_step = max_step.alpha_bar.min(cap);
    let out = armijo(
        p,
        z,
        cyclic,
        pivot,
        g,
        &max_step,
        initial_step,
        -g * g,
        params,
    )?;
    let hit_boundary =
        out.alpha > 0.0 && out.alpha == max_step.alpha_bar && max_step.alpha_bar.is_finite();
    let record = StepRecord {
        cyclic,
        g,
        alpha_bar: max_step.alpha_bar,
        cap,
        initial_step,
        alpha: out.alpha,
        backtracks: out.backtracks,
        hit_boundary,
    };
    Ok((out.point, record))
}

fn outer_iteration_with_residual(
    p: &Problem,
    x: &[f64],
    k: usize,
    config: &SolverConfig,
    kkt_residual: f64,
) -> Result<(Vec<f64>, OuterRecord)> {
    let n = p.dim();
    let j = select_pivot(p, x);
    let max_dist = p.max_distance(x);
    let permutation = permutation_for_outer(config.permutation, n, k);
    let mut steps = Vec::with_capacity(n);
    let mut inner_points = match config.trace_level {
        TraceLevel::Full => Some(vec![x.to_vec()]),
        TraceLevel::Summary => None,
    };
    let mut z = x.to_vec();
    for &cyclic in &permutation {
        let (z_next, rec) = inner_step(p, &z, cyclic, j, &config.armijo).map_err(|e| match e {
            Error::LineSearchFailure {
                cyclic,
                backtracks,
                detail,
                ..
            } => Error::LineSearchFailure {
                outer: k,
                cyclic,
                backtracks,
                detail,
            },
            other => other,
        })?;
        steps.push(rec);
        z = z_next;
        if let Some(points) = inner_points.as_mut() {
            points.push(z.clone());
        }
    }
    let record = OuterRecord {
        k,
        x: x.to_vec(),
        f: p.eval(x),
        kkt_residual,
        j,
        max_dist,
        degenerate_stall: max_dist == 0.0,
        permutation,
        active: p.bound_set(x, config.active_tol),
        steps,
        inner_points,
    };
    Ok((z, record))
}

/// One full outer iteration from `x` (index `k` fixes the permutation).
pub fn outer_iteration(
    p: &Problem,
    x: &[f64],
    k: usize,
    config: &SolverConfig,
) -> Result<(Vec<f64>, OuterRecord)> {
    let residual = p.kkt_certificate(x, config.active_tol)?.residual;
    outer_iteration_with_residual(p, x, k, config, residual)
}

/// Run the solver from `x0` until the KKT residual reaches `kkt_tol` or the
/// outer-iteration cap is hit.
pub fn solve(p: &Problem, x0: &[f64], config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    if !p.is_feasible(x0, 1e-9)? {
        return Err(Error::Infeasible(format!(
            "x0 violates the constraints beyond tolerance: {x0:?}"
        )));
    }
    let f0 = p.eval(x0);
    if !f0.is_finite() {
        return Err(Error::Infeasible(format!("f(x0) = {f0} is not finite")));
    }

    let mut x = x0.to_vec();
    let mut outers = Vec::new();
    let mut status = SolveStatus::IterationCap;
    for k in 0..config.max_outer {
        let cert = p.kkt_certificate(&x, config.active_tol)?;
        if cert.residual <= config.kkt_tol {
            status = SolveStatus::Converged;
            break;
        }
        match outer_iteration_with_residual(p, &x, k, config, cert.residual) {
            Ok((x_next, record)) => {
                outers.push(record);
                x = x_next;
            }
            Err(Error::LineSearchFailure {
                outer,
                cyclic,
                backtracks,
                detail,
            }) => {
                status = SolveStatus::LineSearchFailure(format!(
                    "outer {outer}, cyclic {cyclic}, {backtracks} backtracks: {detail}"
                ));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let final_cert = p.kkt_certificate(&x, config.active_tol)?;
    if status == SolveStatus::IterationCap && final_cert.residual <= config.kkt_tol {
        // cap reached exactly at a stationary point
        status = SolveStatus::Converged;
    }
    let trace = Trace {
        final_f: p.eval(&x),
        final_residual: final_cert.residual,
        final_active: p.bound_set(&x, config.active_tol),
        final_x: x,
        outers,
    };
    Ok(SolveResult {
        trace,
        certificate: final_cert,
        status,
    })
}

/// Empirical identification iterations from a converged trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IdentificationResult {
    /// Smallest `k` with `x^k'_h = x*_h` for all strictly active `h` and all
    /// recorded `k' > k`; `None` when the tail never satisfies it.
    pub k_active: Option<usize>,
    /// Smallest `k` with every non-active coordinate strictly interior for
    /// all recorded `k' > k`; `None` when the tail never satisfies it.
    pub k_nonactive: Option<usize>,
}

/// Detect when the strictly active set is pinned and the non-active set is
/// interior, with persistence (a transient bound hit later abandoned does not
/// count).
pub fn identification_detector(
    trace: &Trace,
    p: &Problem,
    cert: &SolutionCertificate,
    tol: f64,
) -> Result<IdentificationResult> {
    let points = trace.points();
    let last = points.last().expect("trace has at least the final point");
    let dist = last
        .iter()
        .zip(&cert.x_star)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if dist > tol {
        return Err(Error::NotConverged { dist, tol });
    }
    let terminal = points.len() - 1;

    // exact equality on purpose: updates clamp onto bounds
    let active_ok = |x: &[f64]| cert.strict_active.iter().all(|&h| x[h] == cert.x_star[h]);
    let interior_ok = |x: &[f64]| {
        (0..p.dim())
            .filter(|h| !cert.active.contains(h))
            .all(|h| p.lower()[h] < x[h] && x[h] < p.upper()[h])
    };

    let last_violation = |ok: &dyn Fn(&[f64]) -> bool| -> Option<usize> {
        points
            .iter()
            .enumerate()
            .rev()
            .find(|(_, x)| !ok(x))
            .map(|(i, _)| i)
    };
    let settle = |violation: Option<usize>| -> Option<usize> {
        match violation {
            None => Some(0),
            Some(v) if v == terminal => None,
            Some(v) => Some(v),
        }
    };
    Ok(IdentificationResult {
        k_active: settle(last_violation(&active_ok)),
        k_nonactive: settle(last_violation(&interior_ok)),
    })
}
