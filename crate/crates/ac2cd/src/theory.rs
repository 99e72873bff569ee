//! Constants and bounds of the convergence-rate and identification analysis,
//! plus the checks that confront them with recorded traces.
//!
//! Everything the analysis promises is made executable here: Lipschitz
//! tables, the rate constant `C`, the identification radii, the active-set
//! complexity bounds, the pairwise-direction lemma suite, and per-trace
//! inequality checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::ArmijoParams;
use crate::oracle::random_feasible_point;
use crate::problem::{Problem, SolutionCertificate};
use crate::seminorm::seminorm_excluding;
use crate::solver::Trace;

/// Local Lipschitz constants of the pairwise directional derivatives,
/// together with the aggregates the analysis uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzTable {
    pub n: usize,
    /// Global gradient Lipschitz constant `L`.
    pub global: f64,
    /// Row-major `n*n` matrix of `L_{i,j}`, zero diagonal, positive
    /// off-diagonal (zeros floored).
    pub pair: Vec<f64>,
    /// `L^max = max_{i,j} L_{i,j}`.
    pub max_pair: f64,
    /// `L_j = sum_i L_{i,j}`.
    pub column_sums: Vec<f64>,
    /// `max_j L_j`.
    pub max_column_sum: f64,
    /// Set when the entries come from sampling rather than an exact Hessian;
    /// bounds computed from an estimated table are estimates themselves.
    pub estimated: bool,
}

impl LipschitzTable {
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.n + j]
    }

    fn from_pair_matrix(n: usize, mut pair: Vec<f64>, global: f64, estimated: bool) -> Self {
        let max_entry = pair.iter().fold(0.0_f64, |m, v| m.max(*v));
        // zeros off the diagonal are replaced by a positive floor; any
        // positive overestimate preserves the inequalities
        let eta = if max_entry > 0.0 {
            1e-12 * max_entry
        } else {
            1e-12
        };
        for i in 0..n {
            for j in 0..n {
                if i != j && pair[i * n + j] == 0.0 {
                    pair[i * n + j] = eta;
                }
            }
        }
        let max_pair = pair.iter().fold(0.0_f64, |m, v| m.max(*v));
        let column_sums: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| pair[i * n + j]).sum())
            .collect();
        let max_column_sum = column_sums.iter().fold(0.0_f64, |m, v| m.max(*v));
        Self {
            n,
            global,
            pair,
            max_pair,
            column_sums,
            max_column_sum,
            estimated,
        }
    }
}

/// Largest-magnitude eigenvalue of a symmetric matrix by power iteration.
pub fn power_iteration(h: &[f64], n: usize, rel_tol: f64, max_iter: usize) -> f64 {
    let matvec = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| h[i * n + j] * v[j]).sum())
            .collect()
    };
    // deterministic start with unequal entries so no eigenvector is missed
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i + 1) as f64 / n as f64).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let hv = matvec(&v);
        let hv_norm = norm(&hv);
        if hv_norm == 0.0 {
            return 0.0;
        }
        let rayleigh: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        if (rayleigh - lambda).abs() <= rel_tol * rayleigh.abs().max(f64::MIN_POSITIVE) {
            return rayleigh.abs();
        }
        lambda = rayleigh;
        v = hv.into_iter().map(|a| a / hv_norm).collect();
    }
    lambda.abs()
}

/// Exact table for a quadratic: `L_{i,j} = |H_ii + H_jj - 2 H_ij|` and `L`
/// from power iteration at relative tolerance 1e-10.
pub fn lipschitz_table_quadratic(n: usize, h: &[f64]) -> Result<LipschitzTable> {
    if h.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: h.len(),
        });
    }
    let scale = h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (h[i * n + j] - h[j * n + i]).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut pair = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pair[i * n + j] = (h[i * n + i] + h[j * n + j] - 2.0 * h[i * n + j]).abs();
            }
        }
    }
    let global = power_iteration(h, n, 1e-10, 100_000);
    Ok(LipschitzTable::from_pair_matrix(n, pair, global, false))
}

/// Exact table for a problem whose oracle exposes a constant Hessian.
pub fn exact_table_for(p: &Problem) -> Result<LipschitzTable> {
    let h = p.oracle().constant_hessian().ok_or(Error::NoHessian)?;
    lipschitz_table_quadratic(p.dim(), &h)
}

/// Sampled table: `safety` times the largest observed difference quotient of
/// each pairwise directional derivative over `samples` draws from the given
/// box. Flagged as an estimate.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_table_sampled(
    p: &Problem,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    safety: f64,
    seed: u64,
) -> LipschitzTable {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| b - a)
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let draw_point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        lo.iter()
            .zip(hi)
            .map(|(&a, &b)| rng.gen_range(a..=b))
            .collect()
    };
    let mut pair = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best = 0.0_f64;
            for _ in 0..samples {
                let x = draw_point(&mut rng);
                let s = rng.gen_range(-width..width);
                let t = rng.gen_range(-width..width);
                if (s - t).abs() < 1e-9 * width {
                    continue;
                }
                // phi'(a) = grad_i f(x + a(e_i - e_j)) - grad_j f(...)
                let slope_at = |a: f64| {
                    let mut y = x.clone();
                    y[i] += a;
                    y[j] -= a;
                    p.partial(&y, i) - p.partial(&y, j)
                };
                let quotient = ((slope_at(s) - slope_at(t)) / (s - t)).abs();
                best = best.max(quotient);
            }
            pair[i * n + j] = safety * best;
            pair[j * n + i] = safety * best;
        }
    }
    // global constant from full-gradient difference quotients
    let mut global = 0.0_f64;
    for _ in 0..samples {
        let x = draw_point(&mut rng);
        let y = draw_point(&mut rng);
        let dist: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist < 1e-9 * width {
            continue;
        }
        let gx = p.gradient(&x);
        let gy = p.gradient(&y);
        let gdist: f64 = gx
            .iter()
            .zip(&gy)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        global = global.max(gdist / dist);
    }
    LipschitzTable::from_pair_matrix(n, pair, safety * global, true)
}

/// Constants of the sublinear rate bound `f(x^k) - f* <= C/k`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateConstants {
    /// Level-set radius `R0` in the pivot-excluding seminorms.
    pub r0: f64,
    /// Maximum strict complementarity measure `G*`.
    pub g_star: f64,
    /// Reciprocal stepsize floor `T = max{1/A_l, L^max / (2 delta (1-gamma))}`.
    pub t: f64,
    /// Per-outer error-to-progress factor `T R0 + 2 Lbar R0 + G*`.
    pub f_dec: f64,
    /// Rate constant: `f(x^k) - f* <= C / k`.
    pub c: f64,
    /// Strong-convexity modulus the constants were computed with (0 when
    /// unknown).
    pub mu: f64,
    /// Set when `R0` came from level-set samples (a lower estimate) rather
    /// than from strong convexity (an upper bound).
    pub r0_estimated: bool,
}

/// Compute the rate constants for a convex instance.
///
/// With `mu > 0`, `R0 = sqrt(2 (f(x0) - f*) / mu)` upper-bounds every
/// seminorm distance from the level set to the unique minimizer. Otherwise
/// caller-supplied level-set samples give a lower estimate, flagged as such.
pub fn rate_constants(
    p: &Problem,
    table: &LipschitzTable,
    cert: &SolutionCertificate,
    f_x0: f64,
    armijo: &ArmijoParams,
    mu: f64,
    level_samples: Option<&[Vec<f64>]>,
) -> Result<RateConstants> {
    let n = p.dim();
    let t =
        (1.0 / armijo.a_lower).max(table.max_pair / (2.0 * armijo.delta * (1.0 - armijo.gamma)));
    let (r0, r0_estimated) = if mu > 0.0 {
        ((2.0 * (f_x0 - cert.f_star).max(0.0) / mu).sqrt(), false)
    } else {
        let samples = level_samples.ok_or(Error::NoLevelSetSamples)?;
        if samples.is_empty() {
            return Err(Error::NoLevelSetSamples);
        }
        let mut r0 = 0.0_f64;
        for x in samples {
            let diff: Vec<f64> = x.iter().zip(&cert.x_star).map(|(a, b)| a - b).collect();
            for j in 0..n {
                r0 = r0.max(seminorm_excluding(&diff, j));
            }
        }
        (r0, true)
    };
    let grad = p.gradient(&cert.x_star);
    let g_star = grad.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - grad.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let f_dec = t * r0 + 2.0 * table.max_column_sum * r0 + g_star;
    let c = 3.0 * armijo.a_upper * (n as f64 - 1.0) * f_dec * f_dec / (2.0 * armijo.gamma);
    Ok(RateConstants {
        r0,
        g_star,
        t,
        f_dec,
        c,
        mu: mu.max(0.0),
        r0_estimated,
    })
}

/// Radii of the neighborhoods where pivot selection avoids the active set
/// (`r_j`) and the strictly active variables get pinned (`r_a`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IdentificationRadii {
    /// `tau * Dmax* / (1 + tau)`: inside this sup-norm ball the pivot is
    /// never an active coordinate.
    pub r_j: f64,
    /// `zeta / (2L + max{1/A_l, L^max/(2(1-gamma))})`; `None` when the strict
    /// active set is empty. The backtracking factor `delta` does not enter.
    pub r_a: Option<f64>,
}

pub fn identification_radii(
    cert: &SolutionCertificate,
    table: &LipschitzTable,
    global_l: f64,
    armijo: &ArmijoParams,
    tau: f64,
) -> Result<IdentificationRadii> {
    if cert.dmax_star.is_nan() || cert.dmax_star <= 0.0 {
        return Err(Error::BadInstance(
            "identification radii need Dmax* > 0 (no strictly interior coordinate at x*)".into(),
        ));
    }
    let r_j = tau * cert.dmax_star / (1.0 + tau);
    let denom =
        2.0 * global_l + (1.0 / armijo.a_lower).max(table.max_pair / (2.0 * (1.0 - armijo.gamma)));
    let r_a = cert.zeta.map(|z| z / denom);
    Ok(IdentificationRadii { r_j, r_a })
}

/// Upper bounds on the identification iteration counts, as floats (they can
/// be astronomically loose; magnitudes beyond integer range are expected).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexityBounds {
    /// Bound on the outer iteration after which the strictly active set is
    /// pinned; `None` when `r_a` is undefined (nothing to pin).
    pub k_active: Option<f64>,
    /// Bound on the outer iteration after which non-active coordinates stay
    /// strictly interior.
    pub k_nonactive: f64,
}

pub fn complexity_bounds(
    rc: &RateConstants,
    radii: &IdentificationRadii,
    dmin_star: f64,
) -> Result<ComplexityBounds> {
    if rc.mu <= 0.0 {
        return Err(Error::MuRequired);
    }
    let factor = 2.0 * rc.c / rc.mu;
    let k_active = radii.r_a.map(|r_a| {
        let worst = (radii.r_j.powi(-2)).max(r_a.powi(-2));
        (factor * worst).floor() + 1.0
    });
    let k_nonactive = (factor * dmin_star.powi(-2)).floor() + 1.0;
    Ok(ComplexityBounds {
        k_active,
        k_nonactive,
    })
}

/// Maximum normalized slacks of the three pairwise-direction inequalities
/// over randomly drawn feasible pairs. Positive slack means violation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub trials: usize,
    /// `||(grad f(x') - grad_j f(x') e) - (grad f(x'') - grad_j f(x'') e)||_(j)
    ///  <= L_j ||x' - x''||_(j)`
    pub gradient_map_slack: f64,
    /// `|grad_p f(v) - grad_j f(v) + g| <= L_j ||v - z||_(j)`
    pub reduced_gradient_slack: f64,
    /// `f(x'') <= f(x') + grad f(x')'(x''-x') + L_j/2 ||x'-x''||_(j)^2`
    pub descent_slack: f64,
    /// Count of trials whose normalized slack exceeded 1e-9.
    pub violations: usize,
}

/// Evaluate the three inequalities on `trials` random feasible pairs.
/// Violations are reported, never thrown.
pub fn lemma_suite(
    p: &Problem,
    table: &LipschitzTable,
    trials: usize,
    seed: u64,
) -> Result<LemmaSuiteReport> {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LemmaSuiteReport {
        trials,
        gradient_map_slack: f64::NEG_INFINITY,
        reduced_gradient_slack: f64::NEG_INFINITY,
        descent_slack: f64::NEG_INFINITY,
        violations: 0,
    };
    let normalized = |lhs: f64, rhs: f64| (lhs - rhs) / lhs.abs().max(rhs.abs()).max(1.0);
    for _ in 0..trials {
        let xp = random_feasible_point(p, &mut rng)?;
        let xpp = random_feasible_point(p, &mut rng)?;
        let j = rng.gen_range(0..n);
        let l_j = table.column_sums[j];
        let gp = p.gradient(&xp);
        let gpp = p.gradient(&xpp);
        let diff: Vec<f64> = xp.iter().zip(&xpp).map(|(a, b)| a - b).collect();
        let dist_j = seminorm_excluding(&diff, j);

        // reduced gradient map is L_j-Lipschitz in the seminorm
        let map_diff: Vec<f64> = (0..n)
            .map(|i| (gp[i] - gp[j]) - (gpp[i] - gpp[j]))
            .collect();
        let s1 = normalized(seminorm_excluding(&map_diff, j), l_j * dist_j);
        report.gradient_map_slack = report.gradient_map_slack.max(s1);

        // corollary form with z = x'', v = x'
        let cyclic = {
            let r = rng.gen_range(0..n - 1);
            if r >= j {
                r + 1
            } else {
                r
            }
        };
        let g = gpp[j] - gpp[cyclic];
        let s2 = normalized((gp[cyclic] - gp[j] + g).abs(), l_j * dist_j);
        report.reduced_gradient_slack = report.reduced_gradient_slack.max(s2);

        // quadratic upper model in the seminorm
        let lin: f64 = gp.iter().zip(&diff).map(|(a, b)| -a * b).sum();
        let s3 = normalized(
            p.eval(&xpp),
            p.eval(&xp) + lin + 0.5 * l_j * dist_j * dist_j,
        );
        report.descent_slack = report.descent_slack.max(s3);

        if s1 > 1e-9 || s2 > 1e-9 || s3 > 1e-9 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// One violated inequality in a trace check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckViolation {
    pub outer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub what: String,
}

fn violation(outer: usize, inner: Option<usize>, lhs: f64, rhs: f64, what: &str) -> CheckViolation {
    CheckViolation {
        outer,
        inner,
        lhs,
        rhs,
        what: what.to_string(),
    }
}

/// Objective values along the iterate sequence `x^0..x^K`.
fn value_sequence(trace: &Trace) -> Vec<f64> {
    trace
        .outers
        .iter()
        .map(|r| r.f)
        .chain(std::iter::once(trace.final_f))
        .collect()
}

/// `f(x^{k+1}) <= f(x^k)` for every recorded transition, up to evaluation
/// noise (a step whose true decrease sits below the rounding granularity of
/// `f` can tick the recorded value up by an ulp).
pub fn check_monotone_descent(trace: &Trace) -> Vec<CheckViolation> {
    let fs = value_sequence(trace);
    fs.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + 1e-12 * (1.0 + w[0].abs()))
        .map(|(k, w)| violation(k, None, w[1], w[0], "monotone descent"))
        .collect()
}

/// Per-outer sufficient decrease in the pivot-excluding seminorm:
/// `f(x^k) - f(x^{k+1}) >= (gamma/A_u) ||x^{k+1} - x^k||_(j(k))^2`, with
/// `1e-10 (1 + |f(x^k)|)` slack.
pub fn check_armijo_decrease(trace: &Trace, gamma: f64, a_upper: f64) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    let fs = value_sequence(trace);
    for (k, rec) in trace.outers.iter().enumerate() {
        let x_next = trace
            .outers
            .get(k + 1)
            .map(|r| r.x.as_slice())
            .unwrap_or(trace.final_x.as_slice());
        let diff: Vec<f64> = x_next.iter().zip(&rec.x).map(|(a, b)| a - b).collect();
        let step = seminorm_excluding(&diff, rec.j);
        let lhs = fs[k] - fs[k + 1];
        let rhs = gamma / a_upper * step * step - 1e-10 * (1.0 + fs[k].abs());
        if lhs < rhs {
            out.push(violation(
                k,
                None,
                lhs,
                rhs,
                "per-outer sufficient decrease",
            ));
        }
    }
    out
}

/// Stepsize floor: every inner `alpha >= min{Delta, 2 delta (1-gamma) /
/// L_{p,j}} - 1e-12`.
pub fn check_stepsize_floor(
    trace: &Trace,
    table: &LipschitzTable,
    delta: f64,
    gamma: f64,
) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    for rec in &trace.outers {
        for (i, step) in rec.steps.iter().enumerate() {
            if step.cyclic == rec.j {
                continue; // structural no-op, L_{j,j} = 0
            }
            let floor = step
                .initial_step
                .min(2.0 * delta * (1.0 - gamma) / table.pair(step.cyclic, rec.j));
            if step.alpha < floor - 1e-12 {
                out.push(violation(
                    rec.k,
                    Some(i),
                    step.alpha,
                    floor,
                    "stepsize floor",
                ));
            }
        }
    }
    out
}

/// Interiority of the pivot through every inner cycle:
/// `D_j(z^{k,i+1}) >= eps^i D_j(x^k)` (1e-14 slack) and strictly
/// `l_j < z_j < u_j` at every inner point. Requires a full trace.
pub fn check_interiority(trace: &Trace, p: &Problem, epsilon: f64) -> Result<Vec<CheckViolation>> {
    let mut out = Vec::new();
    for rec in &trace.outers {
        let points = rec.inner_points.as_ref().ok_or_else(|| {
            Error::BadConfig("interiority check requires TraceLevel::Full".into())
        })?;
        let d0 = p.distance_to_bound(&rec.x, rec.j);
        let mut factor = 1.0;
        for (i, z) in points.iter().enumerate() {
            if !(p.lower()[rec.j] < z[rec.j] && z[rec.j] < p.upper()[rec.j]) {
                out.push(violation(
                    rec.k,
                    Some(i),
                    z[rec.j],
                    0.0,
                    "pivot left the interior",
                ));
            }
            if i == 0 {
                continue; // z^{k,1} = x^k
            }
            factor *= epsilon;
            let lhs = p.distance_to_bound(z, rec.j);
            let rhs = factor * d0;
            if lhs + 1e-14 * rhs.abs().max(1.0) < rhs {
                out.push(violation(rec.k, Some(i), lhs, rhs, "interiority ratio"));
            }
        }
    }
    Ok(out)
}

/// Sublinear rate: `f(x^k) - f* <= C/k + 1e-9` for every recorded `k >= 1`.
pub fn check_rate(trace: &Trace, f_star: f64, c: f64) -> Vec<CheckViolation> {
    let fs = value_sequence(trace);
    fs.iter()
        .enumerate()
        .skip(1)
        .filter(|(k, &f)| f - f_star > c / *k as f64 + 1e-9)
        .map(|(k, &f)| violation(k, None, f - f_star, c / k as f64, "rate bound C/k"))
        .collect()
}

/// Decrease-versus-error inequality behind the rate bound:
/// `f(x^k) - f(x^{k+1}) >= gamma (f(x^{k+1}) - f*)^2 / (A_u (n-1) f_dec^2)`.
pub fn check_error_decrease(
    trace: &Trace,
    f_star: f64,
    gamma: f64,
    a_upper: f64,
    n: usize,
    f_dec: f64,
) -> Vec<CheckViolation> {
    let fs = value_sequence(trace);
    let denom = a_upper * (n as f64 - 1.0) * f_dec * f_dec;
    fs.windows(2)
        .enumerate()
        .filter_map(|(k, w)| {
            let lhs = w[0] - w[1];
            let err = w[1] - f_star;
            let rhs = gamma * err * err / denom - 1e-10 * (1.0 + w[0].abs());
            (lhs < rhs).then(|| violation(k, None, lhs, rhs, "decrease vs error"))
        })
        .collect()
}

/// Post-hoc check that every observed initial-stepsize cap `A` stayed at or
/// above the configured `A_l`, with the observed minimum. The runtime never
/// clamps a cap upward (that could break interiority); `A_l` only enters the
/// theory constants, so this is where the two meet.
pub fn check_cap_floor(trace: &Trace, a_lower: f64) -> (Option<f64>, Vec<CheckViolation>) {
    let mut min_cap: Option<f64> = None;
    let mut out = Vec::new();
    for rec in &trace.outers {
        for (i, step) in rec.steps.iter().enumerate() {
            min_cap = Some(min_cap.map_or(step.cap, |m: f64| m.min(step.cap)));
            if step.cap < a_lower {
                out.push(violation(
                    rec.k,
                    Some(i),
                    step.cap,
                    a_lower,
                    "cap below A_l",
                ));
            }
        }
    }
    (min_cap, out)
}

/// Pivot admissibility: `D_{j(k)}(x^k) >= tau * D^k` at every outer
/// iteration.
pub fn check_pivot_admissibility(trace: &Trace, p: &Problem, tau: f64) -> Vec<CheckViolation> {
    trace
        .outers
        .iter()
        .filter_map(|rec| {
            let lhs = p.distance_to_bound(&rec.x, rec.j);
            let rhs = tau * rec.max_dist;
            (lhs < rhs).then(|| violation(rec.k, None, lhs, rhs, "pivot admissibility"))
        })
        .collect()
}

fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Inside the `r_j` sup-norm ball the recorded pivot is never an active
/// coordinate of `x*`.
pub fn check_radius_pivot_rule(
    trace: &Trace,
    cert: &SolutionCertificate,
    r_j: f64,
) -> Vec<CheckViolation> {
    trace
        .outers
        .iter()
        .filter(|rec| sup_distance(&rec.x, &cert.x_star) < r_j)
        .filter(|rec| cert.active.contains(&rec.j))
        .map(|rec| {
            violation(
                rec.k,
                None,
                rec.j as f64,
                r_j,
                "active pivot inside r_j ball",
            )
        })
        .collect()
}

/// Once `||x^k - x*||_inf < Dmin*`, all non-active coordinates are strictly
/// interior.
pub fn check_radius_nonactive(
    trace: &Trace,
    p: &Problem,
    cert: &SolutionCertificate,
    dmin_star: f64,
) -> Vec<CheckViolation> {
    let mut out = Vec::new();
    for (k, x) in trace.points().iter().enumerate() {
        if sup_distance(x, &cert.x_star) >= dmin_star {
            continue;
        }
        for h in 0..p.dim() {
            if cert.active.contains(&h) {
                continue;
            }
            if !(p.lower()[h] < x[h] && x[h] < p.upper()[h]) {
                out.push(violation(
                    k,
                    Some(h),
                    x[h],
                    dmin_star,
                    "non-active at a bound inside Dmin* ball",
                ));
            }
        }
    }
    out
}

/// Once every inner point of every later outer iteration lies inside the
/// Euclidean `r_a` ball, the strictly active coordinates of all subsequent
/// iterates equal `x*` exactly. Requires a full trace.
pub fn check_radius_strict_active(
    trace: &Trace,
    cert: &SolutionCertificate,
    r_a: f64,
) -> Result<Vec<CheckViolation>> {
    let euclid = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut inside: Vec<bool> = Vec::with_capacity(trace.outers.len());
    for rec in &trace.outers {
        let points = rec.inner_points.as_ref().ok_or_else(|| {
            Error::BadConfig("strict-active radius check requires TraceLevel::Full".into())
        })?;
        inside.push(points.iter().all(|z| euclid(z, &cert.x_star) < r_a));
    }
    // first k0 from which all later outers stay inside the ball
    let k0 = match inside.iter().rposition(|&ok| !ok) {
        None => 0,
        Some(v) if v + 1 >= inside.len() => return Ok(Vec::new()), // never settles
        Some(v) => v + 1,
    };
    let mut out = Vec::new();
    for (idx, x) in trace.points().iter().enumerate().skip(k0 + 1) {
        for &h in &cert.strict_active {
            if x[h] != cert.x_star[h] {
                out.push(violation(
                    idx,
                    Some(h),
                    x[h],
                    cert.x_star[h],
                    "strict-active not pinned past r_a entry",
                ));
            }
        }
    }
    Ok(out)
}
