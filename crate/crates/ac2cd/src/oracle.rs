//! Desk-scale ground truth: exact QP solver by active-set enumeration,
//! simplex projection, and a projected-gradient fallback.
//!
//! Everything here is independent of the coordinate-descent path it is used
//! to check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{Problem, SolutionCertificate, DEFAULT_ACTIVE_TOL};

/// Largest dimension the pattern enumeration accepts (3^n patterns).
pub const ENUMERATION_MAX_DIM: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Interior,
    AtLower,
    AtUpper,
}

/// Exact minimizer of a strictly convex quadratic over the feasible set, by
/// enumerating all classifications of coordinates into
/// interior / at-lower / at-upper.
///
/// For each pattern the stationarity system on the interior block is solved
/// with the equality multiplier as an extra unknown; primal bounds are
/// pre-checked before any factorization, and a candidate only survives a full
/// KKT verification. The first verified pattern in index order wins (the
/// minimizer is unique under positive definiteness).
pub fn solve_qp_enumerate(p: &Problem) -> Result<SolutionCertificate> {
    let n = p.dim();
    if n > ENUMERATION_MAX_DIM {
        return Err(Error::TooLarge {
            n,
            max: ENUMERATION_MAX_DIM,
        });
    }
    let h_flat = p.oracle().constant_hessian().ok_or(Error::NoHessian)?;
    let h = DMatrix::from_row_slice(n, n, &h_flat);
    if h.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let q: Vec<f64> = p.gradient(&vec![0.0; n]);

    // roles available per coordinate, interior first so the pattern index
    // order is deterministic
    let roles_per_coord: Vec<Vec<Role>> = (0..n)
        .map(|i| {
            let mut roles = vec![Role::Interior];
            if p.lower()[i].is_finite() {
                roles.push(Role::AtLower);
            }
            if p.upper()[i].is_finite() {
                roles.push(Role::AtUpper);
            }
            roles
        })
        .collect();

    let scale = 1.0_f64.max(p.rhs().abs());
    let feas_tol = 1e-9 * scale;
    let mut counter = vec![0usize; n];
    let mut best: Option<(f64, Vec<f64>, f64, Vec<usize>)> = None;
    'patterns: loop {
        let pattern: Vec<Role> = counter
            .iter()
            .zip(&roles_per_coord)
            .map(|(&c, roles)| roles[c])
            .collect();

        if let Some((x, lambda, interior)) = try_pattern(p, &h, &q, &pattern, feas_tol) {
            let residual = p.kkt_certificate(&x, 1e-10)?.residual;
            if residual <= 1e-9 * gradient_scale(p, &x) {
                best = Some((residual, x, lambda, interior));
                break 'patterns;
            }
        }

        // mixed-radix increment over the per-coordinate role lists
        let mut pos = 0;
        loop {
            if pos == n {
                break 'patterns;
            }
            counter[pos] += 1;
            if counter[pos] < roles_per_coord[pos].len() {
                break;
            }
            counter[pos] = 0;
            pos += 1;
        }
    }

    let (_, x_star, lambda_star, interior) = best.ok_or(Error::NoVerifiedPattern)?;
    let condition_estimate = if interior.is_empty() {
        None
    } else {
        Some(stationarity_condition(&h, &interior))
    };
    let (active, strict_active) = p.active_sets(&x_star, lambda_star, 1e-9);
    let (dmax_star, dmin_star) = p.bound_distance_extremes(&x_star, &active);
    let f_star = p.eval(&x_star);
    let mut cert = SolutionCertificate {
        x_star,
        lambda_star,
        f_star,
        active,
        strict_active,
        zeta: None,
        dmax_star,
        dmin_star,
        condition_estimate,
    };
    cert.zeta = p.zeta(&cert).ok();
    Ok(cert)
}

/// Solve one classification pattern; `None` when it is primal-infeasible,
/// singular, or violates a bound/sign condition.
fn try_pattern(
    p: &Problem,
    h: &DMatrix<f64>,
    q: &[f64],
    pattern: &[Role],
    feas_tol: f64,
) -> Option<(Vec<f64>, f64, Vec<usize>)> {
    let n = p.dim();
    let interior: Vec<usize> = (0..n).filter(|&i| pattern[i] == Role::Interior).collect();
    let mut x = vec![0.0; n];
    let mut fixed_sum = 0.0;
    for i in 0..n {
        match pattern[i] {
            Role::AtLower => {
                x[i] = p.lower()[i];
                fixed_sum += x[i];
            }
            Role::AtUpper => {
                x[i] = p.upper()[i];
                fixed_sum += x[i];
            }
            Role::Interior => {}
        }
    }
    let remainder = p.rhs() - fixed_sum;

    // primal capacity check before any factorization
    let cap_lo: f64 = interior.iter().map(|&i| p.lower()[i]).sum();
    let cap_hi: f64 = interior.iter().map(|&i| p.upper()[i]).sum();
    if remainder < cap_lo - feas_tol || remainder > cap_hi + feas_tol {
        return None;
    }

    let lambda;
    if interior.is_empty() {
        if remainder.abs() > feas_tol {
            return None;
        }
        // any multiplier between the upper-bound and lower-bound gradients
        let grad = p.gradient(&x);
        let hi = (0..n)
            .filter(|&i| pattern[i] == Role::AtLower)
            .map(|i| grad[i])
            .fold(f64::INFINITY, f64::min);
        let lo = (0..n)
            .filter(|&i| pattern[i] == Role::AtUpper)
            .map(|i| grad[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if lo > hi {
            return None;
        }
        lambda = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        };
    } else {
        // [ H_II  -e ] [x_I]   [ -q_I - H_IA x_A ]
        // [ e'     0 ] [ l ] = [    remainder    ]
        let m = interior.len();
        let mut mat = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (r, &i) in interior.iter().enumerate() {
            for (c, &j) in interior.iter().enumerate() {
                mat[(r, c)] = h[(i, j)];
            }
            mat[(r, m)] = -1.0;
            mat[(m, r)] = 1.0;
            let mut b = -q[i];
            for j in 0..n {
                if pattern[j] != Role::Interior {
                    b -= h[(i, j)] * x[j];
                }
            }
            rhs[r] = b;
        }
        rhs[m] = remainder;
        let solution = mat.lu().solve(&rhs)?;
        for (r, &i) in interior.iter().enumerate() {
            x[i] = solution[r];
            if x[i] < p.lower()[i] - feas_tol || x[i] > p.upper()[i] + feas_tol {
                return None;
            }
        }
        lambda = solution[m];
    }

    // dual sign conditions on the active coordinates
    let grad = p.gradient(&x);
    let grad_tol = 1e-9 * gradient_scale(p, &x);
    for i in 0..n {
        match pattern[i] {
            Role::AtLower if grad[i] < lambda - grad_tol => return None,
            Role::AtUpper if grad[i] > lambda + grad_tol => return None,
            _ => {}
        }
    }
    Some((x, lambda, interior))
}

fn gradient_scale(p: &Problem, x: &[f64]) -> f64 {
    p.gradient(x).iter().fold(1.0_f64, |m, g| m.max(g.abs()))
}

/// Infinity-norm condition estimate of the stationarity system on the
/// interior block.
fn stationarity_condition(h: &DMatrix<f64>, interior: &[usize]) -> f64 {
    let m = interior.len();
    let mut mat = DMatrix::zeros(m + 1, m + 1);
    for (r, &i) in interior.iter().enumerate() {
        for (c, &j) in interior.iter().enumerate() {
            mat[(r, c)] = h[(i, j)];
        }
        mat[(r, m)] = -1.0;
        mat[(m, r)] = 1.0;
    }
    let norm_inf = |a: &DMatrix<f64>| {
        (0..a.nrows())
            .map(|r| a.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match mat.clone().try_inverse() {
        Some(inv) => norm_inf(&mat) * norm_inf(&inv),
        None => f64::INFINITY,
    }
}

/// Euclidean projection onto the unit simplex `{x >= 0, e'x = 1}` by
/// sort-and-threshold.
pub fn simplex_projection(c: &[f64]) -> Vec<f64> {
    let mut sorted = c.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("no NaN in projection input"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    c.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Euclidean projection of `y` onto the feasible set, by bisection on the
/// equality multiplier with box clipping.
pub fn project_to_feasible(p: &Problem, y: &[f64]) -> Result<Vec<f64>> {
    let clip = |lambda: f64| -> Vec<f64> {
        y.iter()
            .zip(p.lower().iter().zip(p.upper()))
            .map(|(&yi, (&li, &ui))| (yi - lambda).max(li).min(ui))
            .collect()
    };
    let sum_at = |lambda: f64| -> f64 { clip(lambda).iter().sum() };

    // sum_at is non-increasing in lambda; expand until b is bracketed
    let mut width = 1.0 + y.iter().fold(0.0_f64, |m, v| m.max(v.abs())) + p.rhs().abs();
    let (mut lo, mut hi) = (-width, width);
    for _ in 0..200 {
        if sum_at(lo) >= p.rhs() && sum_at(hi) <= p.rhs() {
            break;
        }
        width *= 2.0;
        lo = -width;
        hi = width;
    }
    if !(sum_at(lo) >= p.rhs() && sum_at(hi) <= p.rhs()) {
        return Err(Error::Infeasible(
            "feasible set looks empty for this b".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) >= p.rhs() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * width {
            break;
        }
    }
    Ok(clip(0.5 * (lo + hi)))
}

/// A random feasible point: a uniform draw from a sampling box, projected
/// onto the feasible set. Infinite bound sides are replaced by a width-2
/// window next to the finite side (or around 0 when both sides are free).
pub fn random_feasible_point<R: rand::Rng>(p: &Problem, rng: &mut R) -> Result<Vec<f64>> {
    let y: Vec<f64> = p
        .lower()
        .iter()
        .zip(p.upper())
        .map(|(&l, &u)| {
            let (lo, hi) = match (l.is_finite(), u.is_finite()) {
                (true, true) => (l, u),
                (true, false) => (l, l + 2.0),
                (false, true) => (u - 2.0, u),
                (false, false) => (-1.0, 1.0),
            };
            rng.gen_range(lo..hi)
        })
        .collect();
    project_to_feasible(p, &y)
}

/// Projected-gradient reference solver for convex objectives; the fallback
/// oracle when no constant Hessian is available.
///
/// Stops at KKT residual `tol`; errors when the iteration cap is exceeded.
pub fn projected_gradient_reference(p: &Problem, x0: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = project_to_feasible(p, x0)?;
    let mut step = 1.0;
    let cap = 500_000;
    for _ in 0..cap {
        if p.kkt_certificate(&x, DEFAULT_ACTIVE_TOL)?.residual <= tol {
            return Ok(x);
        }
        let f_x = p.eval(&x);
        let grad = p.gradient(&x);
        // proximal backtracking: accept y when
        // f(y) <= f(x) + grad'(y-x) + ||y-x||^2 / (2 step)
        loop {
            let target: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let y = project_to_feasible(p, &target)?;
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let lin: f64 = grad.iter().zip(&diff).map(|(a, b)| a * b).sum();
            let sq: f64 = diff.iter().map(|d| d * d).sum();
            if p.eval(&y) <= f_x + lin + sq / (2.0 * step) + 1e-16 * f_x.abs().max(1.0) {
                x = y;
                step *= 1.2; // recover after conservative phases
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                return Err(Error::ReferenceIterationCap);
            }
        }
    }
    Err(Error::ReferenceIterationCap)
}
