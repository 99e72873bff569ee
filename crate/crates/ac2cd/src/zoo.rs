//! Deterministic test-problem generators with designed certificates.
//!
//! Instances are built inverse-first: pick the solution, the multiplier and
//! the complementarity margins, then choose the linear term so the KKT
//! conditions hold exactly. That makes `zeta`, the active sets and the bound
//! distances exact by construction, which the identification bounds depend
//! on.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::oracle::{project_to_feasible, random_feasible_point, simplex_projection};
use crate::problem::{FactoredQuadratic, Problem, QuadraticObjective, SolutionCertificate};

/// Designed position of a coordinate at the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordRole {
    Interior,
    AtLower,
    AtUpper,
}

/// A strongly convex quadratic with a designed certificate.
///
/// `margins[i]` is the gap `|grad_i f(x*) - lambda*|` requested for an active
/// coordinate `i`; a zero margin makes that coordinate degenerate (active but
/// not strictly). Bounds mix finite and infinite sides, driven by the seed,
/// with the sides a role needs kept finite.
pub fn gen_quadratic_designed(
    n: usize,
    seed: u64,
    mu: f64,
    l_cap: f64,
    roles: &[CoordRole],
    margins: &[f64],
) -> Result<Instance> {
    if roles.len() != n || margins.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: roles.len().max(margins.len()),
        });
    }
    if mu.is_nan() || mu <= 0.0 || l_cap < mu {
        return Err(Error::BadConfig(format!(
            "need 0 < mu <= l_cap, got {mu}, {l_cap}"
        )));
    }
    if !roles.contains(&CoordRole::Interior) {
        return Err(Error::BadPattern(
            "at least one coordinate must be interior at the solution".into(),
        ));
    }
    if margins.iter().any(|m| *m < 0.0) {
        return Err(Error::BadPattern("margins must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // SPD Hessian with spectrum exactly spanning [mu, l_cap]
    let gaussian: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let basis = DMatrix::from_row_slice(n, n, &gaussian).qr().q();
    let mut eigenvalues = vec![0.0; n];
    eigenvalues[0] = mu;
    eigenvalues[n - 1] = l_cap;
    for ev in eigenvalues.iter_mut().take(n - 1).skip(1) {
        *ev = rng.gen_range(mu..=l_cap);
    }
    let mut h = DMatrix::zeros(n, n);
    for (k, &ev) in eigenvalues.iter().enumerate() {
        let col = basis.column(k);
        h += ev * col * col.transpose();
    }
    let mut h_flat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // symmetrize away the accumulation rounding
            h_flat[i * n + j] = 0.5 * (h[(i, j)] + h[(j, i)]);
        }
    }

    // bounds: base box [0,1], sides widened to infinity where the role allows
    let mut lower = vec![0.0; n];
    let mut upper = vec![1.0; n];
    let mut x_star = vec![0.0; n];
    for i in 0..n {
        match roles[i] {
            CoordRole::AtLower => {
                if rng.gen_bool(0.4) {
                    upper[i] = f64::INFINITY;
                }
                x_star[i] = lower[i];
            }
            CoordRole::AtUpper => {
                if rng.gen_bool(0.4) {
                    lower[i] = f64::NEG_INFINITY;
                }
                x_star[i] = upper[i];
            }
            CoordRole::Interior => {
                let free_low = rng.gen_bool(0.2);
                let free_high = rng.gen_bool(0.2);
                if free_low {
                    lower[i] = f64::NEG_INFINITY;
                }
                if free_high {
                    upper[i] = f64::INFINITY;
                }
                x_star[i] = rng.gen_range(0.25..0.75);
            }
        }
    }

    let lambda_star = rng.gen_range(-0.5..0.5);
    let target_grad: Vec<f64> = (0..n)
        .map(|i| match roles[i] {
            CoordRole::Interior => lambda_star,
            CoordRole::AtLower => lambda_star + margins[i],
            CoordRole::AtUpper => lambda_star - margins[i],
        })
        .collect();
    // grad f(x*) = H x* + q = target  =>  q = target - H x*
    let q: Vec<f64> = (0..n)
        .map(|i| {
            let hx: f64 = (0..n).map(|j| h_flat[i * n + j] * x_star[j]).sum();
            target_grad[i] - hx
        })
        .collect();
    let b: f64 = x_star.iter().sum();

    let oracle = QuadraticObjective::new(n, h_flat, q, 0.0)?;
    let problem = Problem::new(b, lower, upper, Arc::new(oracle))?;

    let active: Vec<usize> = (0..n)
        .filter(|&i| roles[i] != CoordRole::Interior)
        .collect();
    let strict_active: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| margins[i] > 0.0)
        .collect();
    let zeta = strict_active
        .iter()
        .map(|&i| margins[i])
        .fold(f64::INFINITY, f64::min);
    let (dmax_star, dmin_star) = problem.bound_distance_extremes(&x_star, &active);
    let f_star = problem.eval(&x_star);
    let certificate = SolutionCertificate {
        x_star,
        lambda_star,
        f_star,
        active,
        strict_active: strict_active.clone(),
        zeta: (!strict_active.is_empty()).then_some(zeta),
        dmax_star,
        dmin_star,
        condition_estimate: None,
    };
    Ok(Instance {
        name: format!("designed-n{n}-seed{seed}"),
        problem,
        certificate: Some(certificate),
        mu: Some(mu),
    })
}

/// `f = ||x - c||^2 / 2` over the unit simplex (`b = 1`, `l = 0`,
/// `u = +inf`), certified through the sort-and-threshold projection.
pub fn gen_simplex_projection(c: &[f64]) -> Result<Instance> {
    let n = c.len();
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let c0 = 0.5 * c.iter().map(|v| v * v).sum::<f64>();
    let oracle = QuadraticObjective::new(n, h, c.iter().map(|v| -v).collect(), c0)?;
    let problem = Problem::new(1.0, vec![0.0; n], vec![f64::INFINITY; n], Arc::new(oracle))?;

    let x_star = simplex_projection(c);
    let support: Vec<usize> = (0..n).filter(|&i| x_star[i] > 0.0).collect();
    let threshold = (support.iter().map(|&i| c[i]).sum::<f64>() - 1.0) / support.len() as f64;
    let lambda_star = -threshold;
    let (active, strict_active) = problem.active_sets(&x_star, lambda_star, 1e-9);
    let (dmax_star, dmin_star) = problem.bound_distance_extremes(&x_star, &active);
    let mut certificate = SolutionCertificate {
        f_star: problem.eval(&x_star),
        x_star,
        lambda_star,
        active,
        strict_active,
        zeta: None,
        dmax_star,
        dmin_star,
        condition_estimate: None,
    };
    certificate.zeta = problem.zeta(&certificate).ok();
    Ok(Instance {
        name: format!("simplex-projection-n{n}"),
        problem,
        certificate: Some(certificate),
        mu: Some(1.0),
    })
}

/// The canonical worked instance: `c = (0.5, 0.7, -0.2)` on the 3-simplex.
pub fn e1() -> Instance {
    gen_simplex_projection(&[0.5, 0.7, -0.2]).expect("E1 is well formed")
}

/// SVM-like factored quadratic `f = ||Qx||^2 - q'x` with the +/-1 label
/// transformation folded into the bounds: `e'x = 0`, each coordinate in
/// `[0, C]` or `[-C, 0]`.
///
/// `mu` is the smallest eigenvalue of `2 Q'Q`, zero when `m < n`.
pub fn gen_svm_like(m: usize, n: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let q: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.0..1.0)).collect();
    let box_size = 1.0;
    let mut lower = vec![0.0; n];
    let mut upper = vec![box_size; n];
    for i in 0..n {
        if rng.gen_bool(0.5) {
            // label -1: variable transformed to [-C, 0]
            lower[i] = -box_size;
            upper[i] = 0.0;
        }
    }
    let oracle = FactoredQuadratic::new(m, n, factor.clone(), q, 0.0)?;
    let problem = Problem::new(0.0, lower, upper, Arc::new(oracle))?;
    let mu = smallest_hessian_eigenvalue(&problem);
    Ok(Instance {
        name: format!("svm-like-m{m}-n{n}-seed{seed}"),
        problem,
        certificate: None,
        mu,
    })
}

/// Smallest Hessian eigenvalue of a constant-Hessian objective, clamped to
/// zero when it is numerically rank-deficient. This is the analytic
/// strong-convexity modulus.
pub fn smallest_hessian_eigenvalue(p: &Problem) -> Option<f64> {
    let h = p.oracle().constant_hessian()?;
    let n = p.dim();
    let eigen = DMatrix::from_row_slice(n, n, &h).symmetric_eigen();
    let max_ev = eigen.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(*v));
    let min_ev = eigen
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(*v));
    Some(if min_ev < 1e-12 * max_ev.max(1.0) {
        0.0
    } else {
        min_ev
    })
}

/// Default starting point: the analytic center of the finite bounds,
/// projected onto the hyperplane.
pub fn default_x0(p: &Problem) -> Result<Vec<f64>> {
    let center: Vec<f64> = p
        .lower()
        .iter()
        .zip(p.upper())
        .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
            (true, true) => 0.5 * (l + u),
            (true, false) => l + 1.0,
            (false, true) => u - 1.0,
            (false, false) => 0.0,
        })
        .collect();
    let x0 = project_to_feasible(p, &center)?;
    if !p.eval(&x0).is_finite() {
        return Err(Error::Infeasible(
            "objective not finite at the default start".into(),
        ));
    }
    if p.max_distance(&x0) <= 0.0 {
        return Err(Error::Infeasible(
            "default start has every coordinate at a bound".into(),
        ));
    }
    Ok(x0)
}

/// Sampling check for the interior-coordinate assumption: draw feasible
/// points, keep those in the level set of `x0`, and reject if any has every
/// coordinate at a bound.
pub fn sampling_check_interior(p: &Problem, x0: &[f64], samples: usize, seed: u64) -> Result<bool> {
    let f0 = p.eval(x0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_interior = |x: &[f64]| (0..p.dim()).any(|i| p.distance_to_bound(x, i) > 0.0);
    if !has_interior(x0) {
        return Ok(false);
    }
    for _ in 0..samples {
        let x = random_feasible_point(p, &mut rng)?;
        if p.eval(&x) <= f0 && !has_interior(&x) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The standard battery: seeded strongly convex designed instances with
/// `n` cycling through 3..=10, mixed finite/infinite bounds, every margin
/// strictly positive (non-degenerate), at least one active coordinate.
pub fn standard_battery(count: usize, seed: u64) -> Vec<Instance> {
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let n = 3 + idx % 8;
        let mut roles: Vec<CoordRole> = (0..n)
            .map(|_| {
                let draw: f64 = rng.gen();
                if draw < 0.5 {
                    CoordRole::Interior
                } else if draw < 0.8 {
                    CoordRole::AtLower
                } else {
                    CoordRole::AtUpper
                }
            })
            .collect();
        if !roles.contains(&CoordRole::Interior) {
            roles[0] = CoordRole::Interior;
        }
        if roles.iter().all(|r| *r == CoordRole::Interior) {
            roles[n - 1] = CoordRole::AtLower;
        }
        let margins: Vec<f64> = roles
            .iter()
            .map(|r| match r {
                CoordRole::Interior => 0.0,
                _ => rng.gen_range(0.1..0.5),
            })
            .collect();
        let mu = rng.gen_range(0.5..2.0);
        let l_cap = mu * rng.gen_range(2.0..8.0);
        let instance_seed = seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(idx as u64);
        let inst = gen_quadratic_designed(n, instance_seed, mu, l_cap, &roles, &margins)
            .expect("battery pattern is always consistent");
        out.push(inst);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve_qp_enumerate;

    #[test]
    fn designed_certificate_survives_the_oracle_round_trip() {
        let roles = [
            CoordRole::Interior,
            CoordRole::AtLower,
            CoordRole::Interior,
            CoordRole::AtUpper,
        ];
        let margins = [0.0, 0.3, 0.0, 0.2];
        let inst = gen_quadratic_designed(4, 42, 1.0, 5.0, &roles, &margins).unwrap();
        let designed = inst.certificate.as_ref().unwrap();
        assert_eq!(designed.zeta, Some(0.2));
        let enumerated = solve_qp_enumerate(&inst.problem).unwrap();
        assert_eq!(enumerated.active, designed.active);
        assert_eq!(enumerated.strict_active, designed.strict_active);
        for i in 0..4 {
            assert!(
                (enumerated.x_star[i] - designed.x_star[i]).abs() < 1e-9,
                "coordinate {i}"
            );
        }
        assert!((enumerated.lambda_star - designed.lambda_star).abs() < 1e-9);
        assert!((enumerated.f_star - designed.f_star).abs() < 1e-9);
    }

    #[test]
    fn degenerate_margin_lands_in_a_minus_a_plus() {
        let roles = [CoordRole::Interior, CoordRole::AtLower, CoordRole::AtLower];
        let margins = [0.0, 0.0, 0.3];
        let inst = gen_quadratic_designed(3, 7, 1.0, 4.0, &roles, &margins).unwrap();
        let cert = inst.certificate.as_ref().unwrap();
        assert_eq!(cert.active, vec![1, 2]);
        assert_eq!(cert.strict_active, vec![2]);
        assert_eq!(cert.zeta, Some(0.3));
        // the enumeration oracle classifies it the same way
        let enumerated = solve_qp_enumerate(&inst.problem).unwrap();
        assert_eq!(enumerated.active, vec![1, 2]);
        assert_eq!(enumerated.strict_active, vec![2]);
    }

    #[test]
    fn all_active_pattern_is_rejected() {
        let roles = [CoordRole::AtLower, CoordRole::AtUpper];
        assert!(matches!(
            gen_quadratic_designed(2, 1, 1.0, 2.0, &roles, &[0.1, 0.1]),
            Err(Error::BadPattern(_))
        ));
    }

    #[test]
    fn generators_are_deterministic_in_seed() {
        let roles = [CoordRole::Interior, CoordRole::AtLower, CoordRole::Interior];
        let margins = [0.0, 0.25, 0.0];
        let a = gen_quadratic_designed(3, 9, 1.0, 3.0, &roles, &margins).unwrap();
        let b = gen_quadratic_designed(3, 9, 1.0, 3.0, &roles, &margins).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let c = gen_quadratic_designed(3, 10, 1.0, 3.0, &roles, &margins).unwrap();
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn e1_is_the_worked_instance() {
        let inst = e1();
        let cert = inst.certificate.as_ref().unwrap();
        assert!((cert.x_star[0] - 0.4).abs() < 1e-15);
        assert!((cert.x_star[1] - 0.6).abs() < 1e-15);
        assert_eq!(cert.x_star[2], 0.0);
        assert!((cert.lambda_star + 0.1).abs() < 1e-15);
        assert!((cert.f_star - 0.03).abs() < 1e-15);
        assert_eq!(cert.active, vec![2]);
        assert!((cert.zeta.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(cert.dmax_star, 0.6);
        assert_eq!(cert.dmin_star, Some(0.4));
    }

    #[test]
    fn simplex_interior_and_vertex_cases() {
        // c on the simplex already: x* = c, fully interior
        let inst = gen_simplex_projection(&[0.25, 0.25, 0.25, 0.25]).unwrap();
        let cert = inst.certificate.as_ref().unwrap();
        assert!(cert.active.is_empty());
        assert!(cert.zeta.is_none());

        // one huge component: vertex solution, but D*max stays positive
        // because the vertex coordinate is interior to [0, +inf) above
        let inst = gen_simplex_projection(&[5.0, 0.1]).unwrap();
        let cert = inst.certificate.as_ref().unwrap();
        assert_eq!(cert.x_star, vec![1.0, 0.0]);
        assert!(cert.dmax_star > 0.0);
    }

    #[test]
    fn svm_like_consistency_and_rank() {
        let inst = gen_svm_like(6, 4, 3).unwrap();
        assert!(inst.mu.unwrap() > 0.0);
        let p = &inst.problem;
        let x0 = default_x0(p).unwrap();
        let grad = p.gradient(&x0);
        for i in 0..4 {
            assert!((grad[i] - p.partial(&x0, i)).abs() <= 1e-12 * grad[i].abs().max(1.0));
        }
        // rank deficient when m < n
        let flat = gen_svm_like(2, 5, 3).unwrap();
        assert_eq!(flat.mu, Some(0.0));
    }

    #[test]
    fn default_start_is_feasible_with_positive_distance() {
        for inst in standard_battery(12, 5) {
            let x0 = default_x0(&inst.problem).unwrap();
            assert!(inst.problem.is_feasible(&x0, 1e-9).unwrap());
            assert!(inst.problem.max_distance(&x0) > 0.0);
        }
    }

    #[test]
    fn battery_instances_pass_the_interior_sampling_check() {
        for inst in standard_battery(6, 1) {
            let x0 = default_x0(&inst.problem).unwrap();
            assert!(sampling_check_interior(&inst.problem, &x0, 50, 99).unwrap());
        }
    }

    #[test]
    fn solver_runs_on_factored_oracles() {
        use crate::solver::{solve, SolveStatus, SolverConfig};
        // m >= n keeps the Hessian positive definite
        let inst = gen_svm_like(9, 5, 4).unwrap();
        assert!(inst.mu.unwrap() > 0.0);
        let x0 = default_x0(&inst.problem).unwrap();
        let result = solve(&inst.problem, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(result.status, SolveStatus::Converged);
        let cert = solve_qp_enumerate(&inst.problem).unwrap();
        let gap = result.trace.final_f - cert.f_star;
        assert!(gap.abs() <= 1e-6 * (1.0 + cert.f_star.abs()), "gap {gap:e}");
        for i in 0..5 {
            assert!((result.trace.final_x[i] - cert.x_star[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn every_battery_certificate_is_reproduced_by_the_oracle() {
        for inst in standard_battery(10, 77) {
            let designed = inst.certificate.as_ref().unwrap();
            // certificate shape invariants
            assert!(designed
                .strict_active
                .iter()
                .all(|i| designed.active.contains(i)));
            assert!(designed.zeta.map(|z| z > 0.0).unwrap_or(true));
            assert!(designed.dmax_star > 0.0);
            // active_sets reproduces the design exactly
            let (a, a_plus) =
                inst.problem
                    .active_sets(&designed.x_star, designed.lambda_star, 1e-9);
            assert_eq!(a, designed.active);
            assert_eq!(a_plus, designed.strict_active);
            // and so does the enumeration oracle
            let enumerated = solve_qp_enumerate(&inst.problem).unwrap();
            assert_eq!(enumerated.active, designed.active);
            assert_eq!(enumerated.strict_active, designed.strict_active);
            for i in 0..inst.problem.dim() {
                assert!((enumerated.x_star[i] - designed.x_star[i]).abs() < 1e-9);
            }
            assert!((enumerated.lambda_star - designed.lambda_star).abs() < 1e-9);
        }
    }
}
