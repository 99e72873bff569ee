//! Property tests for the geometric identities and the solver's structural
//! invariants.

use proptest::prelude::*;

use ac2cd::linesearch::StepRecord;
use ac2cd::oracle::{project_to_feasible, simplex_projection};
use ac2cd::seminorm::{inner_excluding, reduced_product_sides, seminorm_excluding};
use ac2cd::solver::{solve, PermutationStrategy, SolverConfig};
use ac2cd::zoo::{default_x0, gen_quadratic_designed, standard_battery, CoordRole};

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

proptest! {
    #[test]
    fn seminorm_never_exceeds_the_norm(x in vector(6), j in 0usize..6) {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(seminorm_excluding(&x, j) <= norm * (1.0 + 1e-12));
    }

    #[test]
    fn cauchy_inequality_holds(x in vector(5), y in vector(5), j in 0usize..5) {
        let inner = inner_excluding(&x, &y, j).unwrap();
        let bound = seminorm_excluding(&x, j) * seminorm_excluding(&y, j);
        prop_assert!(inner <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn coordinate_bounds_by_seminorm(x in vector(7), j in 0usize..7) {
        let s = seminorm_excluding(&x, j);
        let sum_abs: f64 = x.iter().enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, v)| v.abs())
            .sum();
        for (i, xi) in x.iter().enumerate() {
            if i != j {
                prop_assert!(xi.abs() <= s * (1.0 + 1e-12));
            }
        }
        prop_assert!(sum_abs <= 6.0_f64.sqrt() * s * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn reduced_product_identity_on_hyperplane_pairs(
        v in vector(5),
        xp in vector(5),
        shift in vector(5),
        j in 0usize..5,
    ) {
        // shift projected to the sum-zero subspace keeps both points on one
        // hyperplane
        let mean: f64 = shift.iter().sum::<f64>() / 5.0;
        let xpp: Vec<f64> = xp.iter().zip(&shift).map(|(a, s)| a + s - mean).collect();
        let (lhs, rhs) = reduced_product_sides(&v, &xp, &xpp, j).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn simplex_projection_is_feasible_and_idempotent(c in vector(6)) {
        let x = simplex_projection(&c);
        let sum: f64 = x.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(x.iter().all(|v| *v >= 0.0));
        let again = simplex_projection(&x);
        for (a, b) in x.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feasibility_projection_lands_in_the_set(
        y in vector(5),
        seed in 0u64..1000,
    ) {
        let roles = [CoordRole::Interior, CoordRole::AtLower, CoordRole::Interior,
                     CoordRole::AtUpper, CoordRole::Interior];
        let margins = [0.0, 0.2, 0.0, 0.2, 0.0];
        let inst = gen_quadratic_designed(5, seed, 1.0, 4.0, &roles, &margins).unwrap();
        let x = project_to_feasible(&inst.problem, &y).unwrap();
        prop_assert!(inst.problem.is_feasible(&x, 1e-9).unwrap());
    }

    #[test]
    fn traces_satisfy_structural_invariants(case in 0u64..200) {
        let battery = standard_battery(8, case);
        let inst = &battery[(case % 8) as usize]; // n cycles 3..=10
        let config = SolverConfig {
            permutation: PermutationStrategy::ReshufflePerOuter(case),
            max_outer: 300,
            ..SolverConfig::default()
        };
        let x0 = default_x0(&inst.problem).unwrap();
        let result = solve(&inst.problem, &x0, &config).unwrap();

        for rec in &result.trace.outers {
            // every recorded iterate is feasible
            prop_assert!(inst.problem.is_feasible(&rec.x, 1e-9).unwrap());
            // exactly n step records per outer iteration
            prop_assert_eq!(rec.steps.len(), inst.problem.dim());
            for step in &rec.steps {
                step_record_invariants(step, &config)?;
            }
            // each non-pivot coordinate moves in at most one inner step
            let points = rec.inner_points.as_ref().unwrap();
            for (i, step) in rec.steps.iter().enumerate() {
                if step.cyclic == rec.j {
                    continue;
                }
                prop_assert_eq!(points[0][step.cyclic], rec.x[step.cyclic]);
                prop_assert_eq!(
                    points[points.len() - 1][step.cyclic],
                    points[i + 1][step.cyclic]
                );
            }
        }
        prop_assert!(inst.problem.is_feasible(&result.trace.final_x, 1e-9).unwrap());
    }

    #[test]
    fn solve_is_deterministic(seed in 0u64..100) {
        let battery = standard_battery(8, seed);
        let inst = &battery[(seed % 8) as usize];
        let config = SolverConfig {
            permutation: PermutationStrategy::ReshufflePerOuter(seed),
            max_outer: 150,
            ..SolverConfig::default()
        };
        let x0 = default_x0(&inst.problem).unwrap();
        let a = solve(&inst.problem, &x0, &config).unwrap();
        let b = solve(&inst.problem, &x0, &config).unwrap();
        prop_assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());
    }
}

proptest! {
    #[test]
    fn interiority_cap_respects_its_floor(
        pivot_value in 0.01..0.99f64,
        g in prop::sample::select(vec![-2.0, -0.3, 0.05, 1.7]),
        epsilon in 0.05..0.95f64,
    ) {
        use ac2cd::linesearch::interiority_cap;
        use ac2cd::problem::{Problem, QuadraticObjective};
        use std::sync::Arc;

        let oracle = QuadraticObjective::new(
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0],
            0.0,
        ).unwrap();
        let p = Problem::new(
            pivot_value + 0.5,
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            Arc::new(oracle),
        ).unwrap();
        let z = [0.5, pivot_value];
        let cap = interiority_cap(&p, &z, 1, g, epsilon).unwrap();
        let dist = p.distance_to_bound(&z, 1);
        prop_assert!(cap >= (1.0 - epsilon) * dist / g.abs() * (1.0 - 1e-12));
        // taking any step up to the cap keeps the promised fraction of the
        // pivot's bound distance
        let alpha = cap.min(1e6) * 0.999;
        let moved = z[1] - alpha * g;
        if (0.0..=1.0).contains(&moved) {
            let after = p.distance_to_bound(&[0.5, moved], 1);
            prop_assert!(after >= epsilon * dist * (1.0 - 1e-9));
        }
    }
}

fn step_record_invariants(step: &StepRecord, config: &SolverConfig) -> Result<(), TestCaseError> {
    let delta = config.armijo.delta;
    prop_assert!(step.alpha >= 0.0);
    if step.g != 0.0 {
        prop_assert!(step.alpha <= step.initial_step * (1.0 + 1e-12));
        prop_assert!(
            step.initial_step <= step.alpha_bar.min(step.cap) * (1.0 + 1e-12),
            "initial step above both caps: {:?}",
            step
        );
    }
    let reconstructed = step.initial_step * delta.powi(step.backtracks as i32);
    prop_assert!(
        (step.alpha - reconstructed).abs() <= 1e-12 * (1.0 + reconstructed.abs()),
        "alpha {} != Delta * delta^m {}",
        step.alpha,
        reconstructed
    );
    Ok(())
}
