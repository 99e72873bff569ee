//! Maximum feasible stepsize, initial-stepsize strategies and the Armijo
//! backtracking search.
//!
//! Every inner step of the solver moves a cyclic coordinate `p` against the
//! pivot coordinate `j` along `d = g (e_p - e_j)` with
//! `g = grad_j f(z) - grad_p f(z)`. This module owns everything about how far
//! that step goes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;

/// How the per-step cap `A` on the initial stepsize is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStrategy {
    /// `A = A_u` always.
    FixedClamp,
    /// `A = min{cap, A_u}` where the cap keeps the pivot coordinate's bound
    /// distance at a fraction `epsilon` of its current value, so the pivot
    /// stays strictly interior through the whole inner cycle.
    InteriorityPreserving,
}

/// Armijo line-search parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArmijoParams {
    /// Sufficient-decrease fraction, in (0,1).
    pub gamma: f64,
    /// Backtracking reduction factor, in (0,1).
    pub delta: f64,
    /// Lower bound on the cap `A`; used only by the theory constants and
    /// asserted post hoc on traces, never to clamp a cap upward.
    pub a_lower: f64,
    /// Upper bound on the cap `A`.
    pub a_upper: f64,
    /// Interiority fraction, in (0,1).
    pub epsilon: f64,
    pub strategy: StepStrategy,
    /// Backtracking past this count signals an oracle inconsistency, not a
    /// math limit.
    pub max_backtracks: u32,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            delta: 0.5,
            a_lower: 1e-8,
            a_upper: 1.0,
            epsilon: 0.5,
            strategy: StepStrategy::InteriorityPreserving,
            max_backtracks: 60,
        }
    }
}

impl ArmijoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma > 0.0
            && self.gamma < 1.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.a_lower > 0.0
            && self.a_upper >= self.a_lower
            && self.a_upper.is_finite()
            && self.epsilon > 0.0
            && self.epsilon < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::BadConfig(format!(
                "invalid Armijo parameters: {self:?}"
            )))
        }
    }
}

/// One inner iteration's line-search record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    /// Cyclic coordinate `p` of this inner iteration.
    pub cyclic: usize,
    /// Reduced gradient `g = grad_j f(z) - grad_p f(z)`.
    pub g: f64,
    /// Largest feasible stepsize (0 when `g = 0`; may be `+inf`).
    #[serde(with = "crate::problem::extended_real")]
    pub alpha_bar: f64,
    /// Cap `A` on the initial stepsize.
    pub cap: f64,
    /// Initial stepsize `min{alpha_bar, cap}`.
    pub initial_step: f64,
    /// Accepted stepsize.
    pub alpha: f64,
    pub backtracks: u32,
    /// Whether the accepted step landed a coordinate exactly on a bound.
    pub hit_boundary: bool,
}

/// Largest feasible stepsize along the pair direction, together with the
/// bound values reached when it is taken in full.
#[derive(Debug, Clone, Copy)]
pub struct MaxStep {
    pub alpha_bar: f64,
    /// Bound the cyclic coordinate reaches at `alpha_bar`, if it binds.
    pub cyclic_target: Option<f64>,
    /// Bound the pivot coordinate reaches at `alpha_bar`, if it binds.
    pub pivot_target: Option<f64>,
}

/// Largest feasible stepsize along `d = g (e_cyclic - e_pivot)` from `z`.
///
/// Follows the three-case convention: `alpha_bar = 0` when `g = 0` even
/// though the direction is then zero and any stepsize would be feasible.
pub fn max_feasible_stepsize(
    p: &Problem,
    z: &[f64],
    cyclic: usize,
    pivot: usize,
    g: f64,
) -> Result<MaxStep> {
    if cyclic == pivot {
        return Err(Error::CyclicEqualsPivot(cyclic));
    }
    if g == 0.0 {
        return Ok(MaxStep {
            alpha_bar: 0.0,
            cyclic_target: None,
            pivot_target: None,
        });
    }
    // Room until the coordinate moving up hits its upper bound and the one
    // moving down hits its lower bound. Clamped at 0 to absorb ulp-level
    // feasibility overshoot.
    let (cyclic_room, pivot_room, cyclic_bound, pivot_bound) = if g > 0.0 {
        (
            (p.upper()[cyclic] - z[cyclic]).max(0.0),
            (z[pivot] - p.lower()[pivot]).max(0.0),
            p.upper()[cyclic],
            p.lower()[pivot],
        )
    } else {
        (
            (z[cyclic] - p.lower()[cyclic]).max(0.0),
            (p.upper()[pivot] - z[pivot]).max(0.0),
            p.lower()[cyclic],
            p.upper()[pivot],
        )
    };
    let room = cyclic_room.min(pivot_room);
    let alpha_bar = room / g.abs();
    let binds = alpha_bar.is_finite();
    Ok(MaxStep {
        alpha_bar,
        cyclic_target: (binds && cyclic_room <= pivot_room).then_some(cyclic_bound),
        pivot_target: (binds && pivot_room <= cyclic_room).then_some(pivot_bound),
    })
}

/// Stepsize at which the pivot's bound distance shrinks to `epsilon` times
/// its current value; `+inf` when the move only increases that distance.
///
/// Always at least `(1 - epsilon) D_j(z) / |g|`.
pub fn interiority_cap(p: &Problem, z: &[f64], pivot: usize, g: f64, epsilon: f64) -> Result<f64> {
    if g == 0.0 {
        return Err(Error::ZeroGradientCap);
    }
    let below = z[pivot] - p.lower()[pivot];
    let above = p.upper()[pivot] - z[pivot];
    let dist = below.min(above);
    let cap = if g > 0.0 {
        // pivot moves down towards its lower bound
        if below <= above {
            (1.0 - epsilon) * dist / g
        } else {
            (below - epsilon * dist) / g
        }
    } else {
        // pivot moves up towards its upper bound
        if above <= below {
            (1.0 - epsilon) * dist / -g
        } else {
            (above - epsilon * dist) / -g
        }
    };
    Ok(cap)
}

/// The cap `A` on the initial stepsize for the configured strategy.
pub fn initial_cap(p: &Problem, z: &[f64], pivot: usize, g: f64, params: &ArmijoParams) -> f64 {
    match params.strategy {
        StepStrategy::FixedClamp => params.a_upper,
        StepStrategy::InteriorityPreserving => {
            if g == 0.0 {
                params.a_upper
            } else {
                // g != 0 here, so the cap is defined
                interiority_cap(p, z, pivot, g, params.epsilon)
                    .expect("nonzero g")
                    .min(params.a_upper)
            }
        }
    }
}

/// The point `z + alpha g (e_cyclic - e_pivot)`, with the binding coordinate
/// set exactly onto its bound when the full feasible step is taken.
///
/// Both moved coordinates are also clamped into their box to absorb rounding;
/// the equality constraint is preserved to within one rounding since both
/// coordinates move by the same product `alpha * g`.
pub fn apply_pair_step(
    p: &Problem,
    z: &[f64],
    cyclic: usize,
    pivot: usize,
    g: f64,
    alpha: f64,
    max_step: &MaxStep,
) -> Vec<f64> {
    let mut out = z.to_vec();
    let step = alpha * g;
    out[cyclic] = (z[cyclic] + step)
        .max(p.lower()[cyclic])
        .min(p.upper()[cyclic]);
    out[pivot] = (z[pivot] - step)
        .max(p.lower()[pivot])
        .min(p.upper()[pivot]);
    if alpha > 0.0 && alpha == max_step.alpha_bar {
        if let Some(t) = max_step.cyclic_target {
            out[cyclic] = t;
        }
        if let Some(t) = max_step.pivot_target {
            out[pivot] = t;
        }
    }
    out
}

/// Outcome of one Armijo search: accepted stepsize and the point it reaches.
#[derive(Debug, Clone)]
pub struct ArmijoOutcome {
    pub alpha: f64,
    pub backtracks: u32,
    pub point: Vec<f64>,
    pub value: f64,
}

/// Backtracking Armijo search from `z` along the pair direction.
///
/// `dir_deriv` is the directional derivative `grad f(z)' d = -g^2`, passed in
/// so the search needs no further derivative evaluations. The trial stepsize
/// starts at `initial_step` and is multiplied by `delta` until
/// `f(z + alpha d) <= f(z) + gamma * alpha * dir_deriv`.
///
/// When the oracle exposes the (constant) curvature along the pair
/// direction, the increment `f(z + alpha d) - f(z) = alpha dir_deriv +
/// alpha^2 g^2 kappa / 2` is formed directly instead of subtracting two
/// nearly equal objective values; near convergence `alpha g^2` sits below
/// the rounding granularity of `f` and the literal comparison would reject
/// steps the condition actually accepts.
#[allow(clippy::too_many_arguments)]
pub fn armijo(
    p: &Problem,
    z: &[f64],
    cyclic: usize,
    pivot: usize,
    g: f64,
    max_step: &MaxStep,
    initial_step: f64,
    dir_deriv: f64,
    params: &ArmijoParams,
) -> Result<ArmijoOutcome> {
    if initial_step == 0.0 {
        return Ok(ArmijoOutcome {
            alpha: 0.0,
            backtracks: 0,
            point: z.to_vec(),
            value: p.eval(z),
        });
    }
    let curvature = p.oracle().pair_curvature(z, cyclic, pivot);
    let f_z = p.eval(z);
    let mut alpha = initial_step;
    let mut backtracks = 0u32;
    loop {
        let accepted = match curvature {
            Some(kappa) => {
                let increment = alpha * dir_deriv + 0.5 * alpha * alpha * g * g * kappa;
                increment <= params.gamma * alpha * dir_deriv
            }
            None => {
                let point = apply_pair_step(p, z, cyclic, pivot, g, alpha, max_step);
                p.eval(&point) <= f_z + params.gamma * alpha * dir_deriv
            }
        };
        if accepted {
            let point = apply_pair_step(p, z, cyclic, pivot, g, alpha, max_step);
            let value = p.eval(&point);
            return Ok(ArmijoOutcome {
                alpha,
                backtracks,
                point,
                value,
            });
        }
        if backtracks >= params.max_backtracks {
            return Err(Error::LineSearchFailure {
                outer: 0, // filled in by the solver
                cyclic,
                backtracks,
                detail: format!(
                    "Armijo condition still failing at alpha = {alpha:e} \
                     (initial {initial_step:e}, g = {g:e}, dir_deriv = {dir_deriv:e})"
                ),
            });
        }
        backtracks += 1;
        alpha *= params.delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::QuadraticObjective;
    use std::sync::Arc;

    fn e1() -> Problem {
        let c = [0.5, 0.7, -0.2];
        let c0 = 0.5 * c.iter().map(|v| v * v).sum::<f64>();
        Problem::new(
            1.0,
            vec![0.0; 3],
            vec![f64::INFINITY; 3],
            Arc::new(
                QuadraticObjective::new(
                    3,
                    vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
                    c.iter().map(|v| -v).collect(),
                    c0,
                )
                .unwrap(),
            ),
        )
        .unwrap()
    }

    /// Worked step W1: E1 at z = (1,0,0), cyclic 1, pivot 0, g = 1.2.
    #[test]
    fn w1_max_feasible_stepsize() {
        let p = e1();
        let ms = max_feasible_stepsize(&p, &[1.0, 0.0, 0.0], 1, 0, 1.2).unwrap();
        assert!((ms.alpha_bar - 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(ms.cyclic_target, None); // upper bound is +inf
        assert_eq!(ms.pivot_target, Some(0.0));
    }

    #[test]
    fn max_feasible_conventions() {
        let p = e1();
        let ms = max_feasible_stepsize(&p, &[1.0, 0.0, 0.0], 1, 0, 0.0).unwrap();
        assert_eq!(ms.alpha_bar, 0.0);

        let free = Problem::new(
            0.0,
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
            Arc::new(
                QuadraticObjective::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap(),
            ),
        )
        .unwrap();
        let ms = max_feasible_stepsize(&free, &[1.0, -1.0], 0, 1, 2.0).unwrap();
        assert_eq!(ms.alpha_bar, f64::INFINITY);
        assert!(ms.cyclic_target.is_none() && ms.pivot_target.is_none());

        assert!(matches!(
            max_feasible_stepsize(&p, &[1.0, 0.0, 0.0], 1, 1, 1.0),
            Err(Error::CyclicEqualsPivot(1))
        ));
    }

    #[test]
    fn w1_interiority_cap() {
        let p = e1();
        // D_0(z) = 1 via the lower side, g = 1.2, epsilon = 0.5
        let cap = interiority_cap(&p, &[1.0, 0.0, 0.0], 0, 1.2, 0.5).unwrap();
        assert!((cap - 0.5 / 1.2).abs() < 1e-15);
        assert!(matches!(
            interiority_cap(&p, &[1.0, 0.0, 0.0], 0, 0.0, 0.5),
            Err(Error::ZeroGradientCap)
        ));
    }

    #[test]
    fn interiority_cap_two_sided_cases() {
        let boxed = Problem::new(
            1.0,
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            Arc::new(
                QuadraticObjective::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap(),
            ),
        )
        .unwrap();
        // pivot at 0.8: nearest bound above (dist 0.2); moving up (g < 0)
        // shrinks it: cap = (1-eps)*0.2/|g|
        let cap = interiority_cap(&boxed, &[0.2, 0.8], 1, -0.5, 0.25).unwrap();
        assert!((cap - 0.75 * 0.2 / 0.5).abs() < 1e-15);
        // moving down grows the near side: cap = (z-l - eps*D)/g
        let cap = interiority_cap(&boxed, &[0.2, 0.8], 1, 0.5, 0.25).unwrap();
        assert!((cap - (0.8 - 0.25 * 0.2) / 0.5).abs() < 1e-15);

        // cap is monotone decreasing in epsilon and -> 0 as epsilon -> 1
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.5, 0.9, 0.999, 0.999999] {
            let cap = interiority_cap(&boxed, &[0.2, 0.8], 1, -0.5, eps).unwrap();
            assert!(cap <= prev);
            prev = cap;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn cap_strategies() {
        let p = e1();
        let mut params = ArmijoParams {
            a_upper: 1.0,
            ..ArmijoParams::default()
        };

        // W1: min{0.41667, 1}
        let a = initial_cap(&p, &[1.0, 0.0, 0.0], 0, 1.2, &params);
        assert!((a - 0.5 / 1.2).abs() < 1e-15);

        // zero direction falls back to A_u
        assert_eq!(initial_cap(&p, &[1.0, 0.0, 0.0], 0, 0.0, &params), 1.0);

        // infinite cap clamps to A_u
        let free_pivot = initial_cap(&p, &[0.2, 0.3, 0.5], 0, -0.7, &params);
        assert_eq!(free_pivot, 1.0); // upper side is +inf, moving up

        params.strategy = StepStrategy::FixedClamp;
        assert_eq!(initial_cap(&p, &[1.0, 0.0, 0.0], 0, 1.2, &params), 1.0);
    }

    #[test]
    fn w1_armijo_accepts_first_trial() {
        let p = e1();
        let params = ArmijoParams::default();
        let z = [1.0, 0.0, 0.0];
        let g = 1.2;
        let ms = max_feasible_stepsize(&p, &z, 1, 0, g).unwrap();
        let cap = initial_cap(&p, &z, 0, g, &params);
        let delta0 = ms.alpha_bar.min(cap);
        assert!((delta0 - 0.5 / 1.2).abs() < 1e-15);
        let out = armijo(&p, &z, 1, 0, g, &ms, delta0, -g * g, &params).unwrap();
        assert_eq!(out.backtracks, 0);
        assert!((out.alpha - delta0).abs() < 1e-15);
        assert!((out.point[0] - 0.5).abs() < 1e-12);
        assert!((out.point[1] - 0.5).abs() < 1e-12);
        assert_eq!(out.point[2], 0.0);
    }

    #[test]
    fn armijo_zero_initial_step() {
        let p = e1();
        let params = ArmijoParams::default();
        let z = [0.4, 0.6, 0.0];
        let ms = MaxStep {
            alpha_bar: 0.0,
            cyclic_target: None,
            pivot_target: None,
        };
        let out = armijo(&p, &z, 2, 0, 0.0, &ms, 0.0, 0.0, &params).unwrap();
        assert_eq!(out.alpha, 0.0);
        assert_eq!(out.backtracks, 0);
        assert_eq!(out.point, z.to_vec());
    }

    #[test]
    fn armijo_backtracks_once_when_just_above_threshold() {
        // 1-D quadratic along the pair direction with curvature L = 2:
        // acceptance iff alpha <= 2(1-gamma)/L = 0.9.
        let p = e1();
        let params = ArmijoParams::default();
        let z = [0.5, 0.5, 0.0];
        // g = grad_0 - grad_1 = 0.0 - (-0.2) = 0.2 moving coordinate 1 up
        let g = p.partial(&z, 0) - p.partial(&z, 1);
        assert!((g - 0.2).abs() < 1e-15);
        let ms = max_feasible_stepsize(&p, &z, 1, 0, g).unwrap();
        assert!((ms.alpha_bar - 2.5).abs() < 1e-15);
        let delta0 = 0.91; // fails once, then 0.455 passes
        let out = armijo(&p, &z, 1, 0, g, &ms, delta0, -g * g, &params).unwrap();
        assert_eq!(out.backtracks, 1);
        assert!((out.alpha - 0.455).abs() < 1e-15);
    }

    /// Oracle wrapper hiding the curvature so the literal comparison path
    /// runs.
    struct NoCurvature(QuadraticObjective);

    impl crate::problem::Objective for NoCurvature {
        fn eval(&self, x: &[f64]) -> f64 {
            self.0.eval(x)
        }
        fn partial(&self, x: &[f64], i: usize) -> f64 {
            self.0.partial(x, i)
        }
    }

    #[test]
    fn armijo_flags_inconsistent_directional_derivative() {
        let c = [0.5, 0.7, -0.2];
        let quad = QuadraticObjective::new(
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            c.iter().map(|v| -v).collect(),
            0.0,
        )
        .unwrap();
        let p = Problem::new(
            1.0,
            vec![0.0; 3],
            vec![f64::INFINITY; 3],
            Arc::new(NoCurvature(quad)),
        )
        .unwrap();
        let params = ArmijoParams {
            max_backtracks: 8,
            ..ArmijoParams::default()
        };
        let z = [0.5, 0.5, 0.0];
        // true reduced gradient is +0.2; a broken caller passing -0.2 turns
        // the step into an ascent direction while dir_deriv claims descent
        let g = -0.2;
        let ms = max_feasible_stepsize(&p, &z, 1, 0, g).unwrap();
        let out = armijo(&p, &z, 1, 0, g, &ms, 1.0, -g * g, &params);
        assert!(matches!(out, Err(Error::LineSearchFailure { .. })));
    }

    #[test]
    fn full_step_lands_exactly_on_the_bound() {
        let boxed = Problem::new(
            1.0,
            vec![0.0, 0.0],
            vec![0.7, 1.0],
            Arc::new(QuadraticObjective::new(2, vec![0.0; 4], vec![-1.0, 0.0], 0.0).unwrap()),
        )
        .unwrap();
        // linear objective: any stepsize passes Armijo; g > 0 pushes x_0 up
        let z = [0.3, 0.7];
        let g = 1.0 / 3.0; // alpha_bar * g = 0.4 would round; clamping makes it exact
        let ms = max_feasible_stepsize(&boxed, &z, 0, 1, g).unwrap();
        let out = armijo(
            &boxed,
            &z,
            0,
            1,
            g,
            &ms,
            ms.alpha_bar,
            -g * g,
            &ArmijoParams::default(),
        )
        .unwrap();
        assert_eq!(out.point[0], 0.7);
    }
}
