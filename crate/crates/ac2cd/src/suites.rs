//! Named verification suites behind `verify` in the CLI.
//!
//! Each suite runs a deterministic battery (seeded generators, per-instance
//! streams), collects violations from the trace and lemma checks, and
//! produces a machine-readable report. Reports contain no timestamps; two
//! runs with the same seed serialize byte-identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::oracle::solve_qp_enumerate;
use crate::problem::SolutionCertificate;
use crate::seminorm::{inner_excluding, reduced_product_sides, seminorm_excluding};
use crate::solver::{
    identification_detector, solve, PermutationStrategy, SolveStatus, SolverConfig, Trace,
};
use crate::theory::{
    check_armijo_decrease, check_cap_floor, check_error_decrease, check_interiority,
    check_monotone_descent, check_pivot_admissibility, check_radius_nonactive,
    check_radius_pivot_rule, check_radius_strict_active, check_rate, check_stepsize_floor,
    complexity_bounds, exact_table_for, identification_radii, lemma_suite, rate_constants,
    CheckViolation, LipschitzTable,
};
use crate::zoo::{default_x0, standard_battery};

/// The named suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Seminorm,
    Lemmas,
    Descent,
    Stepsize,
    Interiority,
    Rate,
    Identification,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 7] = [
        SuiteKind::Seminorm,
        SuiteKind::Lemmas,
        SuiteKind::Descent,
        SuiteKind::Stepsize,
        SuiteKind::Interiority,
        SuiteKind::Rate,
        SuiteKind::Identification,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Seminorm => "seminorm",
            SuiteKind::Lemmas => "lemmas",
            SuiteKind::Descent => "descent",
            SuiteKind::Stepsize => "stepsize",
            SuiteKind::Interiority => "interiority",
            SuiteKind::Rate => "rate",
            SuiteKind::Identification => "identification",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::BadConfig(format!("unknown suite {name:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random trials for the pointwise suites (seminorm, lemmas).
    pub trials: usize,
    /// Battery size for the trace suites.
    pub instances: usize,
    /// Negative control: halve the Lipschitz table entries so the dependent
    /// checks must report violations.
    pub corrupt_lipschitz: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 1000,
            instances: 20,
            corrupt_lipschitz: false,
        }
    }
}

/// Outcome of one instance inside a suite.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceOutcome {
    pub instance: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_active_emp: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_nonactive_emp: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_active_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_nonactive_bound: Option<f64>,
    /// `bound / max(1, empirical)`: how loose the complexity bounds are.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_ratio_active: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_ratio_nonactive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma_max_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack_gradient_map: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack_reduced_gradient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack_descent: Option<f64>,
    /// Smallest initial-stepsize cap observed across the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_observed_cap: Option<f64>,
}

/// A violation tagged with the instance that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggedViolation {
    pub instance: String,
    #[serde(flatten)]
    pub violation: CheckViolation,
}

/// Machine-readable suite report. Field order is fixed; serialization is
/// deterministic for a fixed seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub instance_count: usize,
    pub corrupt_lipschitz: bool,
    pub passed: bool,
    pub violation_count: usize,
    pub violations_truncated: bool,
    pub instances: Vec<InstanceOutcome>,
    pub violations: Vec<TaggedViolation>,
}

const MAX_REPORTED_VIOLATIONS: usize = 200;

fn finish_report(
    suite: SuiteKind,
    options: &SuiteOptions,
    instances: Vec<InstanceOutcome>,
    mut violations: Vec<TaggedViolation>,
) -> SuiteReport {
    let violation_count = violations.len();
    let violations_truncated = violation_count > MAX_REPORTED_VIOLATIONS;
    violations.truncate(MAX_REPORTED_VIOLATIONS);
    SuiteReport {
        suite: suite.name().to_string(),
        seed: options.seed,
        trials: options.trials,
        instance_count: instances.len(),
        corrupt_lipschitz: options.corrupt_lipschitz,
        passed: violation_count == 0,
        violation_count,
        violations_truncated,
        instances,
        violations,
    }
}

/// Run one suite to a report.
pub fn run_suite(kind: SuiteKind, options: &SuiteOptions) -> Result<SuiteReport> {
    match kind {
        SuiteKind::Seminorm => seminorm_suite(options),
        SuiteKind::Lemmas => lemmas_suite(options),
        SuiteKind::Descent => trace_suite(SuiteKind::Descent, options),
        SuiteKind::Stepsize => trace_suite(SuiteKind::Stepsize, options),
        SuiteKind::Interiority => trace_suite(SuiteKind::Interiority, options),
        SuiteKind::Rate => trace_suite(SuiteKind::Rate, options),
        SuiteKind::Identification => trace_suite(SuiteKind::Identification, options),
    }
}

fn tag(instance: &str, list: Vec<CheckViolation>) -> Vec<TaggedViolation> {
    list.into_iter()
        .map(|violation| TaggedViolation {
            instance: instance.to_string(),
            violation,
        })
        .collect()
}

/// Seminorm identities and inequalities on random vectors and hyperplane
/// pairs.
fn seminorm_suite(options: &SuiteOptions) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut violations = Vec::new();
    let push = |trial: usize,
                lhs: f64,
                rhs: f64,
                tol: f64,
                what: &str,
                violations: &mut Vec<TaggedViolation>| {
        if lhs > rhs + tol * lhs.abs().max(rhs.abs()).max(1.0) {
            violations.push(TaggedViolation {
                instance: "random-vectors".to_string(),
                violation: CheckViolation {
                    outer: trial,
                    inner: None,
                    lhs,
                    rhs,
                    what: what.to_string(),
                },
            });
        }
    };
    for trial in 0..options.trials {
        let n = rng.gen_range(2..=8);
        let j = rng.gen_range(0..n);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);

        let inner = inner_excluding(&x, &y, j)?;
        let sx = seminorm_excluding(&x, j);
        let sy = seminorm_excluding(&y, j);
        push(trial, inner, sx * sy, 1e-12, "cauchy", &mut violations);
        for (i, xi) in x.iter().enumerate() {
            if i != j {
                push(
                    trial,
                    xi.abs(),
                    sx,
                    1e-12,
                    "coordinate vs seminorm",
                    &mut violations,
                );
            }
        }
        let sum_abs: f64 = x
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, v)| v.abs())
            .sum();
        push(
            trial,
            sum_abs,
            ((n - 1) as f64).sqrt() * sx,
            1e-12,
            "sum of coordinates vs seminorm",
            &mut violations,
        );
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        push(trial, sx, norm, 1e-12, "seminorm vs norm", &mut violations);

        // reduced-product identity on a same-hyperplane pair
        let v = draw(&mut rng);
        let xp = draw(&mut rng);
        let mut shift = draw(&mut rng);
        let mean: f64 = shift.iter().sum::<f64>() / n as f64;
        shift.iter_mut().for_each(|s| *s -= mean);
        let xpp: Vec<f64> = xp.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let (lhs, rhs) = reduced_product_sides(&v, &xp, &xpp, j)?;
        if (lhs - rhs).abs() > 1e-12 * (1.0 + lhs.abs()) {
            violations.push(TaggedViolation {
                instance: "random-vectors".to_string(),
                violation: CheckViolation {
                    outer: trial,
                    inner: None,
                    lhs,
                    rhs,
                    what: "reduced product identity".to_string(),
                },
            });
        }
    }
    let outcome = InstanceOutcome {
        instance: "random-vectors".to_string(),
        n: 0,
        ..InstanceOutcome::default()
    };
    Ok(finish_report(
        SuiteKind::Seminorm,
        options,
        vec![outcome],
        violations,
    ))
}

fn maybe_corrupt(table: &mut LipschitzTable, options: &SuiteOptions) {
    if options.corrupt_lipschitz {
        for v in table.pair.iter_mut() {
            *v *= 0.5;
        }
        for v in table.column_sums.iter_mut() {
            *v *= 0.5;
        }
        table.max_pair *= 0.5;
        table.max_column_sum *= 0.5;
    }
}

/// The three pairwise-direction inequalities over quadratic instances.
fn lemmas_suite(options: &SuiteOptions) -> Result<SuiteReport> {
    let battery = standard_battery(options.instances.clamp(1, 10), options.seed);
    let results: Vec<(InstanceOutcome, Vec<TaggedViolation>)> = battery
        .par_iter()
        .enumerate()
        .map(
            |(idx, inst)| -> Result<(InstanceOutcome, Vec<TaggedViolation>)> {
                let mut table = exact_table_for(&inst.problem)?;
                maybe_corrupt(&mut table, options);
                let report = lemma_suite(
                    &inst.problem,
                    &table,
                    options.trials,
                    options.seed.wrapping_add(idx as u64),
                )?;
                let max_slack = report
                    .gradient_map_slack
                    .max(report.reduced_gradient_slack)
                    .max(report.descent_slack);
                let mut violations = Vec::new();
                if report.violations > 0 {
                    violations.push(TaggedViolation {
                        instance: inst.name.clone(),
                        violation: CheckViolation {
                            outer: 0,
                            inner: None,
                            lhs: max_slack,
                            rhs: 1e-9,
                            what: format!(
                                "lemma suite: {} of {} trials violated",
                                report.violations, report.trials
                            ),
                        },
                    });
                }
                let outcome = InstanceOutcome {
                    instance: inst.name.clone(),
                    n: inst.problem.dim(),
                    lemma_max_slack: Some(max_slack),
                    ..InstanceOutcome::default()
                };
                Ok((outcome, violations))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let mut outcomes = Vec::new();
    let mut violations = Vec::new();
    for (o, v) in results {
        outcomes.push(o);
        violations.extend(v);
    }
    Ok(finish_report(
        SuiteKind::Lemmas,
        options,
        outcomes,
        violations,
    ))
}

struct SolvedInstance {
    instance: Instance,
    cert: SolutionCertificate,
    trace: Trace,
    config: SolverConfig,
    converged: bool,
}

/// Solve every battery instance with the default configuration (seeded
/// permutations) and the enumeration oracle as ground truth.
fn solve_battery(options: &SuiteOptions) -> Result<Vec<SolvedInstance>> {
    let battery = standard_battery(options.instances, options.seed);
    battery
        .into_par_iter()
        .enumerate()
        .map(|(idx, instance)| -> Result<SolvedInstance> {
            let config = SolverConfig {
                permutation: PermutationStrategy::ReshufflePerOuter(
                    options.seed.wrapping_add(idx as u64),
                ),
                ..SolverConfig::default()
            };
            let x0 = default_x0(&instance.problem)?;
            let result = solve(&instance.problem, &x0, &config)?;
            let cert = solve_qp_enumerate(&instance.problem)?;
            let converged = result.status == SolveStatus::Converged;
            Ok(SolvedInstance {
                instance,
                cert,
                trace: result.trace,
                config,
                converged,
            })
        })
        .collect()
}

fn trace_suite(kind: SuiteKind, options: &SuiteOptions) -> Result<SuiteReport> {
    let solved = solve_battery(options)?;
    let mut outcomes = Vec::new();
    let mut violations = Vec::new();
    for s in &solved {
        let name = &s.instance.name;
        let p = &s.instance.problem;
        let armijo = &s.config.armijo;
        let mut outcome = InstanceOutcome {
            instance: name.clone(),
            n: p.dim(),
            converged: Some(s.converged),
            outer_iterations: Some(s.trace.outers.len()),
            final_gap: Some(s.trace.final_f - s.cert.f_star),
            ..InstanceOutcome::default()
        };
        if !s.converged {
            violations.push(TaggedViolation {
                instance: name.clone(),
                violation: CheckViolation {
                    outer: s.trace.outers.len(),
                    inner: None,
                    lhs: s.trace.final_residual,
                    rhs: s.config.kkt_tol,
                    what: "run did not converge within the iteration cap".to_string(),
                },
            });
        }
        match kind {
            SuiteKind::Descent => {
                violations.extend(tag(name, check_monotone_descent(&s.trace)));
                violations.extend(tag(
                    name,
                    check_armijo_decrease(&s.trace, armijo.gamma, armijo.a_upper),
                ));
                let table = exact_table_for(p)?;
                let rc = rate_constants(
                    p,
                    &table,
                    &s.cert,
                    s.trace
                        .outers
                        .first()
                        .map(|r| r.f)
                        .unwrap_or(s.trace.final_f),
                    armijo,
                    s.instance.mu.unwrap_or(0.0),
                    None,
                )?;
                violations.extend(tag(
                    name,
                    check_error_decrease(
                        &s.trace,
                        s.cert.f_star,
                        armijo.gamma,
                        armijo.a_upper,
                        p.dim(),
                        rc.f_dec,
                    ),
                ));
                violations.extend(tag(
                    name,
                    check_pivot_admissibility(&s.trace, p, s.config.tau),
                ));
                let (min_cap, cap_violations) = check_cap_floor(&s.trace, armijo.a_lower);
                outcome.min_observed_cap = min_cap;
                violations.extend(tag(name, cap_violations));
            }
            SuiteKind::Stepsize => {
                let mut table = exact_table_for(p)?;
                maybe_corrupt(&mut table, options);
                violations.extend(tag(
                    name,
                    check_stepsize_floor(&s.trace, &table, armijo.delta, armijo.gamma),
                ));
            }
            SuiteKind::Interiority => {
                violations.extend(tag(name, check_interiority(&s.trace, p, armijo.epsilon)?));
            }
            SuiteKind::Rate => {
                let table = exact_table_for(p)?;
                let rc = rate_constants(
                    p,
                    &table,
                    &s.cert,
                    s.trace
                        .outers
                        .first()
                        .map(|r| r.f)
                        .unwrap_or(s.trace.final_f),
                    armijo,
                    s.instance.mu.unwrap_or(0.0),
                    None,
                )?;
                outcome.rate_constant = Some(rc.c);
                violations.extend(tag(name, check_rate(&s.trace, s.cert.f_star, rc.c)));
            }
            SuiteKind::Identification => {
                let table = exact_table_for(p)?;
                let rc = rate_constants(
                    p,
                    &table,
                    &s.cert,
                    s.trace
                        .outers
                        .first()
                        .map(|r| r.f)
                        .unwrap_or(s.trace.final_f),
                    armijo,
                    s.instance.mu.unwrap_or(0.0),
                    None,
                )?;
                let radii =
                    identification_radii(&s.cert, &table, table.global, armijo, s.config.tau)?;
                let id = identification_detector(&s.trace, p, &s.cert, 1e-5)?;
                outcome.k_active_emp = id.k_active;
                outcome.k_nonactive_emp = id.k_nonactive;
                let settle = match (id.k_active, id.k_nonactive) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
                match settle {
                    None => violations.push(TaggedViolation {
                        instance: name.clone(),
                        violation: CheckViolation {
                            outer: s.trace.outers.len(),
                            inner: None,
                            lhs: f64::NAN,
                            rhs: f64::NAN,
                            what: "identification never settled".to_string(),
                        },
                    }),
                    Some(settle) => {
                        // exact active-set identification past the settle point
                        for (idx, x) in s.trace.points().iter().enumerate().skip(settle + 1) {
                            let bound_set = p.bound_set(x, 0.0);
                            if bound_set != s.cert.active {
                                violations.push(TaggedViolation {
                                    instance: name.clone(),
                                    violation: CheckViolation {
                                        outer: idx,
                                        inner: None,
                                        lhs: bound_set.len() as f64,
                                        rhs: s.cert.active.len() as f64,
                                        what: "bound set differs from A* past identification"
                                            .to_string(),
                                    },
                                });
                            }
                        }
                    }
                }
                if let Some(dmin) = s.cert.dmin_star {
                    let bounds = complexity_bounds(&rc, &radii, dmin)?;
                    outcome.k_active_bound = bounds.k_active;
                    outcome.k_nonactive_bound = Some(bounds.k_nonactive);
                    if let (Some(emp), Some(bound)) = (id.k_active, bounds.k_active) {
                        outcome.bound_ratio_active = Some(bound / (emp.max(1) as f64));
                        if (emp as f64) > bound {
                            violations.push(TaggedViolation {
                                instance: name.clone(),
                                violation: CheckViolation {
                                    outer: emp,
                                    inner: None,
                                    lhs: emp as f64,
                                    rhs: bound,
                                    what: "empirical k_active exceeds its bound".to_string(),
                                },
                            });
                        }
                    }
                    if let Some(emp) = id.k_nonactive {
                        outcome.bound_ratio_nonactive =
                            Some(bounds.k_nonactive / (emp.max(1) as f64));
                        if (emp as f64) > bounds.k_nonactive {
                            violations.push(TaggedViolation {
                                instance: name.clone(),
                                violation: CheckViolation {
                                    outer: emp,
                                    inner: None,
                                    lhs: emp as f64,
                                    rhs: bounds.k_nonactive,
                                    what: "empirical k_nonactive exceeds its bound".to_string(),
                                },
                            });
                        }
                    }
                }
                violations.extend(tag(
                    name,
                    check_radius_pivot_rule(&s.trace, &s.cert, radii.r_j),
                ));
                if let Some(dmin) = s.cert.dmin_star {
                    violations.extend(tag(
                        name,
                        check_radius_nonactive(&s.trace, p, &s.cert, dmin),
                    ));
                }
                if let Some(r_a) = radii.r_a {
                    violations.extend(tag(
                        name,
                        check_radius_strict_active(&s.trace, &s.cert, r_a)?,
                    ));
                }
            }
            _ => unreachable!("pointwise suites handled separately"),
        }
        outcomes.push(outcome);
    }
    Ok(finish_report(kind, options, outcomes, violations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_options() -> SuiteOptions {
        SuiteOptions {
            seed: 3,
            trials: 100,
            instances: 4,
            corrupt_lipschitz: false,
        }
    }

    #[test]
    fn seminorm_suite_is_clean_and_deterministic() {
        let report = run_suite(SuiteKind::Seminorm, &quick_options()).unwrap();
        assert!(report.passed, "{report:?}");
        let again = run_suite(SuiteKind::Seminorm, &quick_options()).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn trace_suites_pass_on_the_battery() {
        for kind in [
            SuiteKind::Descent,
            SuiteKind::Stepsize,
            SuiteKind::Interiority,
            SuiteKind::Rate,
            SuiteKind::Identification,
        ] {
            let report = run_suite(kind, &quick_options()).unwrap();
            assert!(
                report.passed,
                "{} failed: {:?}",
                kind.name(),
                report.violations.first()
            );
        }
    }

    #[test]
    fn lemmas_suite_passes_and_the_negative_control_fails() {
        let report = run_suite(SuiteKind::Lemmas, &quick_options()).unwrap();
        assert!(report.passed);
        let corrupted = SuiteOptions {
            corrupt_lipschitz: true,
            ..quick_options()
        };
        let report = run_suite(SuiteKind::Lemmas, &corrupted).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn suite_names_round_trip() {
        for kind in SuiteKind::ALL {
            assert_eq!(SuiteKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(SuiteKind::parse("nope").is_err());
    }
}
