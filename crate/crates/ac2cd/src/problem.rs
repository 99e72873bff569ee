//! Problem instances, the objective oracle contract, feasibility and KKT
//! certificates.
//!
//! The problem class is
//!
//! ```text
//!     min  f(x)
//!     s.t. e'x = b,   l_i <= x_i <= u_i,
//! ```
//!
//! with `l_i` in `R ∪ {-inf}` and `u_i` in `R ∪ {+inf}` represented directly
//! as `f64` infinities.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for bound membership, scaled by
/// `max(1, |bound|)`. Updates clamp moved coordinates exactly onto their
/// binding bound, so exact equality is the common case and this is a safety
/// net.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-8;

/// Serde helpers encoding non-finite `f64` values as the strings `"inf"` /
/// `"-inf"` (JSON numbers cannot carry them; plain serde would emit `null`).
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Word(String),
    }

    fn encode(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v == f64::INFINITY {
            Repr::Word("inf".into())
        } else {
            Repr::Word("-inf".into())
        }
    }

    fn decode<E: serde::de::Error>(repr: Repr) -> Result<f64, E> {
        match repr {
            Repr::Num(v) => Ok(v),
            Repr::Word(w) => match w.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("unrecognized extended real {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        encode(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Repr::deserialize(d)?)
    }

    /// Same encoding for `Option<f64>` fields.
    pub mod optional {
        use super::{decode, encode, Repr};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(encode).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(decode).transpose()
        }
    }
}

/// Objective oracle: value plus per-coordinate partial derivatives.
///
/// `eval` and `partial` must be pure (same input, same output) and reentrant;
/// everything in this crate is safe for concurrent use under that contract.
pub trait Objective: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;

    fn partial(&self, x: &[f64], i: usize) -> f64;

    /// Full gradient; the default just loops over `partial`.
    fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.partial(x, i)).collect()
    }

    /// Curvature along `e_i - e_j`, i.e. `(e_i-e_j)' H (e_i-e_j)`, when the
    /// objective has a constant Hessian.
    fn pair_curvature(&self, _x: &[f64], _i: usize, _j: usize) -> Option<f64> {
        None
    }

    /// Row-major dense Hessian when it is constant (quadratic objectives).
    fn constant_hessian(&self) -> Option<Vec<f64>> {
        None
    }

    /// How the oracle appears in instance JSON, when it can be written down.
    fn objective_form(&self) -> Option<ObjectiveForm> {
        None
    }
}

/// Serializable description of an objective.
#[derive(Debug, Clone)]
pub enum ObjectiveForm {
    /// `f = x'Hx/2 + q'x + c0` with dense row-major `h`.
    Dense { h: Vec<f64>, q: Vec<f64>, c0: f64 },
    /// `f = ||Qx||^2 + q'x + c0` with row-major `m x n` factor.
    Factored {
        m: usize,
        factor: Vec<f64>,
        q: Vec<f64>,
        c0: f64,
    },
}

/// Dense quadratic objective `f(x) = x'Hx/2 + q'x + c0` with symmetric `H`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    n: usize,
    h: Vec<f64>, // row-major n*n
    q: Vec<f64>,
    c0: f64,
}

impl QuadraticObjective {
    pub fn new(n: usize, h: Vec<f64>, q: Vec<f64>, c0: f64) -> Result<Self> {
        if h.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: h.len(),
            });
        }
        if q.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.len(),
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
        Ok(Self { n, h, q, c0 })
    }

    pub fn hessian(&self) -> &[f64] {
        &self.h
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.q
    }

    pub fn constant_term(&self) -> f64 {
        self.c0
    }
}

impl Objective for QuadraticObjective {
    fn eval(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = self.c0;
        for i in 0..n {
            let mut hx = 0.0;
            for j in 0..n {
                hx += self.h[i * n + j] * x[j];
            }
            acc += (0.5 * hx + self.q[i]) * x[i];
        }
        acc
    }

    fn partial(&self, x: &[f64], i: usize) -> f64 {
        let n = self.n;
        let mut hx = 0.0;
        for j in 0..n {
            hx += self.h[i * n + j] * x[j];
        }
        hx + self.q[i]
    }

    fn pair_curvature(&self, _x: &[f64], i: usize, j: usize) -> Option<f64> {
        let n = self.n;
        Some(self.h[i * n + i] + self.h[j * n + j] - 2.0 * self.h[i * n + j])
    }

    fn constant_hessian(&self) -> Option<Vec<f64>> {
        Some(self.h.clone())
    }

    fn objective_form(&self) -> Option<ObjectiveForm> {
        Some(ObjectiveForm::Dense {
            h: self.h.clone(),
            q: self.q.clone(),
            c0: self.c0,
        })
    }
}

/// Factored quadratic `f(x) = ||Qx||^2 + q'x + c0` with an `m x n` factor.
///
/// A partial derivative costs O(m) through a cached residual `r = Qx`,
/// while the full gradient costs O(mn); the solver only ever asks for two
/// partials per inner step, which is where the method earns its keep. The
/// cache updates incrementally when the query point differs from the cached
/// one in at most two coordinates.
pub struct FactoredQuadratic {
    m: usize,
    n: usize,
    factor: Vec<f64>, // row-major m*n
    q: Vec<f64>,
    c0: f64,
    cache: Mutex<Option<ResidualCache>>,
    flops: AtomicU64,
}

struct ResidualCache {
    x: Vec<f64>,
    residual: Vec<f64>,
    /// Incremental updates since the last full rebuild.
    updates: u32,
}

/// Incremental cache updates before the residual is recomputed from scratch,
/// bounding accumulated rounding drift.
const RESIDUAL_REBUILD_PERIOD: u32 = 256;

impl FactoredQuadratic {
    pub fn new(m: usize, n: usize, factor: Vec<f64>, q: Vec<f64>, c0: f64) -> Result<Self> {
        if factor.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                got: factor.len(),
            });
        }
        if q.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.len(),
            });
        }
        Ok(Self {
            m,
            n,
            factor,
            q,
            c0,
            cache: Mutex::new(None),
            flops: AtomicU64::new(0),
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.q
    }

    pub fn constant_term(&self) -> f64 {
        self.c0
    }

    /// Multiply-add count accumulated by residual maintenance and partials.
    pub fn flops(&self) -> u64 {
        self.flops.load(Ordering::Relaxed)
    }

    pub fn reset_flops(&self) {
        self.flops.store(0, Ordering::Relaxed);
    }

    fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |k| self.factor[k * self.n + j])
    }

    /// Residual `Qx`, reusing the cache when `x` is within two coordinate
    /// changes of the cached point. Rebuilds from scratch every
    /// [`RESIDUAL_REBUILD_PERIOD`] incremental updates.
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut guard = self.cache.lock().unwrap();
        if let Some(cache) = guard.as_ref() {
            if cache.x == x {
                return cache.residual.clone();
            }
            let changed: Vec<usize> = (0..self.n).filter(|&i| cache.x[i] != x[i]).collect();
            if changed.len() <= 2 && cache.updates < RESIDUAL_REBUILD_PERIOD {
                let mut r = cache.residual.clone();
                for &i in &changed {
                    let delta = x[i] - cache.x[i];
                    for (rk, qki) in r.iter_mut().zip(self.column(i)) {
                        *rk += delta * qki;
                    }
                }
                self.flops
                    .fetch_add((changed.len() * self.m) as u64, Ordering::Relaxed);
                let updates = cache.updates + 1;
                *guard = Some(ResidualCache { x: x.to_vec(), residual: r.clone(), updates });
                return r;
            }
        }
        let mut r = vec![0.0; self.m];
        for k in 0..self.m {
            let row = &self.factor[k * self.n..(k + 1) * self.n];
            r[k] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        self.flops
            .fetch_add((self.m * self.n) as u64, Ordering::Relaxed);
        *guard = Some(ResidualCache { x: x.to_vec(), residual: r.clone(), updates: 0 });
        r
    }
}

impl Objective for FactoredQuadratic {
    fn eval(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        let quad: f64 = r.iter().map(|v| v * v).sum();
        let lin: f64 = self.q.iter().zip(x).map(|(a, b)| a * b).sum();
        quad + lin + self.c0
    }

    fn partial(&self, x: &[f64], i: usize) -> f64 {
        let r = self.residual(x);
        let qtr: f64 = self.column(i).zip(&r).map(|(a, b)| a * b).sum();
        self.flops.fetch_add(self.m as u64, Ordering::Relaxed);
        2.0 * qtr + self.q[i]
    }

    fn pair_curvature(&self, _x: &[f64], i: usize, j: usize) -> Option<f64> {
        let s: f64 = self
            .column(i)
            .zip(self.column(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Some(2.0 * s)
    }

    fn constant_hessian(&self) -> Option<Vec<f64>> {
        // H = 2 Q'Q
        let mut h = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in i..self.n {
                let v: f64 = self.column(i).zip(self.column(j)).map(|(a, b)| a * b).sum();
                h[i * self.n + j] = 2.0 * v;
                h[j * self.n + i] = 2.0 * v;
            }
        }
        Some(h)
    }

    fn objective_form(&self) -> Option<ObjectiveForm> {
        Some(ObjectiveForm::Factored {
            m: self.m,
            factor: self.factor.clone(),
            q: self.q.clone(),
            c0: self.c0,
        })
    }
}

/// A singly linearly constrained box problem.
#[derive(Clone)]
pub struct Problem {
    n: usize,
    b: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    oracle: Arc<dyn Objective>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("n", &self.n)
            .field("b", &self.b)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        b: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        oracle: Arc<dyn Objective>,
    ) -> Result<Self> {
        let n = lower.len();
        if upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: upper.len(),
            });
        }
        if n < 2 {
            return Err(Error::BadInstance(format!("n must be >= 2, got {n}")));
        }
        for i in 0..n {
            if lower[i].is_nan() || upper[i].is_nan() || lower[i] >= upper[i] {
                return Err(Error::BadInstance(format!(
                    "empty bound interval at coordinate {i}: [{}, {}]",
                    lower[i], upper[i]
                )));
            }
            if lower[i] == f64::INFINITY || upper[i] == f64::NEG_INFINITY {
                return Err(Error::BadInstance(format!("bound sign at coordinate {i}")));
            }
        }
        Ok(Self {
            n,
            b,
            lower,
            upper,
            oracle,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rhs(&self) -> f64 {
        self.b
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn oracle(&self) -> &Arc<dyn Objective> {
        &self.oracle
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.oracle.eval(x)
    }

    pub fn partial(&self, x: &[f64], i: usize) -> f64 {
        self.oracle.partial(x, i)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.oracle.full_gradient(x)
    }

    /// True iff `|e'x - b| <= tol*max(1,|b|)` and `l_i - tol <= x_i <= u_i + tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let sum: f64 = x.iter().sum();
        if (sum - self.b).abs() > tol * self.b.abs().max(1.0) {
            return Ok(false);
        }
        Ok(x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&li, &ui))| xi >= li - tol && xi <= ui + tol))
    }

    /// Distance of `x_h` from its nearest bound: `min{x_h - l_h, u_h - x_h}`.
    /// `+inf` only when both bounds are infinite.
    pub fn distance_to_bound(&self, x: &[f64], h: usize) -> f64 {
        (x[h] - self.lower[h]).min(self.upper[h] - x[h])
    }

    /// Maximum bound distance over all coordinates.
    pub fn max_distance(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|h| self.distance_to_bound(x, h))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `x_i` sits on its lower bound within the scaled tolerance.
    pub fn at_lower(&self, x: &[f64], i: usize, tol: f64) -> bool {
        let l = self.lower[i];
        l.is_finite() && (x[i] - l).abs() <= tol * l.abs().max(1.0)
    }

    /// Whether `x_i` sits on its upper bound within the scaled tolerance.
    pub fn at_upper(&self, x: &[f64], i: usize, tol: f64) -> bool {
        let u = self.upper[i];
        u.is_finite() && (x[i] - u).abs() <= tol * u.abs().max(1.0)
    }

    /// Indices currently at a bound within the scaled tolerance.
    pub fn bound_set(&self, x: &[f64], tol: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.at_lower(x, i, tol) || self.at_upper(x, i, tol))
            .collect()
    }

    /// KKT certificate at a feasible point.
    ///
    /// The multiplier estimate scans the candidate set `{grad_i : x_i
    /// interior}` (all gradients as a fallback when no coordinate is
    /// interior) and keeps the candidate minimizing the max violation of the
    /// stationarity conditions. Exact at stationary points.
    pub fn kkt_certificate(&self, x: &[f64], tol: f64) -> Result<KktCertificate> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let grad = self.gradient(x);
        let classification: Vec<BoundStatus> = (0..self.n)
            .map(|i| {
                if self.at_lower(x, i, tol) {
                    BoundStatus::AtLower
                } else if self.at_upper(x, i, tol) {
                    BoundStatus::AtUpper
                } else {
                    BoundStatus::Interior
                }
            })
            .collect();

        let residual_for = |lambda: f64| -> f64 {
            classification
                .iter()
                .zip(&grad)
                .map(|(status, &g)| match status {
                    BoundStatus::AtLower => (lambda - g).max(0.0),
                    BoundStatus::AtUpper => (g - lambda).max(0.0),
                    BoundStatus::Interior => (g - lambda).abs(),
                })
                .fold(0.0, f64::max)
        };

        let interior: Vec<f64> = classification
            .iter()
            .zip(&grad)
            .filter(|(s, _)| **s == BoundStatus::Interior)
            .map(|(_, &g)| g)
            .collect();
        let candidates: &[f64] = if interior.is_empty() {
            &grad
        } else {
            &interior
        };

        let mut best_lambda = candidates[0];
        let mut best_residual = residual_for(best_lambda);
        for &lambda in &candidates[1..] {
            let r = residual_for(lambda);
            if r < best_residual {
                best_residual = r;
                best_lambda = lambda;
            }
        }
        Ok(KktCertificate {
            lambda_hat: best_lambda,
            residual: best_residual,
            classification,
        })
    }

    /// Active set `A` and strict active set `A+` at a stationary point with
    /// multiplier `lambda`.
    pub fn active_sets(&self, x: &[f64], lambda: f64, tol: f64) -> (Vec<usize>, Vec<usize>) {
        let active = self.bound_set(x, tol);
        let strict = active
            .iter()
            .copied()
            .filter(|&i| (self.partial(x, i) - lambda).abs() > tol)
            .collect();
        (active, strict)
    }

    /// Minimum strict-complementarity gap at the certified point.
    pub fn zeta(&self, cert: &SolutionCertificate) -> Result<f64> {
        if cert.strict_active.is_empty() {
            return Err(Error::ZetaUndefined);
        }
        Ok(cert
            .strict_active
            .iter()
            .map(|&i| (self.partial(&cert.x_star, i) - cert.lambda_star).abs())
            .fold(f64::INFINITY, f64::min))
    }

    /// `(D*max, D*min)`: maximum bound distance over all coordinates, and
    /// minimum over non-active coordinates (`None` when every coordinate is
    /// active).
    pub fn bound_distance_extremes(&self, x_star: &[f64], active: &[usize]) -> (f64, Option<f64>) {
        let dmax = self.max_distance(x_star);
        let dmin = if active.len() >= self.n {
            None
        } else {
            Some(
                (0..self.n)
                    .filter(|i| !active.contains(i))
                    .map(|h| self.distance_to_bound(x_star, h))
                    .fold(f64::INFINITY, f64::min),
            )
        };
        (dmax, dmin)
    }
}

/// Per-coordinate position relative to the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    AtLower,
    AtUpper,
    Interior,
}

/// Stationarity certificate: multiplier estimate and max KKT violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktCertificate {
    pub lambda_hat: f64,
    pub residual: f64,
    pub classification: Vec<BoundStatus>,
}

/// Ground-truth solution data emitted by the reference oracle or designed by
/// the instance generators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionCertificate {
    pub x_star: Vec<f64>,
    pub lambda_star: f64,
    pub f_star: f64,
    /// Indices at a bound at `x_star`.
    pub active: Vec<usize>,
    /// Active indices with `grad_i != lambda_star` (strict complementarity).
    pub strict_active: Vec<usize>,
    /// `min_{i in strict_active} |grad_i - lambda_star|`; `None` when the
    /// strict active set is empty.
    pub zeta: Option<f64>,
    #[serde(with = "extended_real")]
    pub dmax_star: f64,
    /// `min_{i not active} D_i(x_star)`; `None` when all coordinates active.
    #[serde(with = "extended_real::optional", default)]
    pub dmin_star: Option<f64>,
    /// Condition estimate of the stationarity system that produced `x_star`,
    /// when it came from the enumeration oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_estimate: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// E1: f(x) = ||x - c||^2 / 2 on the unit simplex, c = (0.5, 0.7, -0.2).
    pub(crate) fn e1() -> Problem {
        let c = [0.5, 0.7, -0.2];
        let c0 = 0.5 * c.iter().map(|v| v * v).sum::<f64>();
        let oracle = QuadraticObjective::new(
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            c.iter().map(|v| -v).collect(),
            c0,
        )
        .unwrap();
        Problem::new(1.0, vec![0.0; 3], vec![f64::INFINITY; 3], Arc::new(oracle)).unwrap()
    }

    #[test]
    fn feasibility_on_the_simplex() {
        let p = e1();
        assert!(p.is_feasible(&[0.4, 0.6, 0.0], 1e-12).unwrap());
        assert!(!p.is_feasible(&[0.5, 0.6, 0.0], 1e-12).unwrap());
        assert!(!p.is_feasible(&[1.2, 0.1, -0.3], 1e-12).unwrap());
        assert!(p.is_feasible(&[1.0, 0.0, 0.0], 0.0).unwrap());
        assert!(matches!(
            p.is_feasible(&[1.0, 0.0], 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bound_distances() {
        let p = e1();
        assert_eq!(p.distance_to_bound(&[0.4, 0.6, 0.0], 0), 0.4);
        assert_eq!(p.max_distance(&[1.0, 0.0, 0.0]), 1.0);
        assert_eq!(p.max_distance(&[0.4, 0.6, 0.0]), 0.6);

        let box01 = Problem::new(
            1.0,
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            Arc::new(
                QuadraticObjective::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap(),
            ),
        )
        .unwrap();
        assert_eq!(box01.distance_to_bound(&[0.3, 0.7], 0), 0.3);
        assert_eq!(box01.distance_to_bound(&[0.5, 0.5], 0), 0.5);

        let free = Problem::new(
            0.0,
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
            Arc::new(
                QuadraticObjective::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], 0.0).unwrap(),
            ),
        )
        .unwrap();
        assert_eq!(free.distance_to_bound(&[3.0, -4.0], 1), f64::INFINITY);
    }

    #[test]
    fn kkt_certificate_at_the_optimum_and_away_from_it() {
        let p = e1();
        // x* = (0.4, 0.6, 0), grad = (-0.1, -0.1, 0.2)
        let cert = p.kkt_certificate(&[0.4, 0.6, 0.0], 1e-9).unwrap();
        assert!((cert.lambda_hat + 0.1).abs() < 1e-12);
        assert!(cert.residual < 1e-12);
        assert_eq!(cert.classification[2], BoundStatus::AtLower);

        // vertex (1,0,0): only interior coordinate is the first
        let cert = p.kkt_certificate(&[1.0, 0.0, 0.0], 1e-9).unwrap();
        assert_eq!(cert.lambda_hat, 0.5);
        assert!((cert.residual - 1.2).abs() < 1e-12);
    }

    #[test]
    fn kkt_certificate_constant_gradient() {
        // f = 3 e'x is linear; every interior point has grad = 3e.
        let oracle = QuadraticObjective::new(2, vec![0.0; 4], vec![3.0, 3.0], 0.0).unwrap();
        let p = Problem::new(1.0, vec![0.0, 0.0], vec![1.0, 1.0], Arc::new(oracle)).unwrap();
        let cert = p.kkt_certificate(&[0.5, 0.5], 1e-9).unwrap();
        assert_eq!(cert.lambda_hat, 3.0);
        assert_eq!(cert.residual, 0.0);
    }

    #[test]
    fn active_sets_at_e1_optimum() {
        let p = e1();
        let (a, a_plus) = p.active_sets(&[0.4, 0.6, 0.0], -0.1, 1e-9);
        assert_eq!(a, vec![2]);
        assert_eq!(a_plus, vec![2]);

        // fully interior stationary point of a different instance
        let oracle =
            QuadraticObjective::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 0.0).unwrap();
        let p2 = Problem::new(1.0, vec![0.0, 0.0], vec![1.0, 1.0], Arc::new(oracle)).unwrap();
        let (a, a_plus) = p2.active_sets(&[0.5, 0.5], 0.5, 1e-9);
        assert!(a.is_empty() && a_plus.is_empty());
    }

    #[test]
    fn kkt_residual_positive_away_from_the_optimum() {
        // strongly convex: points with a real objective gap must show a
        // positive residual
        let p = e1();
        let f_star = 0.03;
        for x in [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.2, 0.3, 0.5],
            [0.45, 0.55, 0.0],
        ] {
            let gap = p.eval(&x) - f_star;
            if gap > 1e-6 * (1.0 + f_star.abs()) {
                let cert = p.kkt_certificate(&x, 1e-9).unwrap();
                assert!(cert.residual > 0.0, "x = {x:?}");
            }
        }
    }

    #[test]
    fn active_sets_monotone_in_tol() {
        let p = e1();
        let x = [0.4, 0.6 - 1e-7, 1e-7];
        let (a_small, _) = p.active_sets(&x, -0.1, 1e-9);
        let (a_big, _) = p.active_sets(&x, 1e-6, 1e-9);
        for i in &a_small {
            assert!(a_big.contains(i));
        }
    }

    #[test]
    fn zeta_and_extremes() {
        let p = e1();
        let (active, strict) = p.active_sets(&[0.4, 0.6, 0.0], -0.1, 1e-9);
        let (dmax, dmin) = p.bound_distance_extremes(&[0.4, 0.6, 0.0], &active);
        let cert = SolutionCertificate {
            x_star: vec![0.4, 0.6, 0.0],
            lambda_star: -0.1,
            f_star: 0.03,
            active: active.clone(),
            strict_active: strict,
            zeta: None,
            dmax_star: dmax,
            dmin_star: dmin,
            condition_estimate: None,
        };
        assert!((p.zeta(&cert).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(dmax, 0.6);
        assert_eq!(dmin, Some(0.4));

        let empty = SolutionCertificate {
            strict_active: vec![],
            ..cert
        };
        assert!(matches!(p.zeta(&empty), Err(Error::ZetaUndefined)));
    }

    #[test]
    fn factored_matches_dense() {
        // f = ||Qx||^2 - q'x with a 2x3 factor
        let factor = vec![1.0, -0.5, 0.25, 0.0, 2.0, -1.0];
        let fq = FactoredQuadratic::new(2, 3, factor.clone(), vec![-1.0, 0.5, 2.0], 0.0).unwrap();
        let h = fq.constant_hessian().unwrap();
        let dq = QuadraticObjective::new(3, h, vec![-1.0, 0.5, 2.0], 0.0).unwrap();
        let x = [0.3, -1.2, 0.8];
        assert!((fq.eval(&x) - dq.eval(&x)).abs() < 1e-12);
        for i in 0..3 {
            assert!((fq.partial(&x, i) - dq.partial(&x, i)).abs() < 1e-12);
        }
        let grad = fq.full_gradient(&x);
        for i in 0..3 {
            assert!((grad[i] - fq.partial(&x, i)).abs() <= 1e-12 * grad[i].abs().max(1.0));
        }
    }

    #[test]
    fn factored_partials_are_cheap_after_a_residual_is_cached() {
        let m = 40;
        let n = 6;
        let factor: Vec<f64> = (0..m * n)
            .map(|k| ((k * 7 + 3) % 11) as f64 / 11.0)
            .collect();
        let fq = FactoredQuadratic::new(m, n, factor, vec![0.0; n], 0.0).unwrap();
        let x = vec![1.0; n];
        fq.eval(&x); // populate cache: m*n muladds
        fq.reset_flops();
        for i in 0..n {
            fq.partial(&x, i);
        }
        let partial_cost = fq.flops();
        assert_eq!(partial_cost, (n * m) as u64); // n partials at O(m) each

        fq.reset_flops();
        fq.full_gradient(&x); // same point: still n*m, no residual rebuild
        assert_eq!(fq.flops(), (n * m) as u64);

        // two-coordinate move keeps maintenance at O(m) per changed coordinate
        let mut y = x.clone();
        y[0] += 0.5;
        y[3] -= 0.5;
        fq.reset_flops();
        fq.partial(&y, 0);
        assert_eq!(fq.flops(), (3 * m) as u64); // 2m update + m dot
    }
}
