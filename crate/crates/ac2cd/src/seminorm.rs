//! The pivot-excluding inner product and seminorm.
//!
//! For a fixed pivot index `j`, the inner product discards the `j`th
//! coordinate: `<x, y>_j = sum_{i != j} x_i y_i`. The induced seminorm is the
//! Euclidean norm of the remaining coordinates. It is the natural geometry on
//! the hyperplane `e'x = b` after eliminating `x_j`, and every rate constant
//! in [`crate::theory`] is stated in it.

use crate::error::{Error, Result};

/// Inner product of `x` and `y` with coordinate `j` excluded.
pub fn inner_excluding(x: &[f64], y: &[f64], j: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if j >= x.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            n: x.len(),
        });
    }
    Ok(x.iter()
        .zip(y)
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, (a, b))| a * b)
        .sum())
}

/// Seminorm of `x` with coordinate `j` excluded: `sqrt(<x, x>_j)`.
pub fn seminorm_excluding(x: &[f64], j: usize) -> f64 {
    x.iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, a)| a * a)
        .sum::<f64>()
        .sqrt()
}

/// Both sides of the reduced-product identity
/// `v'(x' - x'') = <v - v_j e, x' - x''>_j`, valid whenever `x'` and `x''`
/// lie on the same hyperplane `e'x = b`.
///
/// Returns `(lhs, rhs)` so callers can assert closeness themselves. Errors if
/// the two points do not share a hyperplane (relative tolerance 1e-9).
pub fn reduced_product_sides(v: &[f64], xp: &[f64], xpp: &[f64], j: usize) -> Result<(f64, f64)> {
    let n = v.len();
    if xp.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xp.len(),
        });
    }
    if xpp.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xpp.len(),
        });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let sp: f64 = xp.iter().sum();
    let spp: f64 = xpp.iter().sum();
    let scale = 1.0_f64.max(sp.abs()).max(spp.abs());
    if (sp - spp).abs() > 1e-9 * scale {
        return Err(Error::HyperplaneMismatch { lhs: sp, rhs: spp });
    }
    let lhs: f64 = v
        .iter()
        .zip(xp.iter().zip(xpp))
        .map(|(vi, (a, b))| vi * (a - b))
        .sum();
    let shifted: Vec<f64> = v.iter().map(|vi| vi - v[j]).collect();
    let diff: Vec<f64> = xp.iter().zip(xpp).map(|(a, b)| a - b).collect();
    let rhs = inner_excluding(&shifted, &diff, j)?;
    Ok((lhs, rhs))
}

/// A pivot index bundled with the dimension it excludes from.
///
/// Thin convenience over the free functions for callers that fix `j` once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeminormWorkspace {
    j: usize,
    n: usize,
}

impl SeminormWorkspace {
    pub fn new(j: usize, n: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        Ok(Self { j, n })
    }

    pub fn pivot(&self) -> usize {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        inner_excluding(x, y, self.j)
    }

    pub fn seminorm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(seminorm_excluding(x, self.j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    #[test]
    fn inner_drops_the_pivot_coordinate() {
        // x = y = e_j annihilates
        let e1 = [0.0, 1.0, 0.0];
        assert_eq!(inner_excluding(&e1, &e1, 1).unwrap(), 0.0);

        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 1.0, 1.0];
        assert_eq!(inner_excluding(&x, &y, 1).unwrap(), 4.0);

        let e = [1.0, 1.0, 1.0];
        for j in 0..3 {
            assert_eq!(inner_excluding(&e, &e, j).unwrap(), 2.0);
        }
    }

    #[test]
    fn seminorm_examples() {
        let ej = [0.0, 0.0, 1.0];
        assert_eq!(seminorm_excluding(&ej, 2), 0.0);

        let x = [3.0, 4.0, 0.0];
        assert_eq!(seminorm_excluding(&x, 2), 5.0);
    }

    #[test]
    fn seminorm_bounded_by_norm() {
        let x = [0.3, -1.7, 2.2, 0.0, -0.4];
        for j in 0..x.len() {
            assert!(seminorm_excluding(&x, j) <= norm(&x) + 1e-15);
        }
    }

    #[test]
    fn reduced_product_trivial_cases() {
        // constant v: lhs = c * e'(xp - xpp) = 0
        let v = [2.5, 2.5, 2.5];
        let xp = [0.2, 0.3, 0.5];
        let xpp = [0.5, 0.5, 0.0];
        let (lhs, rhs) = reduced_product_sides(&v, &xp, &xpp, 0).unwrap();
        assert!(lhs.abs() < 1e-15);
        assert!(rhs.abs() < 1e-15);

        let (lhs, rhs) = reduced_product_sides(&[1.0, -2.0, 0.5], &xp, &xp, 1).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn reduced_product_rejects_hyperplane_mismatch() {
        let v = [1.0, 2.0, 3.0];
        let xp = [0.2, 0.3, 0.5];
        let bad = [0.5, 0.5, 0.5];
        assert!(matches!(
            reduced_product_sides(&v, &xp, &bad, 0),
            Err(Error::HyperplaneMismatch { .. })
        ));
    }

    #[test]
    fn workspace_validates_pivot() {
        assert!(SeminormWorkspace::new(3, 3).is_err());
        let w = SeminormWorkspace::new(2, 3).unwrap();
        assert_eq!(w.seminorm(&[3.0, 4.0, 9.0]).unwrap(), 5.0);
    }
}
