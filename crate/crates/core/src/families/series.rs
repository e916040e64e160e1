//! Power series `G(z) = Σ c_k z^k` with real coefficients.

use num_complex::Complex64;

use crate::error::{CsError, Result};
use crate::linalg::{CMatrix, ZERO};

/// Default number of terms kept when a closed-form entire function is
/// expanded into its power series.
pub const DEFAULT_MAX_DEGREE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EntireSeries {
    coeffs: Vec<f64>,
}

impl EntireSeries {
    /// Fails when the coefficient list is empty, contains non-finite values,
    /// or `G(0) = 0`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CsError::InvalidParameter(
                "entire series needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CsError::InvalidParameter(
                "entire series coefficients must be finite".into(),
            ));
        }
        if coeffs[0] == 0.0 {
            return Err(CsError::InvalidParameter("G(0) must be nonzero".into()));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    /// `e^{μ z}` expanded to at most `max_degree`, stopping early once the
    /// terms fall below machine precision relative to the sum at `|z| = 1`.
    pub fn exponential(mu: f64, max_degree: usize) -> Result<Self> {
        if !mu.is_finite() {
            return Err(CsError::InvalidParameter(format!("exponent {mu} is not finite")));
        }
        let mut coeffs = vec![1.0];
        let mut c = 1.0;
        for k in 1..=max_degree {
            c *= mu / k as f64;
            if c.abs() < f64::EPSILON * 1e-3 {
                break;
            }
            coeffs.push(c);
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1.0]
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(ZERO, |acc, c| acc * z + Complex64::new(*c, 0.0))
    }

    /// `Σ c_k X^k` by Horner's scheme.
    pub fn apply_to_matrix(&self, x: &CMatrix) -> CMatrix {
        let n = x.nrows();
        let id = CMatrix::identity(n, n);
        self.coeffs.iter().rev().fold(CMatrix::zeros(n, n), |acc, c| {
            acc * x + &id * Complex64::new(*c, 0.0)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_series_matches_exp() {
        let g = EntireSeries::exponential(0.7, DEFAULT_MAX_DEGREE).unwrap();
        let z = Complex64::new(0.3, -1.1);
        assert!((g.eval(z) - (z * 0.7).exp()).norm() < 1e-14);
    }

    #[test]
    fn zero_constant_term_is_rejected() {
        assert!(EntireSeries::new(vec![0.0, 1.0]).is_err());
        assert!(EntireSeries::new(vec![]).is_err());
        assert!(EntireSeries::new(vec![1.0, 0.0, 0.0]).unwrap().is_one());
    }
}
