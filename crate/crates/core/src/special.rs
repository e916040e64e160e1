//! Special functions: Pochhammer symbols, hypergeometric series, Laguerre
//! polynomials and Gauss–Laguerre quadrature.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{CsError, Result};

/// `ln (a)_n` for `a > 0`.
pub fn ln_pochhammer(a: f64, n: usize) -> f64 {
    (0..n).map(|k| (a + k as f64).ln()).sum()
}

/// Rising factorial `(a)_n = a (a+1) ... (a+n-1)`.
pub fn pochhammer(a: f64, n: usize) -> f64 {
    (0..n).map(|k| a + k as f64).product()
}

const SERIES_MAX_TERMS: usize = 200_000;

/// Generalized hypergeometric series `pFq(α; β; x)` summed until the terms
/// stop contributing. Fails when the series has not converged within the
/// term budget (e.g. `p = q + 1` with `|x| >= 1`).
pub fn hypergeometric_pfq(alpha: &[f64], beta: &[f64], x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        let num: f64 = alpha.iter().map(|a| a + nf).product();
        let den: f64 = beta.iter().map(|b| b + nf).product();
        term *= num / den * x / (nf + 1.0);
        sum += term;
        if !sum.is_finite() {
            return Err(CsError::Overflow {
                n,
                log_value: f64::INFINITY,
            });
        }
        if term == 0.0 {
            return Ok(sum);
        }
        // ratio of consecutive terms; once below 1/2 the remainder is
        // bounded by the current term
        let next_ratio = (alpha.iter().map(|a| a + nf + 1.0).product::<f64>()
            / beta.iter().map(|b| b + nf + 1.0).product::<f64>()
            * x
            / (nf + 2.0))
            .abs();
        if next_ratio < 0.5 && term.abs() <= f64::EPSILON * sum.abs() {
            return Ok(sum);
        }
    }
    Err(CsError::PreconditionViolated(format!(
        "hypergeometric series did not converge at x = {x}"
    )))
}

/// `0F1(; b; x)`.
pub fn hyp0f1(b: f64, x: f64) -> Result<f64> {
    hypergeometric_pfq(&[], &[b], x)
}

/// Generalized Laguerre polynomial `L^α_n(x)` by the three-term recurrence.
pub fn laguerre(alpha: f64, n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Nodes and weights of the `k`-point Gauss–Laguerre rule for
/// `∫₀^∞ g(x) e^{-x} dx`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix and are polished by
/// Newton steps on `L_k`; weights use `x_i / ((k+1)² L_{k+1}(x_i)²)`.
pub fn gauss_laguerre(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(CsError::InvalidParameter(
            "quadrature order must be positive".into(),
        ));
    }
    let jacobi = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            (2 * r + 1) as f64
        } else if r + 1 == c || c + 1 == r {
            r.max(c) as f64
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().cloned().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let kf = k as f64;
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let lk = laguerre(0.0, k, *x);
            let lkm1 = laguerre(0.0, k - 1, *x);
            let deriv = kf * (lk - lkm1) / *x;
            if deriv == 0.0 || !deriv.is_finite() {
                break;
            }
            let step = lk / deriv;
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let l = laguerre(0.0, k + 1, x);
            x / ((kf + 1.0).powi(2) * l * l)
        })
        .collect();
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(1.0, 5), 120.0);
        assert_eq!(pochhammer(2.5, 0), 1.0);
        assert_relative_eq!(pochhammer(0.5, 3), 0.5 * 1.5 * 2.5);
        assert_relative_eq!(ln_pochhammer(3.0, 4), (3.0f64 * 4.0 * 5.0 * 6.0).ln());
    }

    #[test]
    fn hypergeometric_special_cases() {
        // 0F0(;;x) = e^x, 1F0(a;;x) = (1-x)^{-a}, 0F1(;1/2;x²/4) = cosh x
        assert_relative_eq!(hypergeometric_pfq(&[], &[], 1.3).unwrap(), 1.3f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(
            hypergeometric_pfq(&[2.0], &[], 0.4).unwrap(),
            0.6f64.powi(-2),
            max_relative = 1e-13
        );
        assert_relative_eq!(hyp0f1(0.5, 0.81 / 4.0).unwrap(), 0.9f64.cosh(), max_relative = 1e-14);
        assert!(hypergeometric_pfq(&[1.0], &[], 1.0).is_err());
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.37;
        assert_eq!(laguerre(0.0, 0, x), 1.0);
        assert_relative_eq!(laguerre(0.0, 1, x), 1.0 - x);
        assert_relative_eq!(laguerre(0.0, 2, x), (x * x - 4.0 * x + 2.0) / 2.0);
        assert_relative_eq!(laguerre(1.0, 2, x), (x * x - 6.0 * x + 6.0) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn gauss_laguerre_integrates_monomials() {
        // ∫ x^m e^{-x} dx = m!, exact for m < 2k
        let (x, w) = gauss_laguerre(12).unwrap();
        let mut fact = 1.0;
        for m in 0..24 {
            if m > 0 {
                fact *= m as f64;
            }
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(m)).sum();
            assert!((q - fact).abs() / fact < 1e-12, "m = {m}: {q} vs {fact}");
        }
    }
}
