//! `Sp(2,ℝ)` factorization and its metaplectic representation on the
//! truncated Fock space.
//!
//! Every `M` with `det M = 1` factors as `L(v) S(u) R(θ)` with
//! `L(v) = [[1, 0], [-v, 1]]`, `S(u) = diag(u^{-1/2}, u^{1/2})` and the
//! rotation `R(θ) = [[cos θ, -sin θ], [sin θ, cos θ]]`. The unitary
//! `U(M) = U(L) U(S) U(R)` is built from exponentials of quadratic generators
//! and satisfies `U(M) 𝔛 U(M)† = M⁻¹ 𝔛` for `𝔛 = (Q, P)`.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{CsError, Result};
use crate::fock::{self, FockOperator, FockVector, TruncationPolicy};
use crate::linalg::{self, CMatrix, CVector, I};

const DET_TOL: f64 = 1e-12;

/// `M(u, v) = L(v) S(u)`.
pub fn symplectic_lower(u: f64, v: f64) -> Matrix2<f64> {
    let su = u.sqrt();
    Matrix2::new(1.0 / su, 0.0, -v / su, su)
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

pub fn sp2_compose(v: f64, u: f64, theta: f64) -> Matrix2<f64> {
    symplectic_lower(u, v) * rotation(theta)
}

/// Returns `(v, u, θ)` with `θ ∈ (0, 2π]`.
pub fn sp2_decompose(m: &Matrix2<f64>) -> Result<(f64, f64, f64)> {
    let det = m.determinant();
    if !det.is_finite() || (det - 1.0).abs() > DET_TOL {
        return Err(CsError::NotSymplectic { det });
    }
    let inv_sqrt_u = m[(0, 0)].hypot(m[(0, 1)]);
    let sqrt_u = 1.0 / inv_sqrt_u;
    let c = m[(0, 0)] * sqrt_u;
    let s = -m[(0, 1)] * sqrt_u;
    let v = -sqrt_u * (m[(1, 0)] * c - m[(1, 1)] * s);
    let mut theta = s.atan2(c);
    if theta <= 0.0 {
        theta += 2.0 * std::f64::consts::PI;
    }
    Ok((v, sqrt_u * sqrt_u, theta))
}

fn validate(u: f64, v: f64, theta: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() || !v.is_finite() || !theta.is_finite() {
        return Err(CsError::InvalidParameter(format!(
            "metaplectic parameters need u > 0 and finite v, θ; got u = {u}, v = {v}, θ = {theta}"
        )));
    }
    Ok(())
}

/// `U(L(v)) U(S(u)) U(R(θ))` on an `n`-dimensional truncation, using exact
/// truncations of the quadratic generators.
pub(crate) fn metaplectic_matrix(u: f64, v: f64, theta: f64, n: usize) -> Result<CMatrix> {
    validate(u, v, theta)?;
    let quad = fock::quadratics(n);
    let q2 = (&quad.a2 + &quad.adag2 + &quad.a_adag + &quad.adag_a) * Complex64::new(0.5, 0.0);
    let dilation = (&quad.adag2 - &quad.a2) * (I * 0.5);
    let shear = linalg::expm(&(q2 * (-I * (v / 2.0))))?;
    let squeeze = linalg::expm(&(dilation * (I * (u.ln() / 2.0))))?;
    let rot = CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            (I * (theta * r as f64)).exp()
        } else {
            linalg::ZERO
        }
    });
    Ok(shear * squeeze * rot)
}

/// Truncated `U(M)` for `M = L(v) S(u) R(θ)`. Refuses parameters for which the
/// squeezed vacuum `U(M) φ_0` already reaches the truncation edge.
pub fn metaplectic_operator(u: f64, v: f64, theta: f64, trunc: TruncationPolicy) -> Result<FockOperator> {
    let m = metaplectic_matrix(u, v, theta, trunc.n_max())?;
    let edge = trunc.edge_margin() + 2;
    let n = trunc.n_max();
    let leak = m.view((n - edge, 0), (edge, 1)).norm();
    if leak > trunc.tail_tol().sqrt() {
        return Err(CsError::TruncationInsufficient {
            tail: leak * leak,
            tol: trunc.tail_tol(),
            n_max: n,
        });
    }
    FockOperator::general(m, trunc)
}

/// Largest leading block on which `U(M) 𝔛 U(M)†` and `M⁻¹ 𝔛` agree, together
/// with the deviation there (maximum over the two components).
pub fn metaplectic_covariance_check(
    u: f64,
    v: f64,
    theta: f64,
    trunc: TruncationPolicy,
) -> Result<(f64, usize)> {
    let um = metaplectic_operator(u, v, theta, trunc)?.into_matrix();
    let (q, p) = fock::position_momentum(trunc);
    let (q, p) = (q.into_matrix(), p.into_matrix());
    let minv = sp2_compose(v, u, theta)
        .try_inverse()
        .ok_or(CsError::NotSymplectic { det: 0.0 })?;
    let block = linalg::leakage_block(
        &um,
        trunc.edge_margin() + 2,
        trunc.tail_tol().sqrt(),
    )
    .saturating_sub(1)
    .max(1);
    let uh = um.adjoint();
    let c = |x: f64| Complex64::new(x, 0.0);
    let dq = &um * &q * &uh - (&q * c(minv[(0, 0)]) + &p * c(minv[(0, 1)]));
    let dp = &um * &p * &uh - (&q * c(minv[(1, 0)]) + &p * c(minv[(1, 1)]));
    let dev = linalg::interior_deviation(&dq, block).max(linalg::interior_deviation(&dp, block));
    Ok((dev, block))
}

/// Working dimension for states computed beyond the requested truncation.
pub(crate) fn extended_dim(n_max: usize) -> usize {
    (2 * n_max).max(n_max + 64)
}

/// Truncates an extended-space vector to `trunc`, refusing when the discarded
/// relative mass exceeds the tolerance.
pub(crate) fn truncate_checked(full: &CVector, trunc: TruncationPolicy) -> Result<Vec<Complex64>> {
    let n = trunc.n_max();
    let total: f64 = full.iter().map(|c| c.norm_sqr()).sum();
    let tail: f64 = full.iter().skip(n).map(|c| c.norm_sqr()).sum();
    let rel = if total > 0.0 { tail / total } else { 0.0 };
    if !(rel <= trunc.tail_tol()) {
        return Err(CsError::TruncationInsufficient {
            tail: rel,
            tol: trunc.tail_tol(),
            n_max: n,
        });
    }
    Ok(full.iter().take(n).cloned().collect())
}

/// `U(M(u,v)) ψ` for a vector given by its first `ext` coefficients.
pub(crate) fn apply_squeeze_extended(u: f64, v: f64, coeffs: &[Complex64]) -> Result<CVector> {
    let m = metaplectic_matrix(u, v, 0.0, coeffs.len())?;
    Ok(m * CVector::from_column_slice(coeffs))
}

/// `η^{u,v}_𝐱 = U(𝐱) U(M(u,v)) φ_0` with `U(𝐱) = D((q + ip)/√2)`.
pub fn squeezed_state(u: f64, v: f64, q: f64, p: f64, trunc: TruncationPolicy) -> Result<FockVector> {
    let ext = extended_dim(trunc.n_max());
    let ext_trunc = trunc.resized(ext)?;
    let mut vacuum = vec![linalg::ZERO; ext];
    vacuum[0] = linalg::ONE;
    let squeezed = apply_squeeze_extended(u, v, &vacuum)?;
    let z = fock::PhasePoint::from_qp(q, p).z();
    let d = fock::displacement(z, ext_trunc)?;
    let full = d.matrix() * squeezed;
    FockVector::new(truncate_checked(&full, trunc)?, trunc)
}

/// `(u/π)^{1/4} e^{i(x - q/2)p} e^{-(x-q)²(u + iv)/2}`.
pub fn squeezed_closed_form(u: f64, v: f64, q: f64, p: f64, x: f64) -> Complex64 {
    let d = x - q;
    let amp = (u / std::f64::consts::PI).powf(0.25);
    amp * (I * ((x - q / 2.0) * p)).exp() * (Complex64::new(u, v) * (-0.5 * d * d)).exp()
}

/// Maximum pointwise deviation between the Fock-space squeezed state and its
/// closed-form Gaussian over `xs`.
pub fn squeezed_wavefunction_check(
    u: f64,
    v: f64,
    q: f64,
    p: f64,
    xs: &[f64],
    trunc: TruncationPolicy,
) -> Result<f64> {
    let state = squeezed_state(u, v, q, p, trunc)?;
    let psi = fock::position_wavefunction(&state, xs)?;
    Ok(xs
        .iter()
        .zip(psi)
        .map(|(&x, val)| (val - squeezed_closed_form(u, v, q, p, x)).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn trunc(n: usize) -> TruncationPolicy {
        TruncationPolicy::with_dim(n).unwrap()
    }

    #[test]
    fn identity_decomposes_to_full_turn() {
        let (v, u, th) = sp2_decompose(&Matrix2::identity()).unwrap();
        assert!(v.abs() < 1e-15 && (u - 1.0).abs() < 1e-15);
        assert!((th - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn lower_factor_is_recovered() {
        let (v, u, th) = sp2_decompose(&symplectic_lower(2.0, 0.3)).unwrap();
        assert!((v - 0.3).abs() < 1e-14 && (u - 2.0).abs() < 1e-14);
        assert!((th - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn rotation_factor_is_symplectic() {
        for th in [0.3, 1.9, 4.0] {
            assert!((rotation(th).determinant() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn non_unit_determinant_is_rejected() {
        let m = Matrix2::new(2.0, 0.0, 0.0, 1.0);
        assert!(matches!(sp2_decompose(&m), Err(CsError::NotSymplectic { .. })));
    }

    #[test]
    fn trivial_parameters_give_identity() {
        let t = trunc(12);
        let u = metaplectic_operator(1.0, 0.0, 2.0 * PI, t).unwrap();
        assert!((u.matrix() - CMatrix::identity(12, 12)).norm() < 1e-12);
    }

    #[test]
    fn covariance_with_rotation() {
        let (dev, block) = metaplectic_covariance_check(1.5, -0.2, 0.7, trunc(80)).unwrap();
        assert!(block >= 10, "block {block}");
        assert!(dev < 1e-6, "dev {dev}");
    }

    #[test]
    fn vacuum_wavefunction() {
        let xs = [-2.0, -0.5, 0.0, 1.0, 3.0];
        let dev = squeezed_wavefunction_check(1.0, 0.0, 0.0, 0.0, &xs, trunc(40)).unwrap();
        assert!(dev < 1e-12);
    }
}
