//! Truncated Fock-space arithmetic.
//!
//! Conventions:
//! - `D(z) = exp(z a† - z̄ a)`, so that `D(z) φ_0` is the canonical coherent
//!   state with coefficients `e^{-|z|²/2} z^n / √n!`. The opposite sign
//!   convention `exp(z̄ a - z a†)` maps `z -> -z`.
//! - The truncated displacements compose as
//!   `D(z₁) D(z₂) = exp(i Im(z₁ z̄₂)) D(z₁ + z₂)`.
//! - Phase points use `z = (q + i p) / √2`, which puts `D(z) φ_0` at
//!   position `q` and momentum `p` for `P = (a - a†) / (i√2)`.

use num_complex::Complex64;

use crate::error::{CsError, Result};
use crate::linalg::{self, CMatrix, I, ONE, ZERO};

/// Hermite recurrence limit for position-space evaluation.
pub const MAX_HERMITE_ORDER: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    n_max: usize,
    tail_tol: f64,
    edge_margin: usize,
}

impl TruncationPolicy {
    pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
    pub const DEFAULT_EDGE_MARGIN: usize = 2;

    pub fn new(n_max: usize, tail_tol: f64, edge_margin: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(CsError::InvalidParameter(format!(
                "n_max must be at least 2, got {n_max}"
            )));
        }
        if !(tail_tol >= 0.0) || !tail_tol.is_finite() {
            return Err(CsError::InvalidParameter(format!(
                "tail_tol must be a finite nonnegative number, got {tail_tol}"
            )));
        }
        if edge_margin >= n_max {
            return Err(CsError::InvalidParameter(format!(
                "edge_margin {edge_margin} must be below n_max {n_max}"
            )));
        }
        Ok(Self {
            n_max,
            tail_tol,
            edge_margin,
        })
    }

    /// Policy with the default tail tolerance and edge margin.
    pub fn with_dim(n_max: usize) -> Result<Self> {
        Self::new(n_max, Self::DEFAULT_TAIL_TOL, Self::DEFAULT_EDGE_MARGIN.min(n_max - 1))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn edge_margin(&self) -> usize {
        self.edge_margin
    }

    /// Size of the block on which products of `deg`-banded operators are exact.
    pub fn interior(&self, deg: usize) -> usize {
        self.n_max.saturating_sub(self.edge_margin + deg).max(1)
    }

    /// Copy with a different dimension; the margin is clamped to stay valid.
    pub fn resized(&self, n_max: usize) -> Result<Self> {
        Self::new(n_max, self.tail_tol, self.edge_margin.min(n_max.saturating_sub(1)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<Complex64>,
    trunc: TruncationPolicy,
    normalized: bool,
}

impl FockVector {
    pub fn new(coeffs: Vec<Complex64>, trunc: TruncationPolicy) -> Result<Self> {
        if coeffs.len() != trunc.n_max() {
            return Err(CsError::DimensionMismatch {
                expected: trunc.n_max(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            trunc,
            normalized: false,
        })
    }

    /// Tags the vector as normalized; fails if the norm is off by more than
    /// `10 * tail_tol`.
    pub fn into_normalized(mut self) -> Result<Self> {
        let dev = (self.norm() - 1.0).abs();
        if dev > 10.0 * self.trunc.tail_tol() {
            return Err(CsError::TruncationInsufficient {
                tail: dev,
                tol: 10.0 * self.trunc.tail_tol(),
                n_max: self.trunc.n_max(),
            });
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn basis(n: usize, trunc: TruncationPolicy) -> Result<Self> {
        if n >= trunc.n_max() {
            return Err(CsError::InvalidParameter(format!(
                "basis index {n} outside truncation {}",
                trunc.n_max()
            )));
        }
        let mut coeffs = vec![ZERO; trunc.n_max()];
        coeffs[n] = ONE;
        Ok(Self {
            coeffs,
            trunc,
            normalized: true,
        })
    }

    pub fn vacuum(trunc: TruncationPolicy) -> Self {
        Self::basis(0, trunc).expect("n_max >= 2")
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn trunc(&self) -> &TruncationPolicy {
        &self.trunc
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &FockVector) -> Complex64 {
        linalg::inner(&self.coeffs, &other.coeffs)
    }

    pub fn scaled(&self, alpha: Complex64) -> FockVector {
        FockVector {
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
            trunc: self.trunc,
            normalized: self.normalized && (alpha.norm() - 1.0).abs() < 1e-15,
        }
    }

    pub fn to_column(&self) -> linalg::CVector {
        linalg::CVector::from_column_slice(&self.coeffs)
    }

    pub fn from_column(col: &linalg::CVector, trunc: TruncationPolicy) -> Result<Self> {
        Self::new(col.iter().cloned().collect(), trunc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Diagonal,
    /// Nonzero entries strictly above the diagonal only.
    Lowering,
    /// Nonzero entries strictly below the diagonal only.
    Raising,
    General,
}

impl Structure {
    fn admits(self, row: usize, col: usize) -> bool {
        match self {
            Structure::Diagonal => row == col,
            Structure::Lowering => row < col,
            Structure::Raising => row > col,
            Structure::General => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: CMatrix,
    structure: Structure,
    trunc: TruncationPolicy,
}

impl FockOperator {
    pub fn new(matrix: CMatrix, structure: Structure, trunc: TruncationPolicy) -> Result<Self> {
        let n = trunc.n_max();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(CsError::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        for c in 0..n {
            for r in 0..n {
                if !structure.admits(r, c) && matrix[(r, c)] != ZERO {
                    return Err(CsError::InvalidParameter(format!(
                        "entry ({r},{c}) is nonzero for a {structure:?} operator"
                    )));
                }
            }
        }
        Ok(Self {
            matrix,
            structure,
            trunc,
        })
    }

    pub fn general(matrix: CMatrix, trunc: TruncationPolicy) -> Result<Self> {
        Self::new(matrix, Structure::General, trunc)
    }

    pub fn diagonal_real(values: &[f64], trunc: TruncationPolicy) -> Result<Self> {
        if values.len() != trunc.n_max() {
            return Err(CsError::DimensionMismatch {
                expected: trunc.n_max(),
                found: values.len(),
            });
        }
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(values[r], 0.0)
            } else {
                ZERO
            }
        });
        Self::new(m, Structure::Diagonal, trunc)
    }

    pub fn identity(trunc: TruncationPolicy) -> Self {
        let n = trunc.n_max();
        Self {
            matrix: CMatrix::identity(n, n),
            structure: Structure::Diagonal,
            trunc,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn trunc(&self) -> &TruncationPolicy {
        &self.trunc
    }

    pub fn dagger(&self) -> FockOperator {
        let structure = match self.structure {
            Structure::Lowering => Structure::Raising,
            Structure::Raising => Structure::Lowering,
            s => s,
        };
        FockOperator {
            matrix: self.matrix.adjoint(),
            structure,
            trunc: self.trunc,
        }
    }

    /// Real parts of the diagonal (meaningful for diagonal metrics).
    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.matrix.nrows()).map(|k| self.matrix[(k, k)].re).collect()
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.coeffs.len() != self.matrix.ncols() {
            return Err(CsError::DimensionMismatch {
                expected: self.matrix.ncols(),
                found: v.coeffs.len(),
            });
        }
        FockVector::from_column(&(&self.matrix * v.to_column()), self.trunc)
    }
}

/// Phase-space point with `z = (q + i p) / √2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    z: Complex64,
}

impl PhasePoint {
    pub fn from_z(z: Complex64) -> Self {
        Self { z }
    }

    pub fn from_qp(q: f64, p: f64) -> Self {
        Self {
            z: Complex64::new(q, p) / std::f64::consts::SQRT_2,
        }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn qp(&self) -> (f64, f64) {
        let s = self.z * std::f64::consts::SQRT_2;
        (s.re, s.im)
    }
}

pub fn ladder_lowering(trunc: TruncationPolicy) -> FockOperator {
    let n = trunc.n_max();
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    FockOperator {
        matrix: m,
        structure: Structure::Lowering,
        trunc,
    }
}

pub fn ladder_raising(trunc: TruncationPolicy) -> FockOperator {
    let n = trunc.n_max();
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        m[(k + 1, k)] = Complex64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    FockOperator {
        matrix: m,
        structure: Structure::Raising,
        trunc,
    }
}

pub fn number_op(trunc: TruncationPolicy) -> FockOperator {
    let values: Vec<f64> = (0..trunc.n_max()).map(|k| k as f64).collect();
    FockOperator::diagonal_real(&values, trunc).expect("length matches")
}

/// Exact truncations of `a²`, `a†²`, `a a†` and `a† a` (not products of
/// truncated ladders, which corrupt the last diagonal entry).
pub(crate) struct Quadratics {
    pub a2: CMatrix,
    pub adag2: CMatrix,
    pub a_adag: CMatrix,
    pub adag_a: CMatrix,
}

pub(crate) fn quadratics(n: usize) -> Quadratics {
    let mut a2 = CMatrix::zeros(n, n);
    for k in 2..n {
        a2[(k - 2, k)] = Complex64::new(((k * (k - 1)) as f64).sqrt(), 0.0);
    }
    let adag2 = a2.adjoint();
    let a_adag = CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::new((r + 1) as f64, 0.0)
        } else {
            ZERO
        }
    });
    let adag_a = CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::new(r as f64, 0.0)
        } else {
            ZERO
        }
    });
    Quadratics {
        a2,
        adag2,
        a_adag,
        adag_a,
    }
}

/// Position `Q = (a + a†)/√2` and momentum `P = (a - a†)/(i√2)`.
pub fn position_momentum(trunc: TruncationPolicy) -> (FockOperator, FockOperator) {
    let a = ladder_lowering(trunc).into_matrix();
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &ad) * Complex64::new(s, 0.0);
    let p = (&a - &ad) * (-I * s);
    (
        FockOperator {
            matrix: q,
            structure: Structure::General,
            trunc,
        },
        FockOperator {
            matrix: p,
            structure: Structure::General,
            trunc,
        },
    )
}

/// Mass `P(X >= n)` of a Poisson distribution with the given mean, summed
/// directly over the tail (no `1 - cdf` cancellation).
pub fn poisson_tail(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_mean = mean.ln();
    let mut log_term = -mean + n as f64 * ln_mean - ln_factorial(n);
    let mut total = 0.0;
    let mut k = n;
    loop {
        let term = log_term.exp();
        total += term;
        k += 1;
        log_term += ln_mean - (k as f64).ln();
        if (k as f64) > mean && term < total * 1e-17 {
            break;
        }
        if k > n + 100_000 {
            break;
        }
    }
    total.min(1.0)
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn check_poisson_tail(z: Complex64, trunc: &TruncationPolicy) -> Result<()> {
    let tail = poisson_tail(z.norm_sqr(), trunc.n_max());
    if tail > trunc.tail_tol() {
        return Err(CsError::TruncationInsufficient {
            tail,
            tol: trunc.tail_tol(),
            n_max: trunc.n_max(),
        });
    }
    Ok(())
}

/// `exp(z a† - z̄ a)` on the truncated space.
pub fn displacement(z: Complex64, trunc: TruncationPolicy) -> Result<FockOperator> {
    check_poisson_tail(z, &trunc)?;
    displacement_unchecked(z, trunc)
}

pub(crate) fn displacement_unchecked(z: Complex64, trunc: TruncationPolicy) -> Result<FockOperator> {
    let a = ladder_lowering(trunc).into_matrix();
    let gen = a.adjoint() * z - a * z.conj();
    Ok(FockOperator {
        matrix: linalg::expm(&gen)?,
        structure: Structure::General,
        trunc,
    })
}

/// Canonical coherent state `e^{-|z|²/2} Σ zⁿ/√n! φ_n`.
pub fn ccs(z: Complex64, trunc: TruncationPolicy) -> Result<FockVector> {
    check_poisson_tail(z, &trunc)?;
    FockVector {
        coeffs: ccs_coeffs(z, trunc.n_max()),
        trunc,
        normalized: false,
    }
    .into_normalized()
}

pub(crate) fn ccs_coeffs(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut c = Complex64::new((-z.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        if k > 0 {
            c = c * z / (k as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Evaluates `Σ coeffs[n] h_n(x)` with orthonormal Hermite functions
/// `h_{n+1} = x √(2/(n+1)) h_n - √(n/(n+1)) h_{n-1}`.
pub fn position_wavefunction(v: &FockVector, xs: &[f64]) -> Result<Vec<Complex64>> {
    let n_max = v.coeffs.len();
    if n_max > MAX_HERMITE_ORDER {
        return Err(CsError::GridOverflow {
            x: f64::NAN,
            n_max,
        });
    }
    xs.iter()
        .map(|&x| {
            let h = hermite_functions(x, n_max)?;
            Ok(h.iter().zip(&v.coeffs).map(|(hn, c)| c * *hn).sum())
        })
        .collect()
}

/// Orthonormal Hermite functions `h_0(x) .. h_{count-1}(x)`.
pub fn hermite_functions(x: f64, count: usize) -> Result<Vec<f64>> {
    // e^{-x²/2} underflows past |x| ~ 37.6, after which the recurrence
    // would return zeros for states that are not negligible there
    if !x.is_finite() || x * x / 2.0 > 700.0 || count > MAX_HERMITE_ORDER {
        return Err(CsError::GridOverflow { x, n_max: count });
    }
    let mut h = Vec::with_capacity(count);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    h.push(h0);
    if count > 1 {
        h.push(std::f64::consts::SQRT_2 * x * h0);
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h.truncate(count);
    Ok(h)
}

/// Phase of the truncated Weyl relation `D(z₁) D(z₂) = phase · D(z₁ + z₂)`.
pub fn weyl_phase(z1: Complex64, z2: Complex64) -> Complex64 {
    (I * (z1 * z2.conj()).im).exp()
}

/// Leakage-based block for identities between displacement-type exponentials:
/// columns whose amplitude in the last `edge_margin + 1` rows stays below
/// `√tail_tol` in every listed displacement.
pub fn displacement_block(zs: &[Complex64], trunc: TruncationPolicy) -> Result<usize> {
    let mut block = trunc.interior(1);
    let tol = trunc.tail_tol().sqrt();
    for &z in zs {
        let d = displacement_unchecked(z, trunc)?;
        block = block.min(linalg::leakage_block(d.matrix(), trunc.edge_margin() + 1, tol));
    }
    Ok(block.max(1))
}
