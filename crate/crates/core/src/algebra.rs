//! Deformed ladder operators `A = a f(N)`, `A′ = a f(N)⁻¹`, their commutators,
//! deformed-oscillator detection, the non-unitary displacements
//! `V(z) = exp(z A′† - z̄ A)` and `V′(z) = exp(z A† - z̄ A′)`, and the
//! photon-added / binomial special cases.
//!
//! With `T = diag t(n)`, the truncated generators satisfy
//! `z A′† - z̄ A = T⁻¹ (z a† - z̄ a) T` exactly, so `V = T⁻¹ D T` and
//! `V′ = T D T⁻¹` hold in the truncation as well. The phase in the projective
//! law is therefore the one of the canonical displacements,
//! `V(z₁) V(z₂) = exp(i Im(z₁ z̄₂)) V(z₁ + z₂)`.

use num_complex::Complex64;

use crate::error::{CsError, Result};
use crate::families::{self, EntireSeries, FamilyDescriptor};
use crate::fock::{self, FockOperator, FockVector, Structure, TruncationPolicy};
use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};
use crate::nonlinearity::NonlinearitySpec;
use crate::rescaling::{self, domain_radius, metric_diagonal};

#[derive(Debug, Clone, PartialEq)]
pub enum QuadKind {
    Nonlinear(NonlinearitySpec),
    /// `A = a - λI`, `A′ = a + λI` (photon-added case with `G = 1`).
    Shifted(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformedQuad {
    pub a: FockOperator,
    pub a_dag: FockOperator,
    pub a_prime: FockOperator,
    pub a_prime_dag: FockOperator,
    pub kind: QuadKind,
}

pub fn build_quad(spec: &NonlinearitySpec, trunc: TruncationPolicy) -> Result<DeformedQuad> {
    let n = trunc.n_max();
    let f = spec.f_values(n - 1)?;
    let mut a = CMatrix::zeros(n, n);
    let mut ap = CMatrix::zeros(n, n);
    for k in 1..n {
        let s = (k as f64).sqrt();
        a[(k - 1, k)] = Complex64::new(s * f[k - 1], 0.0);
        ap[(k - 1, k)] = Complex64::new(s / f[k - 1], 0.0);
    }
    let a = FockOperator::new(a, Structure::Lowering, trunc)?;
    let a_prime = FockOperator::new(ap, Structure::Lowering, trunc)?;
    Ok(DeformedQuad {
        a_dag: a.dagger(),
        a_prime_dag: a_prime.dagger(),
        a,
        a_prime,
        kind: QuadKind::Nonlinear(spec.clone()),
    })
}

pub fn build_shifted_quad(lambda: f64, trunc: TruncationPolicy) -> Result<DeformedQuad> {
    if !lambda.is_finite() {
        return Err(CsError::InvalidParameter(format!("lambda = {lambda} is not finite")));
    }
    let n = trunc.n_max();
    let a = fock::ladder_lowering(trunc).into_matrix();
    let shift = CMatrix::identity(n, n) * Complex64::new(lambda, 0.0);
    let a_op = FockOperator::general(&a - &shift, trunc)?;
    let ap_op = FockOperator::general(&a + &shift, trunc)?;
    Ok(DeformedQuad {
        a_dag: a_op.dagger(),
        a_prime_dag: ap_op.dagger(),
        a: a_op,
        a_prime: ap_op,
        kind: QuadKind::Shifted(lambda),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorCheck {
    pub name: &'static str,
    /// Frobenius deviation from the closed form on the interior block.
    pub deviation: f64,
    /// Frobenius norm of the closed form on the same block.
    pub scale: f64,
}

impl CommutatorCheck {
    /// `deviation / max(1, scale)`.
    pub fn relative(&self) -> f64 {
        self.deviation / self.scale.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub checks: Vec<CommutatorCheck>,
    pub block: usize,
}

impl CommutatorReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }

    pub fn max_relative(&self) -> f64 {
        self.checks.iter().map(CommutatorCheck::relative).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.deviation)
    }
}

/// Closed forms of the six commutators on a `k x k` block.
fn closed_forms(kind: &QuadKind, k: usize) -> Result<[CMatrix; 6]> {
    let id = CMatrix::identity(k, k);
    let zero = CMatrix::zeros(k, k);
    let spec = match kind {
        QuadKind::Shifted(_) => {
            return Ok([id.clone(), id.clone(), id.clone(), id, zero.clone(), zero]);
        }
        QuadKind::Nonlinear(spec) => spec,
    };
    // f(1..=k+1) covers every index touched inside the block
    let fv = spec.f_values(k + 1)?;
    let f = |n: usize| fv[n - 1];
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut c_aa = CMatrix::zeros(k, k);
    let mut c_pp = CMatrix::zeros(k, k);
    let mut c_ap = CMatrix::zeros(k, k);
    let mut c_dd = CMatrix::zeros(k, k);
    for n in 0..k {
        let nf = n as f64;
        let (lo, lo_inv) = if n == 0 { (0.0, 0.0) } else { (f(n).powi(2) * nf, nf / f(n).powi(2)) };
        c_aa[(n, n)] = re(f(n + 1).powi(2) * (nf + 1.0) - lo);
        c_pp[(n, n)] = re((nf + 1.0) / f(n + 1).powi(2) - lo_inv);
        if n >= 2 {
            let r = f(n - 1) / f(n);
            c_ap[(n - 2, n)] = re((nf * (nf - 1.0)).sqrt() * (r - 1.0 / r));
        }
        if n + 2 < k {
            let r = f(n + 2) / f(n + 1);
            c_dd[(n + 2, n)] = re(((nf + 1.0) * (nf + 2.0)).sqrt() * (r - 1.0 / r));
        }
    }
    Ok([id.clone(), id, c_aa, c_pp, c_ap, c_dd])
}

pub const COMMUTATOR_NAMES: [&str; 6] = [
    "[A,A'+]",
    "[A',A+]",
    "[A,A+]",
    "[A',A'+]",
    "[A,A']",
    "[A+,A'+]",
];

/// Computes `[A,A′†]`, `[A′,A†]`, `[A,A†]`, `[A′,A′†]`, `[A,A′]`, `[A†,A′†]`
/// and compares each with its closed form on the interior block.
pub fn commutator_suite(quad: &DeformedQuad, trunc: TruncationPolicy) -> Result<CommutatorReport> {
    let k = trunc.interior(1);
    let (a, ad) = (quad.a.matrix(), quad.a_dag.matrix());
    let (ap, apd) = (quad.a_prime.matrix(), quad.a_prime_dag.matrix());
    let computed = [
        linalg::commutator(a, apd),
        linalg::commutator(ap, ad),
        linalg::commutator(a, ad),
        linalg::commutator(ap, apd),
        linalg::commutator(a, ap),
        linalg::commutator(ad, apd),
    ];
    let expected = closed_forms(&quad.kind, k)?;
    let checks = COMMUTATOR_NAMES
        .iter()
        .zip(computed.iter().zip(expected.iter()))
        .map(|(name, (c, e))| CommutatorCheck {
            name,
            deviation: (c.view((0, 0), (k, k)) - e).norm(),
            scale: e.norm(),
        })
        .collect();
    Ok(CommutatorReport { checks, block: k })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraReport {
    pub lambda_fit: f64,
    pub c_diag: Vec<f64>,
    /// Off-diagonal part of `AA† - λA†A` on the interior block.
    pub residual_offdiag: f64,
    /// Variation of the fitted `C(N)` along the diagonal,
    /// `‖Δ(diag(AA†) - λ diag(A†A))‖`.
    pub residual_fit: f64,
    /// Largest diagonal entry of `AA†` on the block, the natural magnitude of
    /// the residuals.
    pub scale: f64,
}

/// Fits `AA† - λ A†A = C(N)` with scalar `λ` by one-dimensional least
/// squares: against the off-diagonal part of `A†A` when it has one, otherwise
/// against the forward differences of the diagonals (making `C(N)` as
/// constant as possible).
pub fn detect_deformed_algebra(
    a: &FockOperator,
    a_dag: &FockOperator,
    trunc: TruncationPolicy,
) -> Result<AlgebraReport> {
    let m = a.matrix();
    let n = m.nrows();
    for c in 0..n {
        for r in c + 1..n {
            if m[(r, c)] != ZERO {
                return Err(CsError::PreconditionViolated(
                    "A must not have entries below the diagonal".into(),
                ));
            }
        }
    }
    let k = trunc.interior(1);
    let x = (a.matrix() * a_dag.matrix()).view((0, 0), (k, k)).into_owned();
    let y = (a_dag.matrix() * a.matrix()).view((0, 0), (k, k)).into_owned();
    let off = |m: &CMatrix| {
        let mut o = m.clone();
        o.fill_diagonal(ZERO);
        o
    };
    let (x_off, y_off) = (off(&x), off(&y));
    let xd: Vec<f64> = (0..k).map(|i| x[(i, i)].re).collect();
    let yd: Vec<f64> = (0..k).map(|i| y[(i, i)].re).collect();
    let diff = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] - w[0]).collect() };
    let (dx, dy) = (diff(&xd), diff(&yd));
    let scale = y.norm().max(f64::MIN_POSITIVE);
    let lambda = if y_off.norm() > 1e-12 * scale {
        linalg::inner(y_off.as_slice(), x_off.as_slice()).re / y_off.norm_squared()
    } else {
        let dyy: f64 = dy.iter().map(|v| v * v).sum();
        if dyy.sqrt() <= 1e-12 * scale {
            return Err(CsError::Degenerate(
                "A†A is a multiple of the identity; fix λ by hand".into(),
            ));
        }
        dx.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>() / dyy
    };
    let resid = &x - &y * Complex64::new(lambda, 0.0);
    let c_diag: Vec<f64> = (0..k).map(|i| resid[(i, i)].re).collect();
    let residual_fit = dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(AlgebraReport {
        lambda_fit: lambda,
        c_diag,
        residual_offdiag: off(&resid).norm(),
        residual_fit,
        scale: xd.iter().cloned().fold(0.0, f64::max),
    })
}

/// Which of the two non-unitary displacement families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// `V(z) = exp(z A′† - z̄ A)` on the primal domain.
    Primal,
    /// `V′(z) = exp(z A† - z̄ A′)` on the dual domain.
    Dual,
}

fn check_domain(spec: &NonlinearitySpec, rep: Representation, z: Complex64) -> Result<()> {
    let (l, ld) = domain_radius(spec);
    let radius = match rep {
        Representation::Primal => l,
        Representation::Dual => ld,
    };
    if radius.contains(z.norm(), families::DEFAULT_EPSILON) {
        Ok(())
    } else {
        Err(CsError::OutsideDomain {
            z,
            radius: radius.finite().unwrap_or(f64::INFINITY),
        })
    }
}

fn deformed_displacement(
    spec: &NonlinearitySpec,
    rep: Representation,
    z: Complex64,
    trunc: TruncationPolicy,
) -> Result<FockOperator> {
    check_domain(spec, rep, z)?;
    // the matching coherent state must fit in the truncation
    let fam = match rep {
        Representation::Primal => FamilyDescriptor::Rescaled(spec.clone()),
        Representation::Dual => FamilyDescriptor::Rescaled(spec.reciprocal()),
    };
    families::evaluate(&fam, z, trunc)?;
    let quad = build_quad(spec, trunc)?;
    let (raise, lower) = match rep {
        Representation::Primal => (quad.a_prime_dag.matrix(), quad.a.matrix()),
        Representation::Dual => (quad.a_dag.matrix(), quad.a_prime.matrix()),
    };
    let gen = raise * z - lower * z.conj();
    FockOperator::general(linalg::expm(&gen)?, trunc)
}

pub fn v_operator(z: Complex64, spec: &NonlinearitySpec, trunc: TruncationPolicy) -> Result<FockOperator> {
    deformed_displacement(spec, Representation::Primal, z, trunc)
}

pub fn v_prime_operator(z: Complex64, spec: &NonlinearitySpec, trunc: TruncationPolicy) -> Result<FockOperator> {
    deformed_displacement(spec, Representation::Dual, z, trunc)
}

/// A deviation measured on a leading block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockDeviation {
    pub deviation: f64,
    /// Frobenius norm of the reference operator on the block.
    pub scale: f64,
    pub block: usize,
}

impl BlockDeviation {
    /// `deviation / max(1, scale)`.
    pub fn relative(&self) -> f64 {
        self.deviation / self.scale.max(1.0)
    }
}

/// `‖V(z₁)V(z₂) - e^{i Im(z₁ z̄₂)} V(z₁+z₂)‖` on a leading block. Without an
/// explicit block, the block is where the canonical displacements of
/// `z₁, z₂, z₁+z₂` have not reached the truncation edge.
pub fn projective_law_check_with(
    spec: &NonlinearitySpec,
    z1: Complex64,
    z2: Complex64,
    rep: Representation,
    trunc: TruncationPolicy,
    block: Option<usize>,
) -> Result<BlockDeviation> {
    for z in [z1, z2, z1 + z2] {
        check_domain(spec, rep, z)?;
    }
    let v1 = deformed_displacement(spec, rep, z1, trunc)?;
    let v2 = deformed_displacement(spec, rep, z2, trunc)?;
    let v12 = deformed_displacement(spec, rep, z1 + z2, trunc)?;
    let block = match block {
        Some(b) => b.min(trunc.n_max()),
        None => fock::displacement_block(&[z1, z2, z1 + z2], trunc)?,
    };
    let lhs = v1.matrix() * v2.matrix();
    let rhs = v12.matrix() * fock::weyl_phase(z1, z2);
    Ok(BlockDeviation {
        deviation: linalg::interior_distance(&lhs, &rhs, block),
        scale: linalg::interior_deviation(&rhs, block),
        block,
    })
}

pub fn projective_law_check(
    spec: &NonlinearitySpec,
    z1: Complex64,
    z2: Complex64,
    trunc: TruncationPolicy,
) -> Result<f64> {
    Ok(projective_law_check_with(spec, z1, z2, Representation::Primal, trunc, None)?.deviation)
}

/// Contragredience `V′(z) = (V(z)⁻¹)†` on a leading block (see
/// [`projective_law_check_with`]). The inverse is taken as `V(-z)`, which the
/// projective law makes exact, instead of a numerical inversion whose
/// conditioning grows with the spread of `t(n)`; the reported deviation is
/// the larger of `‖V(z)V(-z) - I‖` and `‖V′(z) - V(-z)†‖`.
pub fn contragredience_check_with(
    spec: &NonlinearitySpec,
    z: Complex64,
    trunc: TruncationPolicy,
    block: Option<usize>,
) -> Result<BlockDeviation> {
    let v = v_operator(z, spec, trunc)?;
    let v_inv = v_operator(-z, spec, trunc)?;
    let vp = v_prime_operator(z, spec, trunc)?;
    let n = trunc.n_max();
    let block = match block {
        Some(b) => b.min(n),
        None => fock::displacement_block(&[z], trunc)?,
    };
    let product = v.matrix() * v_inv.matrix();
    let inverse_defect = linalg::interior_distance(&product, &CMatrix::identity(n, n), block);
    let reference = v_inv.matrix().adjoint();
    Ok(BlockDeviation {
        deviation: inverse_defect.max(linalg::interior_distance(vp.matrix(), &reference, block)),
        scale: linalg::interior_deviation(&reference, block),
        block,
    })
}

pub fn contragredience_check(spec: &NonlinearitySpec, z: Complex64, trunc: TruncationPolicy) -> Result<f64> {
    Ok(contragredience_check_with(spec, z, trunc, None)?.deviation)
}

/// `T⁻¹ D(z) φ_0 = T⁻¹ η_z` for a positive diagonal `T⁻¹`. The result must
/// carry negligible weight in its last coefficient.
pub fn general_nonlinear_cs(t_inv: &FockOperator, z: Complex64, trunc: TruncationPolicy) -> Result<FockVector> {
    let d = metric_diagonal(t_inv)?;
    let eta = fock::ccs(z, trunc)?;
    let coeffs: Vec<Complex64> = eta.coeffs().iter().zip(&d).map(|(c, t)| c * *t).collect();
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let last = coeffs.last().map(|c| c.norm_sqr()).unwrap_or(0.0);
    if total > 0.0 && last / total > trunc.tail_tol() {
        return Err(CsError::TruncationInsufficient {
            tail: last / total,
            tol: trunc.tail_tol(),
            n_max: trunc.n_max(),
        });
    }
    FockVector::new(coeffs, trunc)
}

/// `Σ_k (λ X)^k / k!` for nilpotent `X` (exact in the truncation).
fn nilpotent_exp(x: &CMatrix, lambda: f64) -> CMatrix {
    let n = x.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..n {
        term = &term * x * Complex64::new(lambda / k as f64, 0.0);
        sum += &term;
    }
    sum
}

/// `T⁻¹ = e^{λ a†} G(a)` on the truncation. Both factors are triangular and
/// their product only involves indices below the larger of row and column,
/// so every entry is exact.
pub fn example1_t_inverse(lambda: f64, g: &EntireSeries, trunc: TruncationPolicy) -> CMatrix {
    let a = fock::ladder_lowering(trunc).into_matrix();
    nilpotent_exp(&a.adjoint(), lambda) * g.apply_to_matrix(&a)
}

/// `‖[a, T⁻¹] - λ T⁻¹‖ / ‖T⁻¹‖` on the interior block for
/// `T⁻¹ = e^{λ a†} G(a)`.
pub fn example1_commutation_check(lambda: f64, g: &EntireSeries, trunc: TruncationPolicy) -> Result<f64> {
    let t_inv = example1_t_inverse(lambda, g, trunc);
    if t_inv.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(CsError::Overflow {
            n: trunc.n_max(),
            log_value: f64::INFINITY,
        });
    }
    let a = fock::ladder_lowering(trunc).into_matrix();
    let dev = linalg::commutator(&a, &t_inv) - &t_inv * Complex64::new(lambda, 0.0);
    let k = trunc.interior(1);
    let scale = linalg::interior_deviation(&t_inv, k).max(1.0);
    Ok(linalg::interior_deviation(&dev, k) / scale)
}

/// The two Example-1 special cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftKind {
    /// `T⁻¹ = e^{λ a†}`: `a_F = a - λ`, `a†_F = a†`.
    PhotonAdded(f64),
    /// `T⁻¹ = e^{μ a}`: `a_F = a`, `a†_F = a† + μ`.
    Binomial(f64),
}

/// Deviations of `T⁻¹ a T` and `T⁻¹ a† T` from their closed forms on the
/// interior block.
pub fn transformed_ladder_check(kind: ShiftKind, trunc: TruncationPolicy) -> (f64, f64) {
    let n = trunc.n_max();
    let a = fock::ladder_lowering(trunc).into_matrix();
    let ad = a.adjoint();
    let id = CMatrix::identity(n, n);
    let (t_inv, t, expect_a, expect_ad) = match kind {
        ShiftKind::PhotonAdded(l) => (
            nilpotent_exp(&ad, l),
            nilpotent_exp(&ad, -l),
            &a - &id * Complex64::new(l, 0.0),
            ad.clone(),
        ),
        ShiftKind::Binomial(m) => (
            nilpotent_exp(&a, m),
            nilpotent_exp(&a, -m),
            a.clone(),
            &ad + &id * Complex64::new(m, 0.0),
        ),
    };
    let k = trunc.interior(1);
    let a_f = &t_inv * &a * &t;
    let ad_f = &t_inv * &ad * &t;
    (
        linalg::interior_distance(&a_f, &expect_a, k),
        linalg::interior_distance(&ad_f, &expect_ad, k),
    )
}

/// Maximum entrywise deviation of `φ^pa_{λ,n} = e^{λ²/2} D(λ) φ^bin_{λ,n}`
/// over `n < count`, with `D(λ) = e^{-i√2 λ P}` applied in an enlarged space.
pub fn photon_added_binomial_relation_check(lambda: f64, count: usize, trunc: TruncationPolicy) -> Result<f64> {
    let n = trunc.n_max();
    let ext = trunc.resized((2 * n).max(n + 64))?;
    let d = fock::displacement(Complex64::new(lambda, 0.0), ext)?;
    let scale = Complex64::new((lambda * lambda / 2.0).exp(), 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..count.min(n) {
        let bin = families::binomial_basis(lambda, k, ext)?;
        let lhs = d.matrix() * bin.to_column() * scale;
        let pa = families::photon_added_basis(lambda, k, trunc)?;
        for (i, c) in pa.coeffs().iter().enumerate() {
            worst = worst.max((lhs[i] - c).norm());
        }
    }
    Ok(worst)
}

/// Maximum deviation of `e^{λ²/2} ⟨φ^pa_n | e^{-√2 λ Q} φ^pa_m⟩` from `δ_nm`
/// over `n, m < count`, evaluated in an enlarged space.
pub fn photon_added_orthonormality_check(lambda: f64, count: usize, trunc: TruncationPolicy) -> Result<f64> {
    let n = trunc.n_max();
    let ext = trunc.resized((2 * n).max(n + 64))?;
    let (q, _) = fock::position_momentum(ext);
    let metric = linalg::expm(&(q.into_matrix() * Complex64::new(-(2f64.sqrt()) * lambda, 0.0)))?
        * Complex64::new((lambda * lambda / 2.0).exp(), 0.0);
    let vecs: Vec<CVector> = (0..count.min(n))
        .map(|k| families::photon_added_basis(lambda, k, ext).map(|v| v.to_column()))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, x) in vecs.iter().enumerate() {
        let fx = &metric * x;
        for (j, y) in vecs.iter().enumerate() {
            let g = y.dotc(&fx);
            let expect = if i == j { ONE } else { ZERO };
            worst = worst.max((g - expect).norm());
        }
    }
    Ok(worst)
}

/// `‖a η - (z+λ) η‖ / ‖η‖` on the interior rows for a photon-added state.
pub fn photon_added_eigen_residual(fam: &FamilyDescriptor, z: Complex64, trunc: TruncationPolicy) -> Result<f64> {
    let lambda = match fam {
        FamilyDescriptor::PhotonAdded { lambda, .. } => *lambda,
        other => {
            return Err(CsError::Unsupported(format!(
                "eigenrelation applies to photon-added families, not {}",
                other.name()
            )))
        }
    };
    let eta = families::evaluate(fam, z, trunc)?;
    let col = eta.vector.to_column();
    let a = fock::ladder_lowering(trunc).into_matrix();
    let res = &a * &col - &col * (z + lambda);
    let k = trunc.interior(1);
    let num = res.rows(0, k).norm();
    Ok(num / col.norm())
}

/// Collinearity residual of `V(z) φ_0` against the rescaled coherent state.
pub fn v_collinearity_check(spec: &NonlinearitySpec, z: Complex64, trunc: TruncationPolicy) -> Result<f64> {
    let v = v_operator(z, spec, trunc)?;
    let col: Vec<Complex64> = v.matrix().column(0).iter().cloned().collect();
    let eta = families::evaluate(&FamilyDescriptor::Rescaled(spec.clone()), z, trunc)?;
    let k = trunc.interior(1);
    Ok(linalg::collinearity_residual(&col[..k], &eta.vector.coeffs()[..k]))
}

/// Frobenius norm of `V(z)ᴴ V(z) - I` on the interior block.
pub fn v_unitarity_defect(spec: &NonlinearitySpec, z: Complex64, trunc: TruncationPolicy) -> Result<f64> {
    let v = v_operator(z, spec, trunc)?;
    let n = trunc.n_max();
    let g = v.matrix().adjoint() * v.matrix() - CMatrix::identity(n, n);
    Ok(linalg::interior_deviation(&g, fock::displacement_block(&[z], trunc)?))
}

/// `T⁻¹` of a rescaling spec as an operator, for [`general_nonlinear_cs`].
pub fn rescaling_inverse(spec: &NonlinearitySpec, trunc: TruncationPolicy) -> Result<FockOperator> {
    Ok(rescaling::build_t_inverse(&rescaling::t_from_f(spec, trunc)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trunc(n: usize) -> TruncationPolicy {
        TruncationPolicy::with_dim(n).unwrap()
    }

    #[test]
    fn canonical_quad_is_plain_ladder() {
        let t = trunc(10);
        let q = build_quad(&NonlinearitySpec::Canonical, t).unwrap();
        let a = fock::ladder_lowering(t);
        assert_eq!(q.a.matrix(), a.matrix());
        assert_eq!(q.a_prime.matrix(), a.matrix());
        assert_eq!(q.a_dag.matrix(), &a.matrix().adjoint());
    }

    #[test]
    fn gp_quad_entries() {
        let t = trunc(8);
        let q = build_quad(&NonlinearitySpec::gp(1.0).unwrap(), t).unwrap();
        for n in 1..8 {
            let expect = (n as f64).sqrt() / ((n + 1) as f64).sqrt();
            assert!((q.a.matrix()[(n - 1, n)].re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn canonical_commutators() {
        let t = trunc(30);
        let q = build_quad(&NonlinearitySpec::Canonical, t).unwrap();
        let r = commutator_suite(&q, t).unwrap();
        assert!(r.max_deviation() < 1e-12, "{r:?}");
    }

    #[test]
    fn q_osc_commutators() {
        let t = trunc(60);
        let q = build_quad(&NonlinearitySpec::q_osc(0.5).unwrap(), t).unwrap();
        let r = commutator_suite(&q, t).unwrap();
        assert!(r.get("[A,A'+]").unwrap() < 1e-10);
        assert!(r.max_deviation() < 1e-9, "{r:?}");
    }

    #[test]
    fn shifted_quad_commutators() {
        let t = trunc(20);
        let q = build_shifted_quad(0.7, t).unwrap();
        assert!(commutator_suite(&q, t).unwrap().max_deviation() < 1e-12);
    }

    #[test]
    fn detection_on_canonical_and_q_osc() {
        let t = trunc(40);
        let q = build_quad(&NonlinearitySpec::Canonical, t).unwrap();
        let r = detect_deformed_algebra(&q.a, &q.a_dag, t).unwrap();
        assert!((r.lambda_fit - 1.0).abs() < 1e-13);
        assert!(r.c_diag.iter().all(|c| (c - 1.0).abs() < 1e-12));

        let q = build_quad(&NonlinearitySpec::q_osc(0.5).unwrap(), t).unwrap();
        let r = detect_deformed_algebra(&q.a, &q.a_dag, t).unwrap();
        assert!((r.lambda_fit - 0.5).abs() < 1e-10);
        assert!(r.residual_offdiag < 1e-10 && r.residual_fit < 1e-10);
    }

    #[test]
    fn detection_on_shifted_quad() {
        let t = trunc(30);
        let q = build_shifted_quad(0.4, t).unwrap();
        let r = detect_deformed_algebra(&q.a, &q.a_dag, t).unwrap();
        assert!((r.lambda_fit - 1.0).abs() < 1e-12);
        assert!(r.c_diag.iter().all(|c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scalar_a_dag_a_is_degenerate() {
        let t = trunc(6);
        let z = FockOperator::general(CMatrix::zeros(6, 6), t).unwrap();
        assert!(matches!(detect_deformed_algebra(&z, &z, t), Err(CsError::Degenerate(_))));
    }

    #[test]
    fn v_at_zero_is_identity() {
        let t = trunc(20);
        let v = v_operator(ZERO, &NonlinearitySpec::q_osc(0.5).unwrap(), t).unwrap();
        assert_eq!(v.matrix(), &CMatrix::identity(20, 20));
        assert_eq!(contragredience_check(&NonlinearitySpec::q_osc(0.5).unwrap(), ZERO, t).unwrap(), 0.0);
    }

    #[test]
    fn v_outside_domain() {
        let err = v_operator(Complex64::new(1.2, 0.0), &NonlinearitySpec::gp(1.0).unwrap(), trunc(30)).unwrap_err();
        assert!(matches!(err, CsError::OutsideDomain { .. }));
    }

    #[test]
    fn projective_law_with_zero_second_argument() {
        let spec = NonlinearitySpec::q_osc(0.5).unwrap();
        let d = projective_law_check(&spec, Complex64::new(0.2, 0.1), ZERO, trunc(40)).unwrap();
        assert!(d < 1e-13);
    }

    #[test]
    fn opposite_phase_sign_fails() {
        // the law only holds with exp(+i Im(z₁ z̄₂)); the conjugate phase is off by O(1)
        let t = trunc(60);
        let (z1, z2) = (Complex64::new(0.5, 0.2), Complex64::new(-0.1, 0.6));
        let d1 = fock::displacement(z1, t).unwrap();
        let d2 = fock::displacement(z2, t).unwrap();
        let d12 = fock::displacement(z1 + z2, t).unwrap();
        let k = fock::displacement_block(&[z1, z2, z1 + z2], t).unwrap();
        let lhs = d1.matrix() * d2.matrix();
        let good = linalg::interior_distance(&lhs, &(d12.matrix() * fock::weyl_phase(z1, z2)), k);
        let bad = linalg::interior_distance(&lhs, &(d12.matrix() * fock::weyl_phase(z1, z2).conj()), k);
        assert!(good < 1e-10, "{good}");
        assert!(bad > 0.1, "{bad}");
    }

    #[test]
    fn example1_commutation_trivial_case() {
        assert_eq!(example1_commutation_check(0.0, &EntireSeries::one(), trunc(20)).unwrap(), 0.0);
    }

    #[test]
    fn transformed_ladders() {
        let t = trunc(30);
        let (da, dad) = transformed_ladder_check(ShiftKind::PhotonAdded(0.6), t);
        assert!(da < 1e-10 && dad < 1e-10, "{da} {dad}");
        let (da, dad) = transformed_ladder_check(ShiftKind::Binomial(-0.4), t);
        assert!(da < 1e-10 && dad < 1e-10, "{da} {dad}");
    }

    #[test]
    fn general_cs_with_identity_is_ccs() {
        let t = trunc(30);
        let z = Complex64::new(0.5, -0.5);
        let v = general_nonlinear_cs(&FockOperator::identity(t), z, t).unwrap();
        assert_eq!(v.coeffs(), fock::ccs(z, t).unwrap().coeffs());
    }
}
