//! Diagonal rescaling `T = Σ t(n) |φ_n⟩⟨φ_n|`, the metric `F = T²`, deformed
//! inner products, `F`-adjoints, norm orderings and convergence radii.

use num_complex::Complex64;

use crate::error::{CsError, Result};
use crate::fock::{FockOperator, FockVector, TruncationPolicy};
use crate::linalg::CMatrix;
use crate::nonlinearity::NonlinearitySpec;

/// A nonnegative real that may be infinite; reports never carry a
/// floating-point infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(*x),
            Extended::Infinite => None,
        }
    }

    /// `|z| <= (1 - eps) L` style membership test.
    pub fn contains(&self, r: f64, eps: f64) -> bool {
        match self {
            Extended::Finite(l) => r <= (1.0 - eps) * l,
            Extended::Infinite => true,
        }
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x:e}"),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescalingOperator {
    t_values: Vec<f64>,
    trunc: TruncationPolicy,
}

impl RescalingOperator {
    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn trunc(&self) -> &TruncationPolicy {
        &self.trunc
    }
}

/// Cumulative products `t(n) = f(n) t(n-1)`, `t(0) = 1`, accumulated in log
/// space.
pub fn t_from_f(spec: &NonlinearitySpec, trunc: TruncationPolicy) -> Result<RescalingOperator> {
    let ln_t = spec.ln_t_values(trunc.n_max())?;
    let t_values = ln_t
        .iter()
        .enumerate()
        .map(|(n, l)| {
            let t = l.exp();
            if t == 0.0 || !t.is_finite() {
                Err(CsError::Overflow { n, log_value: *l })
            } else {
                Ok(t)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RescalingOperator { t_values, trunc })
}

fn diag(values: impl Iterator<Item = f64>, trunc: TruncationPolicy) -> FockOperator {
    let v: Vec<f64> = values.collect();
    FockOperator::diagonal_real(&v, trunc).expect("length equals n_max")
}

pub fn build_t(resc: &RescalingOperator) -> FockOperator {
    diag(resc.t_values.iter().cloned(), resc.trunc)
}

pub fn build_t_inverse(resc: &RescalingOperator) -> FockOperator {
    diag(resc.t_values.iter().map(|t| 1.0 / t), resc.trunc)
}

pub fn build_f(resc: &RescalingOperator) -> FockOperator {
    diag(resc.t_values.iter().map(|t| t * t), resc.trunc)
}

pub fn build_f_inverse(resc: &RescalingOperator) -> FockOperator {
    diag(resc.t_values.iter().map(|t| 1.0 / (t * t)), resc.trunc)
}

/// Diagonal of a positive diagonal metric.
pub(crate) fn metric_diagonal(metric: &FockOperator) -> Result<Vec<f64>> {
    let m = metric.matrix();
    let n = m.nrows();
    for c in 0..n {
        for r in 0..n {
            if r != c && m[(r, c)] != Complex64::new(0.0, 0.0) {
                return Err(CsError::PreconditionViolated(
                    "metric must be diagonal".into(),
                ));
            }
        }
    }
    (0..n)
        .map(|k| {
            let v = m[(k, k)];
            if v.im != 0.0 || !(v.re > 0.0) || !v.re.is_finite() {
                Err(CsError::NonPositiveMetric { n: k, value: v.re })
            } else {
                Ok(v.re)
            }
        })
        .collect()
}

/// `⟨x | F y⟩ = Σ x̄_n F_nn y_n`.
pub fn deformed_inner(x: &FockVector, y: &FockVector, metric: &FockOperator) -> Result<Complex64> {
    let d = metric_diagonal(metric)?;
    if x.coeffs().len() != d.len() || y.coeffs().len() != d.len() {
        return Err(CsError::DimensionMismatch {
            expected: d.len(),
            found: x.coeffs().len().max(y.coeffs().len()),
        });
    }
    Ok(x.coeffs()
        .iter()
        .zip(y.coeffs())
        .zip(&d)
        .map(|((a, b), w)| a.conj() * b * *w)
        .sum())
}

/// `B*_F = F⁻¹ Bᴴ F`.
pub fn adjoint_in_f(b: &FockOperator, metric: &FockOperator) -> Result<FockOperator> {
    let d = metric_diagonal(metric)?;
    let bh = b.matrix().adjoint();
    let n = d.len();
    let m = CMatrix::from_fn(n, n, |r, c| bh[(r, c)] * (d[c] / d[r]));
    FockOperator::new(m, b.dagger().structure(), *b.trunc())
}

/// Returns `(‖v‖_{F⁻¹}, ‖v‖, ‖v‖_F)`; requires every `F_nn >= 1`, under which
/// the three norms are ordered.
pub fn gelfand_norm_check(v: &FockVector, metric: &FockOperator) -> Result<(f64, f64, f64)> {
    let d = metric_diagonal(metric)?;
    if let Some((n, value)) = d.iter().enumerate().find(|(_, x)| **x < 1.0) {
        return Err(CsError::PreconditionViolated(format!(
            "norm ordering needs F >= 1, but F[{n},{n}] = {value}"
        )));
    }
    let mut sums = (0.0, 0.0, 0.0);
    for (c, w) in v.coeffs().iter().zip(&d) {
        let m = c.norm_sqr();
        sums.0 += m / w;
        sums.1 += m;
        sums.2 += m * w;
    }
    Ok((sums.0.sqrt(), sums.1.sqrt(), sums.2.sqrt()))
}

/// Closed-form radii `(L, L̃)` of the primal and dual series, from the
/// asymptotics of `f`. Specs without usable asymptotics (tables, the
/// standard trapped-ion form, which loses positivity at large `n`) report an
/// infinite radius and rely on the truncation tail check instead.
pub fn domain_radius(spec: &NonlinearitySpec) -> (Extended, Extended) {
    use Extended::{Finite, Infinite};
    match spec {
        NonlinearitySpec::Canonical => (Infinite, Infinite),
        NonlinearitySpec::SqrtN => (Infinite, Finite(1.0)),
        NonlinearitySpec::Gp { .. } => (Finite(1.0), Infinite),
        NonlinearitySpec::Bg { .. } => (Infinite, Finite(1.0)),
        NonlinearitySpec::QOsc { q } => {
            if (*q - 1.0).abs() < 1e-12 {
                (Infinite, Infinite)
            } else if *q < 1.0 {
                (Finite(1.0 / (1.0 - q).sqrt()), Infinite)
            } else {
                (Infinite, Finite(0.0))
            }
        }
        NonlinearitySpec::TrappedIon { variant, .. } => match variant {
            // f(n) = 1/(n+1): the ratio test diverges, so only z = 0 is allowed
            crate::nonlinearity::TrappedIonVariant::Verbatim => (Finite(0.0), Infinite),
            crate::nonlinearity::TrappedIonVariant::Standard => (Infinite, Infinite),
        },
        NonlinearitySpec::Hypergeometric { alpha, beta } => {
            let unit = |p: usize, q: usize| if p == q + 1 { Finite(1.0) } else { Infinite };
            (unit(alpha.len(), beta.len()), unit(beta.len(), alpha.len()))
        }
        NonlinearitySpec::Table(_) => (Infinite, Infinite),
        NonlinearitySpec::Reciprocal(inner) => {
            let (l, ld) = domain_radius(inner);
            (ld, l)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusReport {
    pub rho: Extended,
    pub radius: Extended,
    pub rho_dual: Extended,
    pub radius_dual: Extended,
    pub converged: bool,
    pub terms_used: usize,
}

/// Number of trailing ratio terms used by the radius estimator.
pub const RADIUS_TAIL_TERMS: usize = 32;

struct RatioFit {
    rho: Extended,
    radius: Extended,
    converged: bool,
}

/// Fits `s_n ≈ ρ + c/(n+1)` to the last terms of a ratio sequence. The
/// `1/(n+1)` term absorbs the leading correction, so sequences that decay
/// like `1/n` are recognized as `ρ = 0` instead of a small positive number.
fn fit_ratio_tail(ns: &[f64], s: &[f64], tol: f64) -> RatioFit {
    let k = s.len() as f64;
    let xs: Vec<f64> = ns.iter().map(|n| 1.0 / (n + 1.0)).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = s.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(s).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rho = my - slope * mx;
    let max_resid = xs
        .iter()
        .zip(s)
        .map(|(x, y)| (y - rho - slope * x).abs())
        .fold(0.0, f64::max);
    let scale = rho.abs().max(1.0);
    let converged = max_resid.is_finite() && max_resid < tol * scale && rho > -tol;
    if converged {
        if rho.abs() <= tol {
            RatioFit {
                rho: Extended::Finite(0.0),
                radius: Extended::Infinite,
                converged,
            }
        } else {
            RatioFit {
                rho: Extended::Finite(rho),
                radius: Extended::Finite(1.0 / rho.sqrt()),
                converged,
            }
        }
    } else {
        // report the last raw term rather than an extrapolation
        let last = *s.last().unwrap_or(&f64::NAN);
        let (rho, radius) = if last.is_finite() && last > 0.0 {
            (Extended::Finite(last), Extended::Finite(1.0 / last.sqrt()))
        } else if last.is_finite() {
            (Extended::Finite(0.0), Extended::Infinite)
        } else {
            (Extended::Infinite, Extended::Finite(0.0))
        };
        RatioFit {
            rho,
            radius,
            converged,
        }
    }
}

/// Estimates `ρ = lim [t(n)/t(n+1)]² / (n+1)` and its dual
/// `ρ̃ = lim [t(n+1)/t(n)]² / (n+1)` from the terms up to `n_probe`, with
/// radii `L = 1/√ρ` and `L̃ = 1/√ρ̃`.
pub fn convergence_radius(spec: &NonlinearitySpec, tol: f64, n_probe: usize) -> Result<RadiusReport> {
    if n_probe < RADIUS_TAIL_TERMS + 1 {
        return Err(CsError::InvalidParameter(format!(
            "n_probe must exceed {RADIUS_TAIL_TERMS}, got {n_probe}"
        )));
    }
    let start = n_probe - RADIUS_TAIL_TERMS;
    let mut ns = Vec::with_capacity(RADIUS_TAIL_TERMS);
    let mut primal = Vec::with_capacity(RADIUS_TAIL_TERMS);
    let mut dual = Vec::with_capacity(RADIUS_TAIL_TERMS);
    for n in start..n_probe {
        let f = spec.f(n + 1)?;
        let np1 = (n + 1) as f64;
        ns.push(n as f64);
        primal.push(1.0 / (f * f * np1));
        dual.push(f * f / np1);
    }
    let p = fit_ratio_tail(&ns, &primal, tol);
    let d = fit_ratio_tail(&ns, &dual, tol);
    Ok(RadiusReport {
        rho: p.rho,
        radius: p.radius,
        rho_dual: d.rho,
        radius_dual: d.radius,
        converged: p.converged && d.converged,
        terms_used: RADIUS_TAIL_TERMS,
    })
}
