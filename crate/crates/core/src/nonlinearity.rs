//! Nonlinearity sequences `f(n)`, `n >= 1`, and their cumulative products
//! `t(n) = f(n) f(n-1) ... f(1)` with `t(0) = 1`.

use std::fmt;

use crate::error::{CsError, Result};
use crate::special::laguerre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    ClosedForm,
    Tabulated,
}

/// Which trapped-ion formula to use.
///
/// `Verbatim` is `L⁰_n(η²) / ((n+1) L⁰_n(η²))`, which reduces to `1/(n+1)`;
/// `Standard` is `L¹_n(η²) / ((n+1) L⁰_n(η²))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrappedIonVariant {
    Verbatim,
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearitySpec {
    /// `f ≡ 1`.
    Canonical,
    /// `f(n) = √n`, so `t(n) = √(n!)`.
    SqrtN,
    /// `f(n) = 1 / √(2κ + n - 1)`.
    Gp { kappa: f64 },
    /// `f(n) = √(2κ + n - 1)`.
    Bg { kappa: f64 },
    /// `f(n)² = (1 - qⁿ) / (n (1 - q))`.
    QOsc { q: f64 },
    TrappedIon { eta: f64, variant: TrappedIonVariant },
    /// `f(n) = √(Π_j (β_j + n - 1) / Π_i (α_i + n - 1))`, so that
    /// `1 / t(n)² = Π (α_i)_n / Π (β_j)_n`.
    Hypergeometric { alpha: Vec<f64>, beta: Vec<f64> },
    /// `table[k] = f(k + 1)`; evaluation beyond the table is refused.
    Table(Vec<f64>),
    /// `1 / f(n)` of the wrapped spec.
    Reciprocal(Box<NonlinearitySpec>),
}

impl NonlinearitySpec {
    pub fn gp(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self::Gp { kappa })
    }

    pub fn bg(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(Self::Bg { kappa })
    }

    pub fn q_osc(q: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(CsError::InvalidParameter(format!(
                "q_osc needs q > 0, got {q}"
            )));
        }
        Ok(Self::QOsc { q })
    }

    pub fn trapped_ion(eta: f64, variant: TrappedIonVariant) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(CsError::InvalidParameter(format!(
                "trapped_ion needs eta > 0, got {eta}"
            )));
        }
        Ok(Self::TrappedIon { eta, variant })
    }

    pub fn hypergeometric(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        check_hypergeometric(&alpha, &beta)?;
        Ok(Self::Hypergeometric { alpha, beta })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(CsError::NonPositiveFactor { n: k + 1, value: *v });
        }
        Ok(Self::Table(values))
    }

    pub fn kind(&self) -> SpecKind {
        match self {
            Self::Table(_) => SpecKind::Tabulated,
            Self::Reciprocal(inner) => inner.kind(),
            _ => SpecKind::ClosedForm,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Canonical => "canonical".into(),
            Self::SqrtN => "sqrt_n".into(),
            Self::Gp { .. } => "gp".into(),
            Self::Bg { .. } => "bg".into(),
            Self::QOsc { .. } => "q_osc".into(),
            Self::TrappedIon { .. } => "trapped_ion".into(),
            Self::Hypergeometric { .. } => "hypergeometric".into(),
            Self::Table(_) => "table".into(),
            Self::Reciprocal(inner) => format!("reciprocal_{}", inner.name()),
        }
    }

    /// Named real parameters, in a fixed order.
    pub fn params(&self) -> Vec<(String, f64)> {
        match self {
            Self::Canonical | Self::SqrtN => vec![],
            Self::Gp { kappa } | Self::Bg { kappa } => vec![("kappa".into(), *kappa)],
            Self::QOsc { q } => vec![("q".into(), *q)],
            Self::TrappedIon { eta, variant } => vec![
                ("eta".into(), *eta),
                (
                    "standard".into(),
                    if *variant == TrappedIonVariant::Standard { 1.0 } else { 0.0 },
                ),
            ],
            Self::Hypergeometric { alpha, beta } => alpha
                .iter()
                .enumerate()
                .map(|(i, a)| (format!("alpha{}", i + 1), *a))
                .chain(beta.iter().enumerate().map(|(i, b)| (format!("beta{}", i + 1), *b)))
                .collect(),
            Self::Table(v) => vec![("len".into(), v.len() as f64)],
            Self::Reciprocal(inner) => inner.params(),
        }
    }

    /// `f(n)` for `n >= 1`, checked to be positive and finite.
    pub fn f(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(CsError::InvalidParameter(
                "the nonlinearity is defined for n >= 1".into(),
            ));
        }
        let value = self.f_raw(n)?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(CsError::NonPositiveFactor { n, value });
        }
        Ok(value)
    }

    fn f_raw(&self, n: usize) -> Result<f64> {
        let nf = n as f64;
        Ok(match self {
            Self::Canonical => 1.0,
            Self::SqrtN => nf.sqrt(),
            Self::Gp { kappa } => 1.0 / (2.0 * kappa + nf - 1.0).sqrt(),
            Self::Bg { kappa } => (2.0 * kappa + nf - 1.0).sqrt(),
            Self::QOsc { q } => q_number(*q, n).sqrt(),
            Self::TrappedIon { eta, variant } => {
                let x = eta * eta;
                let l0 = laguerre(0.0, n, x);
                let numerator = match variant {
                    TrappedIonVariant::Verbatim => l0,
                    TrappedIonVariant::Standard => laguerre(1.0, n, x),
                };
                numerator / ((nf + 1.0) * l0)
            }
            Self::Hypergeometric { alpha, beta } => {
                let num: f64 = beta.iter().map(|b| b + nf - 1.0).product();
                let den: f64 = alpha.iter().map(|a| a + nf - 1.0).product();
                (num / den).sqrt()
            }
            Self::Table(values) => *values.get(n - 1).ok_or(CsError::OutOfTable {
                n,
                len: values.len(),
            })?,
            Self::Reciprocal(inner) => 1.0 / inner.f(n)?,
        })
    }

    /// `f(1), ..., f(count)`.
    pub fn f_values(&self, count: usize) -> Result<Vec<f64>> {
        (1..=count).map(|n| self.f(n)).collect()
    }

    /// `ln t(0), ..., ln t(count - 1)`.
    pub fn ln_t_values(&self, count: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut acc = 0.0;
        for n in 0..count {
            if n > 0 {
                acc += self.f(n)?.ln();
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// The spec with `f` replaced by `1/f`, using the named counterpart where
    /// one exists so that applying it twice returns the original.
    pub fn reciprocal(&self) -> Self {
        match self {
            Self::Canonical => Self::Canonical,
            Self::Gp { kappa } => Self::Bg { kappa: *kappa },
            Self::Bg { kappa } => Self::Gp { kappa: *kappa },
            Self::Hypergeometric { alpha, beta } => Self::Hypergeometric {
                alpha: beta.clone(),
                beta: alpha.clone(),
            },
            Self::Reciprocal(inner) => (**inner).clone(),
            other => Self::Reciprocal(Box::new(other.clone())),
        }
    }

    /// True when `f` is known to be nondecreasing in `n`; moment targets are
    /// then log-convex.
    pub fn is_nondecreasing(&self) -> bool {
        match self {
            Self::Canonical | Self::SqrtN | Self::Bg { .. } => true,
            Self::QOsc { q } => *q >= 1.0,
            Self::Reciprocal(inner) => matches!(**inner, Self::Gp { .. }),
            _ => false,
        }
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        let params = self.params();
        if !params.is_empty() {
            let parts: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

/// `(1 - qⁿ) / (n (1 - q))`, continuous at `q = 1`.
fn q_number(q: f64, n: usize) -> f64 {
    let nf = n as f64;
    let lq = q.ln();
    if lq.abs() < 1e-12 {
        return 1.0;
    }
    (nf * lq).exp_m1() / (lq.exp_m1() * nf)
}

fn check_kappa(kappa: f64) -> Result<()> {
    let twice = 2.0 * kappa;
    if kappa >= 1.0 && (twice - twice.round()).abs() < 1e-12 && kappa.is_finite() {
        Ok(())
    } else {
        Err(CsError::InvalidParameter(format!(
            "kappa must be one of 1, 3/2, 2, 5/2, ..., got {kappa}"
        )))
    }
}

pub(crate) fn check_hypergeometric(alpha: &[f64], beta: &[f64]) -> Result<()> {
    let (p, q) = (alpha.len() as i64, beta.len() as i64);
    if p < q - 1 || p > q + 1 {
        return Err(CsError::InvalidParameter(format!(
            "hypergeometric orders must satisfy q-1 <= p <= q+1, got p = {p}, q = {q}"
        )));
    }
    if let Some(bad) = alpha.iter().chain(beta).find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(CsError::InvalidParameter(format!(
            "hypergeometric parameters must be positive, got {bad}"
        )));
    }
    Ok(())
}
