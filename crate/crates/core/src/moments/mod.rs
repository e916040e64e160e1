//! Resolution-of-identity machinery: radial moment targets, verification
//! and nonnegative fitting of radial measures, and direct assembly of the
//! frame operator on a polar grid.
//!
//! A family with coefficients `|c_n(z)|² 𝒩(|z|²) = |z|^{2n} / (t(n)² n!)`
//! resolves the identity against `dμ(z) = dλ(r) dθ` exactly when
//! `∫ r^{2n} dλ(r) = m_n = t(n)² n! / (2π)` for every `n`.

mod frame;
mod nnls;

pub use frame::{frame_operator, photon_added_resolution_check, FrameGrid, FrameReport};

use nalgebra::{DMatrix, DVector};

use crate::error::{CsError, Result};
use crate::fock::ln_factorial;
use crate::nonlinearity::NonlinearitySpec;
use crate::rescaling::{domain_radius, Extended};
use crate::special::gauss_laguerre;

/// Largest natural logarithm accepted for a moment.
pub const MAX_LN_MOMENT: f64 = 709.0;

/// Condition-number limit of the column-scaled moment system.
pub const CONDITION_LIMIT: f64 = 1e15;

/// Default number of radial grid nodes.
pub const DEFAULT_GRID_NODES: usize = 64;

const LN_TWO_PI: f64 = 1.837_877_066_409_345_3;

/// `m_n = t(n)² n! / (2π)` for `n < n_count`, held in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTargets {
    ln_m: Vec<f64>,
    spec: NonlinearitySpec,
}

impl MomentTargets {
    pub fn n_count(&self) -> usize {
        self.ln_m.len()
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_m
    }

    pub fn values(&self) -> Vec<f64> {
        self.ln_m.iter().map(|l| l.exp()).collect()
    }
}

pub fn target_moments(spec: &NonlinearitySpec, n_count: usize) -> Result<MomentTargets> {
    if n_count == 0 {
        return Err(CsError::InvalidParameter("n_count must be positive".into()));
    }
    let ln_t = spec.ln_t_values(n_count)?;
    let ln_m: Vec<f64> = ln_t
        .iter()
        .enumerate()
        .map(|(n, lt)| 2.0 * lt + ln_factorial(n) - LN_TWO_PI)
        .collect();
    if let Some((n, &l)) = ln_m
        .iter()
        .enumerate()
        .find(|(_, l)| !(l.abs() <= MAX_LN_MOMENT))
    {
        return Err(CsError::Overflow { n, log_value: l });
    }
    Ok(MomentTargets {
        ln_m,
        spec: spec.clone(),
    })
}

/// A radial measure `dλ(r)` on `[0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialMeasure {
    /// `(e^{-r²}/π) r dr` on `[0, ∞)`, integrated by the `order`-point
    /// Gauss–Laguerre rule in `x = r²`.
    GaussianCanonical { order: usize },
    Discrete {
        nodes: Vec<f64>,
        weights: Vec<f64>,
        support_radius: f64,
    },
}

impl RadialMeasure {
    /// Nodes must be strictly increasing in `[0, R]`, weights nonnegative.
    pub fn discrete(nodes: Vec<f64>, weights: Vec<f64>, support_radius: f64) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(CsError::DimensionMismatch {
                expected: nodes.len(),
                found: weights.len(),
            });
        }
        if !(support_radius >= 0.0) || !support_radius.is_finite() {
            return Err(CsError::InvalidParameter(format!(
                "support radius {support_radius} must be finite and nonnegative"
            )));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CsError::InvalidParameter("nodes must be strictly increasing".into()));
        }
        if nodes.iter().any(|&r| !(0.0..=support_radius).contains(&r)) {
            return Err(CsError::InvalidParameter(format!(
                "nodes must lie in [0, {support_radius}]"
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(CsError::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        Ok(Self::Discrete {
            nodes,
            weights,
            support_radius,
        })
    }

    pub fn zero() -> Self {
        Self::Discrete {
            nodes: Vec::new(),
            weights: Vec::new(),
            support_radius: 0.0,
        }
    }

    pub fn support_radius(&self) -> Extended {
        match self {
            Self::GaussianCanonical { .. } => Extended::Infinite,
            Self::Discrete { support_radius, .. } => Extended::Finite(*support_radius),
        }
    }

    /// Radial nodes `r_k` and weights `w_k` with `∫ g dλ ≈ Σ w_k g(r_k)`.
    pub fn nodes_weights(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::GaussianCanonical { order } => {
                let (x, w) = gauss_laguerre(*order)?;
                let two_pi = 2.0 * std::f64::consts::PI;
                Ok((
                    x.iter().map(|v| v.sqrt()).collect(),
                    w.iter().map(|v| v / two_pi).collect(),
                ))
            }
            Self::Discrete { nodes, weights, .. } => Ok((nodes.clone(), weights.clone())),
        }
    }
}

/// Fails when the support of the measure reaches beyond `radius`.
pub(crate) fn check_support(measure: &RadialMeasure, radius: Extended) -> Result<()> {
    match (measure.support_radius(), radius) {
        (_, Extended::Infinite) => Ok(()),
        (Extended::Infinite, Extended::Finite(l)) => Err(CsError::SupportMismatch {
            support: f64::INFINITY,
            radius: l,
        }),
        (Extended::Finite(r), Extended::Finite(l)) if r > l => {
            Err(CsError::SupportMismatch { support: r, radius: l })
        }
        _ => Ok(()),
    }
}

/// Relative moment errors `|∫ r^{2n} dλ - m_n| / m_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
    pub passed: bool,
}

pub fn verify_measure(measure: &RadialMeasure, targets: &MomentTargets, tol: f64) -> Result<MomentCheck> {
    if matches!(measure, RadialMeasure::GaussianCanonical { .. })
        && *targets.spec() != NonlinearitySpec::Canonical
    {
        return Err(CsError::PreconditionViolated(
            "the Gaussian measure only matches canonical moment targets".into(),
        ));
    }
    check_support(measure, domain_radius(targets.spec()).0)?;
    let (nodes, weights) = measure.nodes_weights()?;
    let relative_errors: Vec<f64> = targets
        .ln_values()
        .iter()
        .enumerate()
        .map(|(n, &ln_m)| {
            let ratio: f64 = nodes
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&r, &w)| (w.ln() + 2.0 * n as f64 * r.ln() - ln_m).exp())
                .sum();
            (ratio - 1.0).abs()
        })
        .collect();
    let max_relative_error = relative_errors.iter().cloned().fold(0.0, f64::max);
    Ok(MomentCheck {
        passed: max_relative_error <= tol,
        relative_errors,
        max_relative_error,
    })
}

/// Default radial grid: `count` uniform nodes on `(0.995 L/count, 0.995 L]`
/// for finite `L`, and log-spaced nodes on `[1e-4, 2√n_max]` otherwise.
pub fn default_grid(radius: Extended, n_max: usize, count: usize) -> Vec<f64> {
    let count = count.max(1);
    match radius {
        Extended::Finite(l) => {
            let top = 0.995 * l;
            (1..=count).map(|k| top * k as f64 / count as f64).collect()
        }
        Extended::Infinite => {
            let (lo, hi) = (1e-4f64.ln(), (2.0 * (n_max.max(1) as f64).sqrt()).ln());
            if count == 1 {
                return vec![hi.exp()];
            }
            (0..count)
                .map(|k| (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// A fitted discrete measure and the ℓ₂ norm of its relative moment residual
/// `(Σ_k w_k r_k^{2n} - m_n) / m_n` over `n ≤ max_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFit {
    pub measure: RadialMeasure,
    pub residual: f64,
    pub condition: f64,
}

/// Fits nonnegative weights on `nodes` to the moments `m_0..=m_max_n`.
/// Each equation is divided by its target and each column normalized before
/// the active-set solve.
pub fn fit_discrete_measure(
    targets: &MomentTargets,
    nodes: &[f64],
    max_n: usize,
    tol: f64,
) -> Result<MeasureFit> {
    if max_n >= targets.n_count() {
        return Err(CsError::PreconditionViolated(format!(
            "max_n = {max_n} needs at least {} targets, have {}",
            max_n + 1,
            targets.n_count()
        )));
    }
    if nodes.is_empty() {
        return Err(CsError::InvalidParameter("the grid has no nodes".into()));
    }
    if nodes.windows(2).any(|w| !(w[0] < w[1])) || !(nodes[0] > 0.0) {
        return Err(CsError::InvalidParameter(
            "grid nodes must be positive and strictly increasing".into(),
        ));
    }
    let radius = domain_radius(targets.spec()).0;
    let top = *nodes.last().expect("nonempty");
    if let Extended::Finite(l) = radius {
        if !(top < l) {
            return Err(CsError::SupportMismatch { support: top, radius: l });
        }
    }
    let rows = max_n + 1;
    let ln_m = targets.ln_values();
    let mut a = DMatrix::from_fn(rows, nodes.len(), |n, k| {
        (2.0 * n as f64 * nodes[k].ln() - ln_m[n]).exp()
    });
    let col_norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if col_norms.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(CsError::IllConditioned {
            cond: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    for (k, mut col) in a.column_iter_mut().enumerate() {
        col /= col_norms[k];
    }
    let sv = a.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(CsError::IllConditioned {
            cond: condition,
            limit: CONDITION_LIMIT,
        });
    }
    let b = DVector::from_element(rows, 1.0);
    let x = nnls::nnls(&a, &b);
    let residual = (&a * &x - &b).norm();
    if !(residual <= tol) {
        return Err(CsError::Infeasible { residual, tol });
    }
    let weights: Vec<f64> = x.iter().zip(&col_norms).map(|(v, c)| v / c).collect();
    let support = match radius {
        Extended::Finite(l) => l,
        Extended::Infinite => top,
    };
    Ok(MeasureFit {
        measure: RadialMeasure::discrete(nodes.to_vec(), weights, support)?,
        residual,
        condition,
    })
}
