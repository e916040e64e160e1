//! Direct assembly of `S = Σ_k w_k Σ_j Δθ 𝒩(|z|²) |η_z⟩⟨η_z|` on a polar
//! grid `z = c + r_k e^{iθ_j}`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_support, RadialMeasure};
use crate::error::{CsError, Result};
use crate::families::{self, EntireSeries, EvalOptions, FamilyDescriptor};
use crate::fock::TruncationPolicy;
use crate::linalg::{CMatrix, CVector, ONE};
use crate::rescaling::Extended;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub radial_nodes: usize,
    pub n_theta: usize,
    /// Center of the polar grid in the family's `z` plane.
    pub center: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    /// Spectral norm of `S - I` on the interior block.
    pub operator_norm_deviation: f64,
    /// Largest off-diagonal modulus of `S` on the interior block.
    pub off_diagonal_max: f64,
    pub block: usize,
    pub grid: FrameGrid,
    pub measure: RadialMeasure,
}

fn assemble(
    fam: &FamilyDescriptor,
    measure: &RadialMeasure,
    n_theta: usize,
    center: Complex64,
    trunc: TruncationPolicy,
) -> Result<FrameReport> {
    let n = trunc.n_max();
    if n_theta < 2 * n {
        return Err(CsError::PreconditionViolated(format!(
            "n_theta = {n_theta} must be at least 2 n_max = {}",
            2 * n
        )));
    }
    let (nodes, weights) = measure.nodes_weights()?;
    let opts = EvalOptions {
        check_tail: false,
        ..EvalOptions::default()
    };
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
    let partials: Vec<CMatrix> = nodes
        .par_iter()
        .zip(weights.par_iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&r, &w)| -> Result<CMatrix> {
            let mut s = CMatrix::zeros(n, n);
            for j in 0..n_theta {
                let z = center + Complex64::from_polar(r, dtheta * j as f64);
                let eta = families::evaluate_with(fam, z, trunc, &opts)?;
                let scale = (w * dtheta * fam.weight(z)?).sqrt();
                let v = CVector::from_column_slice(eta.vector.coeffs()) * Complex64::new(scale, 0.0);
                s.gerc(ONE, &v, &v, ONE);
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    // sequential, order-preserving reduction keeps the result deterministic
    let s = partials
        .into_iter()
        .fold(CMatrix::zeros(n, n), |acc, p| acc + p);
    let block = trunc.interior(1);
    let mut dev = s.view((0, 0), (block, block)).into_owned();
    let mut off_diagonal_max: f64 = 0.0;
    for r in 0..block {
        for c in 0..block {
            if r != c {
                off_diagonal_max = off_diagonal_max.max(dev[(r, c)].norm());
            }
        }
        dev[(r, r)] -= ONE;
    }
    let operator_norm_deviation = dev.singular_values().max();
    Ok(FrameReport {
        operator_norm_deviation,
        off_diagonal_max,
        block,
        grid: FrameGrid {
            radial_nodes: nodes.len(),
            n_theta,
            center,
        },
        measure: measure.clone(),
    })
}

/// Frame operator of `fam` against the radial `measure`, weighted by the
/// family's `𝒩(|z|²)`.
pub fn frame_operator(
    fam: &FamilyDescriptor,
    measure: &RadialMeasure,
    n_theta: usize,
    trunc: TruncationPolicy,
) -> Result<FrameReport> {
    if fam.moment_spec().is_none() {
        return Err(CsError::Unsupported(format!(
            "{} frames are resolved in the shifted variable; use the photon-added check",
            fam.name()
        )));
    }
    check_support(measure, fam.radius())?;
    if let (Extended::Finite(r), Extended::Finite(l)) = (measure.support_radius(), fam.radius()) {
        // nodes on the boundary circle itself cannot be evaluated
        let (nodes, _) = measure.nodes_weights()?;
        if let Some(&top) = nodes.last() {
            if top >= l {
                return Err(CsError::SupportMismatch { support: r, radius: l });
            }
        }
    }
    assemble(fam, measure, n_theta, Complex64::new(0.0, 0.0), trunc)
}

/// Resolution of the identity for the photon-added family `G = 1`
/// against the Gaussian measure in the shifted variable `w = z + λ`.
pub fn photon_added_resolution_check(lambda: f64, trunc: TruncationPolicy) -> Result<FrameReport> {
    let fam = FamilyDescriptor::photon_added(lambda, EntireSeries::one())?;
    let n = trunc.n_max();
    // exact for moments of degree < 2 · order
    let order = 32.max(n / 2 + 1);
    assemble(
        &fam,
        &RadialMeasure::GaussianCanonical { order },
        2 * n,
        Complex64::new(-lambda, 0.0),
        trunc,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{default_grid, fit_discrete_measure, target_moments};
    use crate::nonlinearity::NonlinearitySpec;

    fn trunc(n: usize) -> TruncationPolicy {
        TruncationPolicy::with_dim(n).unwrap()
    }

    #[test]
    fn canonical_gaussian_frame() {
        let r = frame_operator(
            &FamilyDescriptor::Canonical,
            &RadialMeasure::GaussianCanonical { order: 32 },
            64,
            trunc(24),
        )
        .unwrap();
        assert!(r.operator_norm_deviation <= 1e-7, "{}", r.operator_norm_deviation);
        assert!(r.off_diagonal_max <= 1e-13);
    }

    #[test]
    fn zero_measure_gives_unit_deviation() {
        let r = frame_operator(&FamilyDescriptor::Canonical, &RadialMeasure::zero(), 32, trunc(12)).unwrap();
        assert_eq!(r.operator_norm_deviation, 1.0);
    }

    #[test]
    fn coarse_angular_grid_is_refused() {
        let err = frame_operator(
            &FamilyDescriptor::Canonical,
            &RadialMeasure::GaussianCanonical { order: 8 },
            10,
            trunc(12),
        )
        .unwrap_err();
        assert!(matches!(err, CsError::PreconditionViolated(_)));
    }

    #[test]
    fn photon_added_needs_shifted_check() {
        let fam = FamilyDescriptor::photon_added(0.5, EntireSeries::one()).unwrap();
        let m = RadialMeasure::GaussianCanonical { order: 8 };
        assert!(matches!(frame_operator(&fam, &m, 32, trunc(12)), Err(CsError::Unsupported(_))));
        let r = photon_added_resolution_check(0.5, trunc(24)).unwrap();
        assert!(r.operator_norm_deviation <= 1e-6, "{}", r.operator_norm_deviation);
    }

    #[test]
    fn gp_with_fitted_measure() {
        let spec = NonlinearitySpec::gp(1.0).unwrap();
        let t = target_moments(&spec, 13).unwrap();
        let fit = fit_discrete_measure(&t, &default_grid(Extended::Finite(1.0), 16, 64), 12, 1e-6).unwrap();
        let fam = FamilyDescriptor::gilmore_perelomov(1.0).unwrap();
        let r = frame_operator(&fam, &fit.measure, 32, trunc(16)).unwrap();
        assert!(r.operator_norm_deviation <= 1e-5, "{}", r.operator_norm_deviation);
    }
}
