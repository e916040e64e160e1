//! Coherent-state families, their duals, overlaps and re-expressions.
//!
//! Normalization conventions (each vector is reported in the orthonormal
//! basis `φ_n`, with `norm_in_h` alongside; `weight` is the factor `𝒩(|z|²)`
//! that enters the resolution of the identity):
//!
//! | family | coefficient of `φ_n` | weight |
//! |---|---|---|
//! | canonical | `e^{-|z|²/2} zⁿ/√n!` | `e^{|z|²}` |
//! | rescaled(f), hypergeometric | `e^{-|z|²/2} zⁿ/(t(n)√n!)` | `e^{|z|²}` |
//! | photon-added(λ, G) | `G(z) e^{-|z|²/2} (z+λ)ⁿ/√n!` | `e^{|z|²}|G(z)|⁻²` in `w = z+λ` |
//! | binomial(μ) | `e^{μ Re z - |z|²/2} zⁿ/√n!` | `e^{|z|² - 2μ Re z}` |
//! | Gilmore–Perelomov(κ) | `(1-|z|²)^κ √((2κ)_n/n!) zⁿ` | `(1-|z|²)^{-2κ}` |
//! | Barut–Girardello(κ) | `zⁿ / √(n! (2κ)_n 0F1(;2κ;|z|²))` | `0F1(;2κ;|z|²)` |
//! | squeezed(u, v) | `U(M(u,v)) η_z` | `e^{|z|²}` |

pub mod metaplectic;
pub mod series;

use num_complex::Complex64;

use crate::error::{CsError, Result};
use crate::fock::{self, FockVector, TruncationPolicy};
use crate::linalg::{self, ZERO};
use crate::nonlinearity::{check_hypergeometric, NonlinearitySpec};
use crate::rescaling::{domain_radius, Extended};
use crate::special::hyp0f1;

pub use series::EntireSeries;

/// Default domain margin `ε` in `|z| <= (1 - ε) L`.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Moduli below this count as a vanishing prefactor.
const PREFACTOR_FLOOR: f64 = 1e-12;

/// Upper bound on the number of coefficients summed past `n_max` when the
/// neglected mass is measured.
const TAIL_SCAN_LIMIT: usize = 200_000;

/// The scalar prefactor of a photon-added family.
#[derive(Debug, Clone, PartialEq)]
pub enum Prefactor {
    /// `G(z) = g(z)`.
    Direct(EntireSeries),
    /// `G(z) = 1 / g(z + λ)` with `λ` the family's own shift; this is the
    /// prefactor of the dual of `Direct(g)`.
    Inverse(EntireSeries),
}

impl Prefactor {
    pub fn series(&self) -> &EntireSeries {
        match self {
            Prefactor::Direct(g) | Prefactor::Inverse(g) => g,
        }
    }

    pub fn eval(&self, z: Complex64, lambda: f64) -> Result<Complex64> {
        let (g, inverse) = match self {
            Prefactor::Direct(g) => (g.eval(z), false),
            Prefactor::Inverse(g) => (g.eval(z + lambda), true),
        };
        if !(g.norm() > PREFACTOR_FLOOR) {
            return Err(CsError::PrefactorVanishes {
                z,
                modulus: g.norm(),
            });
        }
        Ok(if inverse { 1.0 / g } else { g })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyDescriptor {
    Canonical,
    Rescaled(NonlinearitySpec),
    PhotonAdded { lambda: f64, prefactor: Prefactor },
    Binomial { mu: f64 },
    GilmorePerelomov { kappa: f64 },
    BarutGirardello { kappa: f64 },
    Hypergeometric { alpha: Vec<f64>, beta: Vec<f64> },
    Squeezed { u: f64, v: f64 },
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CsError::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

impl FamilyDescriptor {
    pub fn photon_added(lambda: f64, g: EntireSeries) -> Result<Self> {
        finite("lambda", lambda)?;
        Ok(Self::PhotonAdded {
            lambda,
            prefactor: Prefactor::Direct(g),
        })
    }

    pub fn binomial(mu: f64) -> Result<Self> {
        finite("mu", mu)?;
        Ok(Self::Binomial { mu })
    }

    pub fn gilmore_perelomov(kappa: f64) -> Result<Self> {
        NonlinearitySpec::gp(kappa)?;
        Ok(Self::GilmorePerelomov { kappa })
    }

    pub fn barut_girardello(kappa: f64) -> Result<Self> {
        NonlinearitySpec::bg(kappa)?;
        Ok(Self::BarutGirardello { kappa })
    }

    pub fn hypergeometric(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        check_hypergeometric(&alpha, &beta)?;
        Ok(Self::Hypergeometric { alpha, beta })
    }

    pub fn squeezed(u: f64, v: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(CsError::InvalidParameter(format!("u must be positive, got {u}")));
        }
        finite("v", v)?;
        Ok(Self::Squeezed { u, v })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Canonical => "canonical",
            Self::Rescaled(_) => "rescaled",
            Self::PhotonAdded { .. } => "photon_added",
            Self::Binomial { .. } => "binomial",
            Self::GilmorePerelomov { .. } => "gilmore_perelomov",
            Self::BarutGirardello { .. } => "barut_girardello",
            Self::Hypergeometric { .. } => "hypergeometric",
            Self::Squeezed { .. } => "squeezed",
        }
    }

    /// The nonlinearity whose `t(n)` relates this family to the canonical
    /// one, when the family is of rescaled type.
    pub fn nonlinearity(&self) -> Option<NonlinearitySpec> {
        match self {
            Self::Canonical => Some(NonlinearitySpec::Canonical),
            Self::Rescaled(s) => Some(s.clone()),
            Self::GilmorePerelomov { kappa } => Some(NonlinearitySpec::Gp { kappa: *kappa }),
            Self::BarutGirardello { kappa } => Some(NonlinearitySpec::Bg { kappa: *kappa }),
            Self::Hypergeometric { alpha, beta } => Some(NonlinearitySpec::Hypergeometric {
                alpha: alpha.clone(),
                beta: beta.clone(),
            }),
            _ => None,
        }
    }

    /// Spec whose moment targets make `weight`-weighted frames resolve the
    /// identity: the family's own nonlinearity, or the canonical one for the
    /// binomial and squeezed families (unitarily or scalar related to it).
    pub fn moment_spec(&self) -> Option<NonlinearitySpec> {
        match self {
            Self::Binomial { .. } | Self::Squeezed { .. } => Some(NonlinearitySpec::Canonical),
            Self::PhotonAdded { .. } => None,
            other => other.nonlinearity(),
        }
    }

    /// Radius `L` of the disc on which the family is defined in `𝔥`.
    pub fn radius(&self) -> Extended {
        match self {
            Self::Canonical | Self::PhotonAdded { .. } | Self::Binomial { .. } | Self::Squeezed { .. } => {
                Extended::Infinite
            }
            Self::GilmorePerelomov { .. } => Extended::Finite(1.0),
            Self::BarutGirardello { .. } => Extended::Infinite,
            other => domain_radius(&other.nonlinearity().expect("rescaled type")).0,
        }
    }

    /// The factor `𝒩(|z|²)` multiplying `|η_z⟩⟨η_z|` in the resolution of the
    /// identity.
    pub fn weight(&self, z: Complex64) -> Result<f64> {
        let r2 = z.norm_sqr();
        match self {
            Self::Canonical | Self::Rescaled(_) | Self::Hypergeometric { .. } | Self::Squeezed { .. } => {
                Ok(r2.exp())
            }
            Self::Binomial { mu } => Ok((r2 - 2.0 * mu * z.re).exp()),
            Self::GilmorePerelomov { kappa } => Ok((1.0 - r2).powf(-2.0 * kappa)),
            Self::BarutGirardello { kappa } => hyp0f1(2.0 * kappa, r2),
            Self::PhotonAdded { lambda, prefactor } => {
                Ok(r2.exp() / prefactor.eval(z, *lambda)?.norm_sqr())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub epsilon: f64,
    pub allow_boundary: bool,
    /// Measure the neglected coefficient mass beyond `n_max` and refuse when
    /// it exceeds `tail_tol`. Callers that only need the truncated
    /// coefficients (which are exact) may switch this off.
    pub check_tail: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            allow_boundary: false,
            check_tail: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CSResult {
    pub vector: FockVector,
    pub norm_in_h: f64,
    pub domain_ok: bool,
    pub family: FamilyDescriptor,
    pub z: Complex64,
}

pub fn evaluate(fam: &FamilyDescriptor, z: Complex64, trunc: TruncationPolicy) -> Result<CSResult> {
    evaluate_with(fam, z, trunc, &EvalOptions::default())
}

/// First coefficient and ratio `c_n / c_{n-1}` of a family's expansion.
struct Recurrence<'a> {
    c0: Complex64,
    ratio: Box<dyn Fn(usize) -> Result<Complex64> + 'a>,
    /// Whether the ratio can be evaluated past `n_max` for the tail estimate.
    extendable: bool,
}

fn recurrence<'a>(fam: &'a FamilyDescriptor, z: Complex64) -> Result<Recurrence<'a>> {
    let r2 = z.norm_sqr();
    let gauss = Complex64::new((-r2 / 2.0).exp(), 0.0);
    let sqrt = |n: usize| (n as f64).sqrt();
    Ok(match fam {
        FamilyDescriptor::Canonical => Recurrence {
            c0: gauss,
            ratio: Box::new(move |n| Ok(z / sqrt(n))),
            extendable: true,
        },
        FamilyDescriptor::Binomial { mu } => Recurrence {
            c0: gauss * (mu * z.re).exp(),
            ratio: Box::new(move |n| Ok(z / sqrt(n))),
            extendable: true,
        },
        FamilyDescriptor::PhotonAdded { lambda, prefactor } => {
            let lambda = *lambda;
            Recurrence {
                c0: prefactor.eval(z, lambda)? * gauss,
                ratio: Box::new(move |n| Ok((z + lambda) / sqrt(n))),
                extendable: true,
            }
        }
        FamilyDescriptor::GilmorePerelomov { kappa } => {
            let k2 = 2.0 * kappa;
            Recurrence {
                c0: Complex64::new((1.0 - r2).abs().powf(*kappa), 0.0),
                ratio: Box::new(move |n| Ok(z * ((k2 + n as f64 - 1.0) / n as f64).sqrt())),
                extendable: true,
            }
        }
        FamilyDescriptor::BarutGirardello { kappa } => {
            let k2 = 2.0 * kappa;
            Recurrence {
                c0: Complex64::new(1.0 / hyp0f1(k2, r2)?.sqrt(), 0.0),
                ratio: Box::new(move |n| Ok(z / (n as f64 * (k2 + n as f64 - 1.0)).sqrt())),
                extendable: true,
            }
        }
        FamilyDescriptor::Rescaled(_) | FamilyDescriptor::Hypergeometric { .. } => {
            let spec = fam.nonlinearity().expect("rescaled type");
            let extendable = spec.kind() == crate::nonlinearity::SpecKind::ClosedForm;
            Recurrence {
                c0: gauss,
                ratio: Box::new(move |n| Ok(z / (spec.f(n)? * sqrt(n)))),
                extendable,
            }
        }
        FamilyDescriptor::Squeezed { .. } => unreachable!("squeezed states are built by operators"),
    })
}

/// Relative coefficient mass beyond the computed prefix, summed from the
/// recurrence until the terms are negligible and decaying.
fn tail_mass(rec: &Recurrence<'_>, last: Complex64, n_max: usize, head_mass: f64) -> f64 {
    let proxy = || {
        if head_mass > 0.0 {
            last.norm_sqr() / head_mass
        } else {
            0.0
        }
    };
    if !rec.extendable {
        return proxy();
    }
    let mut c = last;
    let mut tail = 0.0;
    for n in n_max..n_max + TAIL_SCAN_LIMIT {
        let ratio = match (rec.ratio)(n) {
            Ok(r) => r,
            Err(_) => return proxy().max(tail / head_mass.max(f64::MIN_POSITIVE)),
        };
        c *= ratio;
        let m = c.norm_sqr();
        tail += m;
        if !tail.is_finite() {
            return f64::INFINITY;
        }
        if ratio.norm() < 0.9 && m <= 1e-20 * (head_mass + tail) {
            break;
        }
        if n + 1 == n_max + TAIL_SCAN_LIMIT {
            return f64::INFINITY;
        }
    }
    let total = head_mass + tail;
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

pub fn evaluate_with(
    fam: &FamilyDescriptor,
    z: Complex64,
    trunc: TruncationPolicy,
    opts: &EvalOptions,
) -> Result<CSResult> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(CsError::InvalidParameter(format!("z = {z} is not finite")));
    }
    let radius = fam.radius();
    let domain_ok = radius.contains(z.norm(), opts.epsilon);
    if !domain_ok && !opts.allow_boundary {
        return Err(CsError::OutsideDomain {
            z,
            radius: radius.finite().unwrap_or(f64::INFINITY),
        });
    }
    let n = trunc.n_max();
    let coeffs = if let FamilyDescriptor::Squeezed { u, v } = fam {
        let ext = metaplectic::extended_dim(n);
        let base = fock::ccs_coeffs(z, ext);
        let full = metaplectic::apply_squeeze_extended(*u, *v, &base)?;
        if opts.check_tail {
            let ccs_tail = fock::poisson_tail(z.norm_sqr(), ext);
            if ccs_tail > trunc.tail_tol() {
                return Err(CsError::TruncationInsufficient {
                    tail: ccs_tail,
                    tol: trunc.tail_tol(),
                    n_max: n,
                });
            }
            metaplectic::truncate_checked(&full, trunc)?
        } else {
            full.iter().take(n).cloned().collect()
        }
    } else {
        let rec = recurrence(fam, z)?;
        let mut coeffs = Vec::with_capacity(n);
        let mut c = rec.c0;
        coeffs.push(c);
        for k in 1..n {
            c *= (rec.ratio)(k)?;
            coeffs.push(c);
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(CsError::Overflow {
                n,
                log_value: f64::INFINITY,
            });
        }
        if opts.check_tail {
            let head: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
            let tail = tail_mass(&rec, c, n, head);
            if !(tail <= trunc.tail_tol()) {
                return Err(CsError::TruncationInsufficient {
                    tail,
                    tol: trunc.tail_tol(),
                    n_max: n,
                });
            }
        }
        coeffs
    };
    let vector = FockVector::new(coeffs, trunc)?;
    Ok(CSResult {
        norm_in_h: vector.norm(),
        vector,
        domain_ok,
        family: fam.clone(),
        z,
    })
}

/// The dual family (built from `T` instead of `T⁻¹`).
pub fn dual(fam: &FamilyDescriptor) -> FamilyDescriptor {
    match fam {
        FamilyDescriptor::Canonical => FamilyDescriptor::Canonical,
        FamilyDescriptor::Rescaled(s) => FamilyDescriptor::Rescaled(s.reciprocal()),
        FamilyDescriptor::PhotonAdded { lambda, prefactor } => {
            let prefactor = match prefactor {
                Prefactor::Direct(g) if g.is_one() => Prefactor::Direct(g.clone()),
                Prefactor::Direct(g) => Prefactor::Inverse(g.clone()),
                Prefactor::Inverse(g) => Prefactor::Direct(g.clone()),
            };
            FamilyDescriptor::PhotonAdded {
                lambda: -lambda,
                prefactor,
            }
        }
        FamilyDescriptor::Binomial { mu } => FamilyDescriptor::Binomial { mu: -mu },
        FamilyDescriptor::GilmorePerelomov { kappa } => FamilyDescriptor::BarutGirardello { kappa: *kappa },
        FamilyDescriptor::BarutGirardello { kappa } => FamilyDescriptor::GilmorePerelomov { kappa: *kappa },
        FamilyDescriptor::Hypergeometric { alpha, beta } => FamilyDescriptor::Hypergeometric {
            alpha: beta.clone(),
            beta: alpha.clone(),
        },
        // U(M(u,v))⁻¹ = U(M(u,v)⁻¹) and M(u,v)⁻¹ = M(1/u, -v/u)
        FamilyDescriptor::Squeezed { u, v } => FamilyDescriptor::Squeezed {
            u: 1.0 / u,
            v: -v / u,
        },
    }
}

/// `⟨η^A_{zA} | η^B_{zB}⟩` in `𝔥`.
pub fn overlap(
    fam_a: &FamilyDescriptor,
    z_a: Complex64,
    fam_b: &FamilyDescriptor,
    z_b: Complex64,
    trunc: TruncationPolicy,
) -> Result<Complex64> {
    let a = evaluate(fam_a, z_a, trunc)?;
    let b = evaluate(fam_b, z_b, trunc)?;
    Ok(a.vector.inner(&b.vector))
}

/// Closed form of `⟨η^{dual}_z | η_z⟩` for the photon-added family with
/// `G = 1`: `e^{-λ(λ + 2i Im z)}`.
pub fn photon_added_dual_overlap(lambda: f64, z: Complex64) -> Complex64 {
    Complex64::new(-lambda * lambda, -2.0 * lambda * z.im).exp()
}

/// `η = 𝒩′(|w|²)^{-1/2} Ω(w) Σ wⁿ/√(x_n!) ψ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reexpression {
    pub w: Complex64,
    /// `x_1, ..., x_count` (`x_0 = 0` is implied).
    pub x_seq: Vec<f64>,
    pub phase: Complex64,
    pub norm_const: f64,
}

impl Reexpression {
    /// Coefficients `𝒩′^{-1/2} Ω wⁿ / √(x_n!)` for `n = 0..=count`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let scale = self.phase / self.norm_const.sqrt();
        let mut out = vec![scale];
        let mut c = scale;
        for x in &self.x_seq {
            c = c * self.w / x.sqrt();
            out.push(c);
        }
        out
    }
}

pub fn reexpress(fam: &FamilyDescriptor, z: Complex64, count: usize) -> Result<Reexpression> {
    let r2 = z.norm_sqr();
    let plain = |w: Complex64, norm_const: f64, phase: Complex64| Reexpression {
        w,
        x_seq: (1..=count).map(|n| n as f64).collect(),
        phase,
        norm_const,
    };
    match fam {
        FamilyDescriptor::Canonical => Ok(plain(z, r2.exp(), linalg::ONE)),
        FamilyDescriptor::Binomial { mu } => Ok(plain(z, (r2 - 2.0 * mu * z.re).exp(), linalg::ONE)),
        FamilyDescriptor::PhotonAdded { lambda, prefactor } => {
            let g = prefactor.eval(z, *lambda)?;
            Ok(plain(z + lambda, r2.exp() / g.norm_sqr(), g / g.norm()))
        }
        FamilyDescriptor::Rescaled(spec) => {
            let x_seq = (1..=count)
                .map(|n| Ok(n as f64 * spec.f(n)?.powi(2)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Reexpression {
                w: z,
                x_seq,
                phase: linalg::ONE,
                norm_const: r2.exp(),
            })
        }
        other => Err(CsError::Unsupported(format!(
            "re-expression is defined for canonical, rescaled, photon-added and binomial families, not {}",
            other.name()
        ))),
    }
}

/// Coefficient vector of `e^{λ a†} φ_n`, with the mass pushed past `n_max`
/// checked against the tolerance.
pub fn photon_added_basis(lambda: f64, n: usize, trunc: TruncationPolicy) -> Result<FockVector> {
    let n_max = trunc.n_max();
    if n >= n_max {
        return Err(CsError::InvalidParameter(format!(
            "basis index {n} outside truncation {n_max}"
        )));
    }
    let mut coeffs = vec![ZERO; n_max];
    let mut c = 1.0f64;
    let mut head = 0.0;
    for (k, slot) in coeffs.iter_mut().enumerate().skip(n) {
        if k > n {
            c *= lambda * (k as f64).sqrt() / (k - n) as f64;
        }
        *slot = Complex64::new(c, 0.0);
        head += c * c;
    }
    let mut tail = 0.0;
    for k in n_max..n_max + TAIL_SCAN_LIMIT {
        c *= lambda * (k as f64).sqrt() / (k - n) as f64;
        tail += c * c;
        if c * c <= 1e-20 * (head + tail) {
            break;
        }
    }
    let rel = tail / (head + tail);
    if rel > trunc.tail_tol() {
        return Err(CsError::TruncationInsufficient {
            tail: rel,
            tol: trunc.tail_tol(),
            n_max,
        });
    }
    FockVector::new(coeffs, trunc)
}

/// Coefficient vector of `e^{μ a} φ_n = (a† + μ)ⁿ φ_0 / √n!` (exact: only
/// indices `<= n` are populated).
pub fn binomial_basis(mu: f64, n: usize, trunc: TruncationPolicy) -> Result<FockVector> {
    let n_max = trunc.n_max();
    if n >= n_max {
        return Err(CsError::InvalidParameter(format!(
            "basis index {n} outside truncation {n_max}"
        )));
    }
    let mut coeffs = vec![ZERO; n_max];
    // component k: √(n!/k!) μ^{n-k} / (n-k)!, built downward from k = n
    let mut c = 1.0f64;
    coeffs[n] = linalg::ONE;
    for k in (0..n).rev() {
        c *= mu * ((k + 1) as f64).sqrt() / (n - k) as f64;
        coeffs[k] = Complex64::new(c, 0.0);
    }
    FockVector::new(coeffs, trunc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trunc(n: usize) -> TruncationPolicy {
        TruncationPolicy::with_dim(n).unwrap()
    }

    fn all_families() -> Vec<FamilyDescriptor> {
        vec![
            FamilyDescriptor::Canonical,
            FamilyDescriptor::Rescaled(NonlinearitySpec::q_osc(0.5).unwrap()),
            FamilyDescriptor::photon_added(0.4, EntireSeries::one()).unwrap(),
            FamilyDescriptor::photon_added(-0.3, EntireSeries::exponential(0.2, 64).unwrap()).unwrap(),
            FamilyDescriptor::binomial(0.7).unwrap(),
            FamilyDescriptor::gilmore_perelomov(1.5).unwrap(),
            FamilyDescriptor::barut_girardello(1.0).unwrap(),
            FamilyDescriptor::hypergeometric(vec![1.0], vec![2.0, 3.0]).unwrap(),
            FamilyDescriptor::squeezed(2.0, 0.3).unwrap(),
        ]
    }

    #[test]
    fn canonical_at_origin_is_vacuum() {
        let r = evaluate(&FamilyDescriptor::Canonical, ZERO, trunc(10)).unwrap();
        assert_eq!(r.vector.coeffs(), FockVector::vacuum(trunc(10)).coeffs());
        assert!(r.domain_ok);
    }

    #[test]
    fn dual_is_an_involution() {
        let z = Complex64::new(0.2, -0.1);
        for f in all_families() {
            let back = dual(&dual(&f));
            assert_eq!(back, f);
            let a = evaluate(&f, z, trunc(40)).unwrap();
            let b = evaluate(&back, z, trunc(40)).unwrap();
            for (x, y) in a.vector.coeffs().iter().zip(b.vector.coeffs()) {
                assert!((x - y).norm() <= 1e-12);
            }
        }
        assert_eq!(dual(&FamilyDescriptor::Canonical), FamilyDescriptor::Canonical);
        assert_eq!(
            dual(&FamilyDescriptor::gilmore_perelomov(1.0).unwrap()),
            FamilyDescriptor::barut_girardello(1.0).unwrap()
        );
    }

    #[test]
    fn normalized_families_have_unit_norm() {
        let z = Complex64::new(0.3, 0.4);
        for f in [
            FamilyDescriptor::Canonical,
            FamilyDescriptor::gilmore_perelomov(1.0).unwrap(),
            FamilyDescriptor::barut_girardello(2.0).unwrap(),
            FamilyDescriptor::squeezed(0.5, -0.4).unwrap(),
        ] {
            let r = evaluate(&f, z, trunc(80)).unwrap();
            assert!((r.norm_in_h - 1.0).abs() < 1e-10, "{}: {}", f.name(), r.norm_in_h);
        }
    }

    #[test]
    fn gp_coefficients_follow_the_series() {
        // κ = 1: coefficient ratio to 0.5ⁿ is √(n+1) up to a constant
        let r = evaluate(&FamilyDescriptor::Rescaled(NonlinearitySpec::gp(1.0).unwrap()), Complex64::new(0.5, 0.0), trunc(60))
            .unwrap();
        let c = r.vector.coeffs();
        for n in 0..20 {
            let ratio = c[n].re / (0.5f64.powi(n as i32) * ((n + 1) as f64).sqrt());
            assert!((ratio / c[0].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gp_outside_unit_disc_is_refused() {
        let gp = FamilyDescriptor::gilmore_perelomov(1.0).unwrap();
        let err = evaluate(&gp, Complex64::new(1.01, 0.0), trunc(40)).unwrap_err();
        assert!(matches!(err, CsError::OutsideDomain { .. }));
        let opts = EvalOptions {
            allow_boundary: true,
            check_tail: false,
            ..EvalOptions::default()
        };
        let r = evaluate_with(&gp, Complex64::new(1.01, 0.0), trunc(40), &opts).unwrap();
        assert!(!r.domain_ok);
    }

    #[test]
    fn truncation_guard_fires_for_large_z() {
        let err = evaluate(&FamilyDescriptor::Canonical, Complex64::new(4.0, 0.0), trunc(20)).unwrap_err();
        assert!(matches!(err, CsError::TruncationInsufficient { .. }));
    }

    #[test]
    fn photon_added_matches_closed_form() {
        let lambda = 0.5;
        let z = Complex64::new(0.3, -0.7);
        let fam = FamilyDescriptor::photon_added(lambda, EntireSeries::one()).unwrap();
        let r = evaluate(&fam, z, trunc(50)).unwrap();
        // e^{λ(x + λ/2)} η_{z+λ}
        let scale = (lambda * (z.re + lambda / 2.0)).exp();
        let expect = fock::ccs_coeffs(z + lambda, 50);
        for (a, b) in r.vector.coeffs().iter().zip(expect) {
            assert!((a - b * scale).norm() < 1e-13);
        }
    }

    #[test]
    fn photon_added_dual_prefactor() {
        let g = EntireSeries::exponential(0.2, 64).unwrap();
        let fam = FamilyDescriptor::photon_added(0.3, g.clone()).unwrap();
        let d = dual(&fam);
        let z = Complex64::new(0.1, 0.4);
        if let FamilyDescriptor::PhotonAdded { lambda, prefactor } = &d {
            assert_eq!(*lambda, -0.3);
            let expect = 1.0 / g.eval(z - 0.3);
            assert!((prefactor.eval(z, *lambda).unwrap() - expect).norm() < 1e-15);
        } else {
            panic!("dual changed the variant");
        }
    }

    #[test]
    fn vanishing_prefactor_is_reported() {
        let g = EntireSeries::new(vec![1.0, -2.0]).unwrap(); // zero at z = 1/2
        let fam = FamilyDescriptor::photon_added(0.0, g).unwrap();
        let err = evaluate(&fam, Complex64::new(0.5, 0.0), trunc(20)).unwrap_err();
        assert!(matches!(err, CsError::PrefactorVanishes { .. }));
    }

    #[test]
    fn reexpression_reproduces_coefficients() {
        let z = Complex64::new(0.4, 0.2);
        let spec = NonlinearitySpec::q_osc(0.5).unwrap();
        let fam = FamilyDescriptor::Rescaled(spec);
        let re = reexpress(&fam, z, 29).unwrap();
        let direct = evaluate(&fam, z, trunc(30)).unwrap();
        for (a, b) in re.coefficients().iter().zip(direct.vector.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
        let pa = reexpress(&FamilyDescriptor::photon_added(1.0, EntireSeries::one()).unwrap(), ZERO, 3).unwrap();
        assert_eq!(pa.w, Complex64::new(1.0, 0.0));
        assert_eq!(pa.x_seq, vec![1.0, 2.0, 3.0]);
        assert!(reexpress(&FamilyDescriptor::squeezed(1.0, 0.0).unwrap(), z, 3).is_err());
    }

    #[test]
    fn basis_constructors_at_zero_shift() {
        let t = trunc(12);
        for n in 0..12 {
            assert_eq!(photon_added_basis(0.0, n, t).unwrap().coeffs(), FockVector::basis(n, t).unwrap().coeffs());
            assert_eq!(binomial_basis(0.0, n, t).unwrap().coeffs(), FockVector::basis(n, t).unwrap().coeffs());
        }
    }

    #[test]
    fn binomial_basis_is_shifted_power() {
        // (a† + μ)² φ_0 / √2 = (√2 φ_2 + 2μ φ_1 + μ² φ_0) / √2
        let mu = 0.6;
        let v = binomial_basis(mu, 2, trunc(5)).unwrap();
        let c = v.coeffs();
        assert!((c[2].re - 1.0).abs() < 1e-15);
        assert!((c[1].re - 2.0 * mu / 2f64.sqrt()).abs() < 1e-15);
        assert!((c[0].re - mu * mu / 2f64.sqrt()).abs() < 1e-15);
    }
}
