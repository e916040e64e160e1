//! The named checks run by the `verify` task. Each check corresponds to one
//! identity of the library and reports its measured deviation against a
//! fixed tolerance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::csv::{Cell, Table};
use crate::algebra::{self, ShiftKind};
use crate::error::{CsError, Result};
use crate::families::metaplectic;
use crate::families::{self, EvalOptions, FamilyDescriptor, Prefactor};
use crate::fock::{self, FockOperator, FockVector, PhasePoint, TruncationPolicy};
use crate::linalg::{self, CMatrix};
use crate::moments::{self, RadialMeasure};
use crate::nonlinearity::NonlinearitySpec;
use crate::rescaling;

/// Sample points used when the configuration lists none.
pub const DEFAULT_POINTS: [(f64, f64); 3] = [(0.2, 0.1), (-0.15, 0.2), (0.1, -0.25)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// No sample point lies in the domain of the check.
    Skip,
    Error,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skip => "skip",
            CheckStatus::Error => "error",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, CheckStatus::Fail | CheckStatus::Error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
    pub note: String,
}

impl CheckResult {
    fn from_deviation(name: &str, tolerance: f64, dev: Result<Option<f64>>) -> Self {
        let (deviation, status, note) = match dev {
            Ok(Some(d)) if d <= tolerance => (d, CheckStatus::Pass, String::new()),
            Ok(Some(d)) => (d, CheckStatus::Fail, String::new()),
            Ok(None) => (f64::NAN, CheckStatus::Skip, "no sample point in the domain".into()),
            Err(e) => (f64::NAN, CheckStatus::Error, e.to_string()),
        };
        Self {
            name: name.into(),
            deviation,
            tolerance,
            status,
            note,
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<5} {:<28} deviation {:>11} tolerance {:e}{}",
            self.status.as_str().to_uppercase(),
            self.name,
            if self.deviation.is_nan() {
                "-".to_string()
            } else {
                format!("{:.3e}", self.deviation)
            },
            self.tolerance,
            if self.note.is_empty() {
                String::new()
            } else {
                format!("  ({})", self.note)
            }
        )
    }
}

pub fn checks_table(checks: &[CheckResult]) -> Table {
    let mut t = Table::new(&["check", "deviation", "tolerance", "status", "note"]);
    for c in checks {
        t.push(check_cells(c));
    }
    t
}

/// Keeps free text inside a single unquoted CSV field.
pub(crate) fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

/// Maximum of `f` over the points, skipping points outside the domain.
fn over_points(points: &[Complex64], f: impl Fn(Complex64) -> Result<f64>) -> Result<Option<f64>> {
    let mut worst: Option<f64> = None;
    for &z in points {
        match f(z) {
            Ok(d) => worst = Some(worst.map_or(d, |w: f64| w.max(d))),
            Err(CsError::OutsideDomain { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(worst)
}

struct Ctx<'a> {
    fam: &'a FamilyDescriptor,
    trunc: TruncationPolicy,
    opts: EvalOptions,
    points: Vec<Complex64>,
    seed: u64,
    vectors: usize,
}

impl Ctx<'_> {
    fn eval(&self, fam: &FamilyDescriptor, z: Complex64) -> Result<FockVector> {
        Ok(families::evaluate_with(fam, z, self.trunc, &self.opts)?.vector)
    }

    fn dual_overlap(&self, z: Complex64) -> Result<Complex64> {
        let a = self.eval(&families::dual(self.fam), z)?;
        let b = self.eval(self.fam, z)?;
        Ok(a.inner(&b))
    }
}

fn check(name: &str, tol: f64, dev: Result<Option<f64>>) -> CheckResult {
    CheckResult::from_deviation(name, tol, dev)
}

fn gelfand_violations(ctx: &Ctx) -> Result<Option<f64>> {
    let n = ctx.trunc.n_max();
    let diag: Vec<f64> = (0..n).map(|k| 1.0 + k as f64).collect();
    let metric = FockOperator::diagonal_real(&diag, ctx.trunc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut violations = 0usize;
    for _ in 0..ctx.vectors {
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let v = FockVector::new(coeffs.iter().map(|c| c / norm).collect(), ctx.trunc)?;
        let (lo, mid, hi) = rescaling::gelfand_norm_check(&v, &metric)?;
        let slack = 1e-14 * hi;
        if !(lo <= mid + slack && mid <= hi + slack) {
            violations += 1;
        }
    }
    Ok(Some(violations as f64))
}

fn gaussian_order(n_max: usize) -> usize {
    32.max(n_max / 2 + 1)
}

fn frame_check(ctx: &Ctx) -> Result<Option<f64>> {
    let n = ctx.trunc.n_max();
    let measure = RadialMeasure::GaussianCanonical {
        order: gaussian_order(n),
    };
    Ok(Some(
        moments::frame_operator(ctx.fam, &measure, 2 * n, ctx.trunc)?.operator_norm_deviation,
    ))
}

fn nonlinear_checks(ctx: &Ctx, spec: &NonlinearitySpec, out: &mut Vec<CheckResult>) {
    let t = ctx.trunc;
    let primal = FamilyDescriptor::Rescaled(spec.clone());
    let dual = FamilyDescriptor::Rescaled(spec.reciprocal());
    out.push(check(
        "duality_overlap",
        1e-8,
        over_points(&ctx.points, |z| {
            let a = ctx.eval(&dual, z)?;
            let b = ctx.eval(&primal, z)?;
            Ok((a.inner(&b) - 1.0).norm())
        }),
    ));
    out.push(check(
        "commutator_suite_relative",
        1e-9,
        algebra::build_quad(spec, t)
            .and_then(|q| algebra::commutator_suite(&q, t))
            .map(|r| Some(r.max_relative())),
    ));
    let expected_lambda = match spec {
        NonlinearitySpec::Canonical => Some(1.0),
        NonlinearitySpec::QOsc { q } => Some(*q),
        _ => None,
    };
    if let Some(lambda) = expected_lambda {
        out.push(check(
            "deformed_algebra",
            1e-9,
            algebra::build_quad(spec, t)
                .and_then(|q| algebra::detect_deformed_algebra(&q.a, &q.a_dag, t))
                .map(|r| {
                    let c = r.c_diag.iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
                    Some((r.lambda_fit - lambda).abs().max(c / r.scale.max(1.0)))
                }),
        ));
    }
    out.push(check(
        "v_collinearity",
        1e-8,
        over_points(&ctx.points, |z| algebra::v_collinearity_check(spec, z, t)),
    ));
    let pairs: Vec<(Complex64, Complex64)> = ctx.points.windows(2).map(|w| (w[0], w[1])).collect();
    out.push(check("projective_law_relative", 1e-6, {
        let mut worst: Result<Option<f64>> = Ok(None);
        for (z1, z2) in pairs {
            match algebra::projective_law_check_with(spec, z1, z2, algebra::Representation::Primal, t, None)
                .map(|d| d.relative())
            {
                Ok(d) => {
                    if let Ok(w) = &mut worst {
                        *w = Some(w.map_or(d, |x| x.max(d)));
                    }
                }
                Err(CsError::OutsideDomain { .. }) => {}
                Err(e) => {
                    worst = Err(e);
                    break;
                }
            }
        }
        worst
    }));
    out.push(check(
        "contragredience_relative",
        1e-6,
        over_points(&ctx.points, |z| {
            // the dual representation must be defined at z as well
            algebra::v_prime_operator(z, spec, t)?;
            Ok(algebra::contragredience_check_with(spec, z, t, None)?.relative())
        }),
    ));
}

fn canonical_checks(ctx: &Ctx, out: &mut Vec<CheckResult>) {
    let t = ctx.trunc;
    let a = fock::ladder_lowering(t).into_matrix();
    let k = t.interior(1);
    let comm = linalg::commutator(&a, &a.adjoint()) - CMatrix::identity(t.n_max(), t.n_max());
    out.push(check(
        "ladder_commutator",
        1e-12,
        Ok(Some(linalg::interior_deviation(&comm, k))),
    ));
    out.push(check(
        "ccs_eigenrelation",
        1e-12,
        over_points(&ctx.points, |z| {
            let v = ctx.eval(&FamilyDescriptor::Canonical, z)?.to_column();
            let r = &a * &v - &v * z;
            Ok(r.rows(0, k).norm() / v.norm())
        }),
    ));
}

fn photon_added_checks(ctx: &Ctx, lambda: f64, prefactor: &Prefactor, out: &mut Vec<CheckResult>) {
    let t = ctx.trunc;
    let unit = matches!(prefactor, Prefactor::Direct(g) if g.is_one());
    if unit {
        out.push(check(
            "overlap_closed_form",
            1e-8,
            over_points(&ctx.points, |z| {
                Ok((ctx.dual_overlap(z)? - families::photon_added_dual_overlap(lambda, z)).norm())
            }),
        ));
    }
    out.push(check(
        "eigenrelation",
        1e-8,
        over_points(&ctx.points, |z| algebra::photon_added_eigen_residual(ctx.fam, z, t)),
    ));
    if let Prefactor::Direct(g) = prefactor {
        out.push(check(
            "example1_commutation",
            1e-12,
            algebra::example1_commutation_check(lambda, g, t).map(Some),
        ));
    }
    let (da, dad) = algebra::transformed_ladder_check(ShiftKind::PhotonAdded(lambda), t);
    out.push(check("transformed_ladders", 1e-9, Ok(Some(da.max(dad)))));
    if unit {
        out.push(check(
            "shifted_resolution",
            1e-6,
            moments::photon_added_resolution_check(lambda, t).map(|r| Some(r.operator_norm_deviation)),
        ));
    }
    let count = 20.min(t.n_max());
    out.push(check(
        "binomial_relation",
        1e-7,
        algebra::photon_added_binomial_relation_check(lambda, count, t).map(Some),
    ));
    out.push(check(
        "metric_orthonormality",
        1e-7,
        algebra::photon_added_orthonormality_check(lambda, 10.min(t.n_max()), t).map(Some),
    ));
}

fn binomial_checks(ctx: &Ctx, mu: f64, out: &mut Vec<CheckResult>) {
    out.push(check(
        "dual_overlap",
        1e-9,
        over_points(&ctx.points, |z| Ok((ctx.dual_overlap(z)? - 1.0).norm())),
    ));
    let (da, dad) = algebra::transformed_ladder_check(ShiftKind::Binomial(mu), ctx.trunc);
    out.push(check("transformed_ladders", 1e-9, Ok(Some(da.max(dad)))));
    out.push(check("frame_resolution", 1e-7, frame_check(ctx)));
}

fn squeezed_checks(ctx: &Ctx, u: f64, v: f64, out: &mut Vec<CheckResult>) {
    out.push(check(
        "metaplectic_covariance",
        1e-6,
        metaplectic::metaplectic_covariance_check(u, v, 0.0, ctx.trunc).map(|(d, _)| Some(d)),
    ));
    let xs: Vec<f64> = (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect();
    out.push(check(
        "squeezed_wavefunction",
        1e-5,
        over_points(&ctx.points[..1], |z| {
            let (q, p) = PhasePoint::from_z(z).qp();
            metaplectic::squeezed_wavefunction_check(u, v, q, p, &xs, ctx.trunc)
        }),
    ));
}

/// Runs every check that applies to the configured family, in a fixed order.
pub fn run_checks(cfg: &ExperimentConfig, points: Option<&[Complex64]>, vectors: usize, seed: u64) -> Vec<CheckResult> {
    let points: Vec<Complex64> = match points {
        Some(p) => p.to_vec(),
        None => DEFAULT_POINTS.iter().map(|&(x, y)| Complex64::new(x, y)).collect(),
    };
    let ctx = Ctx {
        fam: &cfg.family,
        trunc: cfg.trunc,
        opts: EvalOptions {
            epsilon: cfg.epsilon,
            ..EvalOptions::default()
        },
        points,
        seed,
        vectors,
    };
    let mut out = Vec::new();
    let twice = families::dual(&families::dual(ctx.fam));
    out.push(check(
        "dual_involution",
        0.0,
        Ok(Some(if twice == *ctx.fam { 0.0 } else { 1.0 })),
    ));
    if matches!(
        ctx.fam,
        FamilyDescriptor::Canonical
            | FamilyDescriptor::GilmorePerelomov { .. }
            | FamilyDescriptor::BarutGirardello { .. }
            | FamilyDescriptor::Squeezed { .. }
    ) {
        out.push(check(
            "unit_norm",
            1e-10,
            over_points(&ctx.points, |z| Ok((ctx.eval(ctx.fam, z)?.norm() - 1.0).abs())),
        ));
    }
    match ctx.fam {
        FamilyDescriptor::PhotonAdded { lambda, prefactor } => photon_added_checks(&ctx, *lambda, prefactor, &mut out),
        FamilyDescriptor::Binomial { mu } => binomial_checks(&ctx, *mu, &mut out),
        FamilyDescriptor::Squeezed { u, v } => squeezed_checks(&ctx, *u, *v, &mut out),
        fam => {
            let spec = fam.nonlinearity().expect("remaining families are of rescaled type");
            if spec == NonlinearitySpec::Canonical {
                canonical_checks(&ctx, &mut out);
            }
            nonlinear_checks(&ctx, &spec, &mut out);
            if spec == NonlinearitySpec::Canonical {
                out.push(check("frame_resolution", 1e-7, frame_check(&ctx)));
            }
        }
    }
    out.push(check("gelfand_ordering", 0.0, gelfand_violations(&ctx)));
    out
}

fn check_cells(c: &CheckResult) -> Vec<Cell> {
    vec![
        c.name.as_str().into(),
        c.deviation.into(),
        c.tolerance.into(),
        c.status.as_str().into(),
        sanitize(&c.note).into(),
    ]
}
