//! Dispatch of a parsed configuration to the library and report writing.

use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, ScanGrid, TaskParams};
use super::csv::{complex_cells, Cell, Table};
use super::verify::{self, CheckResult, CheckStatus};
use crate::error::CsError;
use crate::families::{self, EvalOptions, FamilyDescriptor, Prefactor};
use crate::moments::{self, default_grid, fit_discrete_measure, target_moments};

/// Seed of the random-vector checks when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_c0de;

/// Tolerance on `|⟨η^{dual}_z | η_z⟩ - expected|` in the dual-compare task.
pub const DUAL_COMPARE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write report: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Numeric(#[from] CsError),
}

impl RunError {
    /// Process exit status: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("."),
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Number of failed assertions.
    pub failures: usize,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            1
        }
    }
}

/// Short machine-readable tag for an error, used in status columns.
pub fn error_tag(e: &CsError) -> &'static str {
    match e {
        CsError::TruncationInsufficient { .. } => "truncation_insufficient",
        CsError::GridOverflow { .. } => "grid_overflow",
        CsError::NonPositiveFactor { .. } => "non_positive_factor",
        CsError::NonPositiveMetric { .. } => "non_positive_metric",
        CsError::PreconditionViolated(_) => "precondition_violated",
        CsError::NotSymplectic { .. } => "not_symplectic",
        CsError::OutsideDomain { .. } => "outside_domain",
        CsError::Unsupported(_) => "unsupported",
        CsError::Degenerate(_) => "degenerate",
        CsError::IllConditioned { .. } => "ill_conditioned",
        CsError::Infeasible { .. } => "infeasible",
        CsError::SupportMismatch { .. } => "support_mismatch",
        CsError::Overflow { .. } => "overflow",
        CsError::OutOfTable { .. } => "out_of_table",
        CsError::PrefactorVanishes { .. } => "prefactor_vanishes",
        CsError::DimensionMismatch { .. } => "dimension_mismatch",
        CsError::InvalidParameter(_) => "invalid_parameter",
    }
}

fn eval_options(cfg: &ExperimentConfig) -> EvalOptions {
    EvalOptions {
        epsilon: cfg.epsilon,
        ..EvalOptions::default()
    }
}

fn header(cfg: &ExperimentConfig) -> String {
    format!(
        "{} on {} (n_max = {}, tail_tol = {:e})",
        cfg.task(),
        cfg.family.name(),
        cfg.trunc.n_max(),
        cfg.trunc.tail_tol()
    )
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut outcome = RunOutcome {
        summary: vec![header(cfg)],
        files: Vec::new(),
        failures: 0,
    };
    match &cfg.params {
        TaskParams::Eval { z } => run_eval(cfg, z, &opts.out_dir, &mut outcome)?,
        TaskParams::DualCompare { z } => run_dual_compare(cfg, z, &opts.out_dir, &mut outcome)?,
        TaskParams::Verify { z, vectors } => {
            let checks = verify::run_checks(cfg, z.as_deref(), *vectors, opts.seed);
            record_checks(&checks, "verify.csv", &opts.out_dir, &mut outcome)?;
        }
        TaskParams::Moments {
            max_n,
            grid_nodes,
            fit_tol,
            frame_tol,
            n_theta,
        } => run_moments(cfg, *max_n, *grid_nodes, *fit_tol, *frame_tol, *n_theta, &opts.out_dir, &mut outcome)?,
        TaskParams::Scan(grid) => run_scan(cfg, grid, &opts.out_dir, &mut outcome)?,
    }
    outcome.summary.push(if outcome.failures == 0 {
        "result: ok".into()
    } else {
        format!("result: {} failed", outcome.failures)
    });
    Ok(outcome)
}

fn record_checks(checks: &[CheckResult], file: &str, dir: &Path, outcome: &mut RunOutcome) -> Result<(), RunError> {
    for c in checks {
        outcome.summary.push(c.summary_line());
        if c.status.is_failure() {
            outcome.failures += 1;
        }
    }
    outcome.files.push(verify::checks_table(checks).write_atomic(dir, file)?);
    Ok(())
}

fn run_eval(cfg: &ExperimentConfig, zs: &[Complex64], dir: &Path, outcome: &mut RunOutcome) -> Result<(), RunError> {
    let opts = eval_options(cfg);
    let dual = families::dual(&cfg.family);
    let mut states = Table::new(&[
        "point", "re_z", "im_z", "status", "norm_in_h", "domain_ok", "dual_overlap_re", "dual_overlap_im",
    ]);
    let mut coeffs = Table::new(&["point", "n", "re", "im"]);
    for (i, &z) in zs.iter().enumerate() {
        let [zr, zi] = complex_cells(z);
        match families::evaluate_with(&cfg.family, z, cfg.trunc, &opts) {
            Ok(res) => {
                let ov = families::evaluate_with(&dual, z, cfg.trunc, &opts)
                    .map(|d| d.vector.inner(&res.vector))
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                let [or, oi] = complex_cells(ov);
                states.push(vec![
                    i.into(),
                    zr,
                    zi,
                    "ok".into(),
                    res.norm_in_h.into(),
                    res.domain_ok.into(),
                    or,
                    oi,
                ]);
                for (n, c) in res.vector.coeffs().iter().enumerate() {
                    let [cr, ci] = complex_cells(*c);
                    coeffs.push(vec![i.into(), n.into(), cr, ci]);
                }
                outcome.summary.push(format!(
                    "z = {z}: norm {:.12e}, dual overlap {:.12e}{:+.12e}i",
                    res.norm_in_h, ov.re, ov.im
                ));
            }
            Err(e) => {
                outcome.failures += 1;
                outcome.summary.push(format!("FAIL  z = {z}: {e}"));
                states.push(vec![
                    i.into(),
                    zr,
                    zi,
                    error_tag(&e).into(),
                    f64::NAN.into(),
                    false.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                ]);
            }
        }
    }
    outcome.files.push(states.write_atomic(dir, "eval.csv")?);
    outcome.files.push(coeffs.write_atomic(dir, "eval_coeffs.csv")?);
    Ok(())
}

/// The value `⟨η^{dual}_z | η_z⟩` should take, when known in closed form.
///
/// Rescaled-type and binomial families differ from the pair
/// `(T⁻¹ η_z, T η_z)`, whose pairing is 1, only by the real factors
/// `√(e^{|z|²}/𝒩(|z|²))`, so the expected overlap is
/// `e^{|z|²} / √(𝒩 𝒩_dual)`.
pub fn expected_dual_overlap(fam: &FamilyDescriptor, z: Complex64) -> Option<Result<Complex64, CsError>> {
    match fam {
        FamilyDescriptor::PhotonAdded { lambda, prefactor } => match prefactor {
            Prefactor::Direct(g) if g.is_one() => Some(Ok(families::photon_added_dual_overlap(*lambda, z))),
            _ => None,
        },
        FamilyDescriptor::Squeezed { .. } => None,
        _ => Some((|| {
            let w = fam.weight(z)?;
            let wd = families::dual(fam).weight(z)?;
            // log form keeps large |z| finite
            Ok(Complex64::new((z.norm_sqr() - 0.5 * (w.ln() + wd.ln())).exp(), 0.0))
        })()),
    }
}

fn run_dual_compare(cfg: &ExperimentConfig, zs: &[Complex64], dir: &Path, outcome: &mut RunOutcome) -> Result<(), RunError> {
    let opts = eval_options(cfg);
    let dual = families::dual(&cfg.family);
    let mut table = Table::new(&[
        "point",
        "re_z",
        "im_z",
        "status",
        "overlap_re",
        "overlap_im",
        "expected_re",
        "expected_im",
        "deviation",
    ]);
    let nan = Complex64::new(f64::NAN, f64::NAN);
    for (i, &z) in zs.iter().enumerate() {
        let ov = families::evaluate_with(&cfg.family, z, cfg.trunc, &opts).and_then(|a| {
            families::evaluate_with(&dual, z, cfg.trunc, &opts).map(|d| d.vector.inner(&a.vector))
        });
        let expected = expected_dual_overlap(&cfg.family, z).transpose();
        let (status, ov, ex, dev) = match (ov, expected) {
            (Ok(ov), Ok(Some(ex))) => {
                let dev = (ov - ex).norm();
                let status = if dev <= DUAL_COMPARE_TOL { "pass" } else { "fail" };
                (status.to_string(), ov, ex, dev)
            }
            (Ok(ov), Ok(None)) => ("no_closed_form".into(), ov, nan, f64::NAN),
            (Err(e), _) | (_, Err(e)) => (error_tag(&e).into(), nan, nan, f64::NAN),
        };
        if status != "pass" && status != "no_closed_form" {
            outcome.failures += 1;
        }
        outcome
            .summary
            .push(format!("{:<5} z = {z}: overlap {:.12e}{:+.12e}i, deviation {dev:.3e}", status.to_uppercase(), ov.re, ov.im));
        let [zr, zi] = complex_cells(z);
        let [or, oi] = complex_cells(ov);
        let [er, ei] = complex_cells(ex);
        table.push(vec![i.into(), zr, zi, status.into(), or, oi, er, ei, dev.into()]);
    }
    outcome.files.push(table.write_atomic(dir, "dual_compare.csv")?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_moments(
    cfg: &ExperimentConfig,
    max_n: usize,
    grid_nodes: usize,
    fit_tol: f64,
    frame_tol: f64,
    n_theta: Option<usize>,
    dir: &Path,
    outcome: &mut RunOutcome,
) -> Result<(), RunError> {
    let spec = cfg.family.moment_spec().ok_or_else(|| {
        CsError::Unsupported(format!("no radial moment problem for the {} family", cfg.family.name()))
    })?;
    // the frame is checked on the block spanned by the fitted moments
    let trunc = cfg.trunc.resized(max_n + cfg.trunc.edge_margin() + 2)?;
    let targets = target_moments(&spec, max_n + 1)?;
    let nodes = default_grid(cfg.family.radius(), trunc.n_max(), grid_nodes);
    let fit = fit_discrete_measure(&targets, &nodes, max_n, fit_tol);
    let mut checks = Vec::new();
    match fit {
        Ok(fit) => {
            let (nodes, weights) = fit.measure.nodes_weights()?;
            let mut measure = Table::new(&["k", "node", "weight"]);
            for (k, (r, w)) in nodes.iter().zip(&weights).enumerate() {
                measure.push(vec![k.into(), (*r).into(), (*w).into()]);
            }
            outcome.files.push(measure.write_atomic(dir, "measure.csv")?);
            let check = moments::verify_measure(&fit.measure, &targets, fit_tol)?;
            let mut table = Table::new(&["n", "target", "fitted", "residual"]);
            let values = targets.values();
            for (n, (m, e)) in values.iter().zip(&check.relative_errors).enumerate() {
                let fitted: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(r, w)| w * r.powi(2 * n as i32))
                    .sum();
                table.push(vec![n.into(), (*m).into(), fitted.into(), Cell::Real(*e)]);
            }
            outcome.files.push(table.write_atomic(dir, "moments.csv")?);
            outcome.summary.push(format!(
                "fitted {} nodes ({} with positive weight), condition {:.3e}",
                nodes.len(),
                weights.iter().filter(|w| **w > 0.0).count(),
                fit.condition
            ));
            checks.push(result("fit_residual", fit.residual, fit_tol));
            let frame = moments::frame_operator(&cfg.family, &fit.measure, n_theta.unwrap_or(2 * trunc.n_max()), trunc);
            checks.push(match frame {
                Ok(r) => result("frame_deviation", r.operator_norm_deviation, frame_tol),
                Err(e) => error_result("frame_deviation", frame_tol, &e),
            });
        }
        Err(e) => checks.push(error_result("fit_residual", fit_tol, &e)),
    }
    record_checks(&checks, "moments_checks.csv", dir, outcome)
}

fn result(name: &str, deviation: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        deviation,
        tolerance,
        status: if deviation <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail },
        note: String::new(),
    }
}

fn error_result(name: &str, tolerance: f64, e: &CsError) -> CheckResult {
    CheckResult {
        name: name.into(),
        deviation: f64::NAN,
        tolerance,
        status: CheckStatus::Error,
        note: e.to_string(),
    }
}

fn run_scan(cfg: &ExperimentConfig, grid: &ScanGrid, dir: &Path, outcome: &mut RunOutcome) -> Result<(), RunError> {
    let opts = eval_options(cfg);
    let dual = families::dual(&cfg.family);
    let points: Vec<(f64, f64)> = (0..grid.n_r)
        .flat_map(|i| {
            let r = if grid.n_r == 1 {
                grid.r_min
            } else {
                grid.r_min + (grid.r_max - grid.r_min) * i as f64 / (grid.n_r - 1) as f64
            };
            (0..grid.n_theta).map(move |j| (r, 2.0 * std::f64::consts::PI * j as f64 / grid.n_theta as f64))
        })
        .collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(r, theta)| {
            let z = Complex64::from_polar(r, theta);
            let [zr, zi] = complex_cells(z);
            let evaluated = families::evaluate_with(&cfg.family, z, cfg.trunc, &opts)
                .and_then(|res| Ok((res.norm_in_h, cfg.family.weight(z)?, res)));
            let (status, norm, weight, ov) = match evaluated {
                Ok((norm, weight, res)) => {
                    let ov = families::evaluate_with(&dual, z, cfg.trunc, &opts)
                        .map(|d| d.vector.inner(&res.vector))
                        .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                    ("ok", norm, weight, ov)
                }
                Err(e) => (error_tag(&e), f64::NAN, f64::NAN, Complex64::new(f64::NAN, f64::NAN)),
            };
            let [or, oi] = complex_cells(ov);
            vec![r.into(), theta.into(), zr, zi, status.into(), norm.into(), weight.into(), or, oi]
        })
        .collect();
    let mut table = Table::new(&[
        "r", "theta", "re_z", "im_z", "status", "norm_in_h", "weight", "dual_overlap_re", "dual_overlap_im",
    ]);
    let mut ok = 0usize;
    for row in rows {
        if row[4] == Cell::from("ok") {
            ok += 1;
        }
        table.push(row);
    }
    outcome
        .summary
        .push(format!("scanned {} points, {ok} evaluated", table.len()));
    outcome.files.push(table.write_atomic(dir, "scan.csv")?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    fn run_text(text: &str) -> (RunOutcome, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(text).unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            seed: 1,
        };
        (run(&cfg, &opts).unwrap(), dir)
    }

    #[test]
    fn eval_photon_added_overlap() {
        let (out, dir) = run_text("[family]\nkind = photon_added\nlambda = 0.5\n[truncation]\nn_max = 60\n[task]\nname = eval\nz = i\n");
        assert_eq!(out.failures, 0);
        let csv = std::fs::read_to_string(dir.path().join("eval.csv")).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let ov = Complex64::new(row[6].parse().unwrap(), row[7].parse().unwrap());
        let expect = Complex64::new(-0.25, -1.0).exp();
        assert!((ov - expect).norm() < 1e-8, "{ov} vs {expect}");
    }

    #[test]
    fn dual_compare_gp_bg() {
        let (out, _dir) = run_text("[family]\nkind = gp\nkappa = 1\n[truncation]\nn_max = 120\n[task]\nname = dual-compare\nz = 0.3, 0.2-0.4i\n");
        assert_eq!(out.failures, 0, "{:?}", out.summary);
    }

    #[test]
    fn moments_for_gp() {
        let (out, dir) = run_text("[family]\nkind = gp\nkappa = 1\n[task]\nname = moments\n");
        assert_eq!(out.failures, 0, "{:?}", out.summary);
        let csv = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
        assert!(csv.starts_with("n,target,fitted,residual\n"));
        assert!(dir.path().join("measure.csv").exists());
    }

    #[test]
    fn scan_marks_points_outside_the_disc() {
        let (out, dir) = run_text("[family]\nkind = gp\nkappa = 1\n[truncation]\nn_max = 80\n[task]\nname = scan\nr_max = 1.5\nn_r = 4\nn_theta = 3\n");
        assert_eq!(out.failures, 0);
        let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
        assert_eq!(csv.lines().count(), 13);
        assert!(csv.contains("outside_domain"));
    }
}
