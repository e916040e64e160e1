use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsError {
    /// The neglected coefficient mass (or edge leakage) exceeds the policy tolerance.
    #[error("truncation insufficient: neglected mass {tail:.3e} exceeds tolerance {tol:.3e} at n_max = {n_max}")]
    TruncationInsufficient { tail: f64, tol: f64, n_max: usize },

    #[error("Hermite recurrence cannot be evaluated at x = {x} with n_max = {n_max}")]
    GridOverflow { x: f64, n_max: usize },

    #[error("nonlinearity factor f({n}) = {value} is not strictly positive and finite")]
    NonPositiveFactor { n: usize, value: f64 },

    #[error("metric entry F[{n},{n}] = {value} is not strictly positive")]
    NonPositiveMetric { n: usize, value: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("matrix is not symplectic: det = {det}")]
    NotSymplectic { det: f64 },

    #[error("z = {z} lies outside the domain |z| < (1 - eps) L with L = {radius}")]
    OutsideDomain { z: Complex64, radius: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("ill-conditioned problem: condition estimate {cond:.3e} exceeds {limit:.3e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("infeasible moment problem: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Infeasible { residual: f64, tol: f64 },

    #[error("measure support radius {support} exceeds the convergence radius {radius}")]
    SupportMismatch { support: f64, radius: f64 },

    #[error("log-moment {log_value:.1} at n = {n} is outside the representable range")]
    Overflow { n: usize, log_value: f64 },

    #[error("tabulated nonlinearity has {len} entries, evaluation requested at n = {n}")]
    OutOfTable { n: usize, len: usize },

    #[error("prefactor G vanishes (|G| = {modulus:.3e}) at z = {z}")]
    PrefactorVanishes { z: Complex64, modulus: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CsError>;
