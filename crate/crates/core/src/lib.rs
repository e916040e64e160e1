//! Generalized coherent states in a truncated Fock space: canonical,
//! nonlinear, photon-added, binomial, SU(1,1) and squeezed families, their
//! dual pairs, the deformed oscillator algebras they generate, and numerical
//! resolutions of the identity through radial moment problems.

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod error;
pub mod families;
pub mod fock;
pub mod linalg;
pub mod moments;
pub mod nonlinearity;
pub mod rescaling;
pub mod special;

pub use error::{CsError, Result};
pub use families::{dual, evaluate, CSResult, EntireSeries, FamilyDescriptor};
pub use fock::{FockOperator, FockVector, PhasePoint, Structure, TruncationPolicy};
pub use nonlinearity::{NonlinearitySpec, SpecKind, TrappedIonVariant};
pub use rescaling::{Extended, RadiusReport, RescalingOperator};
