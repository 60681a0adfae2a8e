//! Operator-valued estimation from generalised quantum measurements.

pub mod error;
pub mod estimation;
pub mod fock;
pub mod heterodyne;
pub mod naimark;
pub mod operator;
pub mod pom;
pub mod random;
pub mod relations;
pub mod report;
pub mod scenarios;
pub mod suites;
pub mod tolerance;

pub use error::{Error, Result};
pub use operator::{CMatrix, CVector, DensityOperator, HermitianOperator, Ket, Spectrum, Tensor, C64};
pub use pom::{GridSpec, OutcomeOperator, OutcomeValue, Pom, PomOutcome, ValidationReport};
pub use tolerance::Tolerances;
