//! Numerical laboratory for accretive-operator perturbation bounds on
//! finite-dimensional complex Hilbert spaces.
//!
//! The library certifies (m-)accretivity of complex matrices, computes
//! the optimal relative-bound constant of a perturbation pair, verifies
//! the resulting sectorial resolvent estimates, probes holomorphic
//! contraction semigroups and fractional powers, and measures Trotter
//! product-formula convergence rates.

pub mod accretivity;
pub mod cli;
pub mod error;
pub mod io;
pub mod numerics;
pub mod perturbation;
pub mod report;
pub mod semigroup;
pub mod trotter;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, SectorAngle, ToleranceConfig};
pub use perturbation::{BValue, Family, OperatorPair, PerturbationCertificate};
