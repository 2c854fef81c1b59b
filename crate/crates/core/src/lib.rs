//! Numerical laboratory for multi-bubble approximate solutions of the
//! critical Yamabe equation `-Δu = γ |u|^{p-1} u` on `ℝ^n`.
//!
//! The library constructs sign-changing ansatz fields made of a central
//! positive bubble surrounded by rings of negative scaled bubbles, evaluates
//! their defect (error field) in closed form, integrates weighted norms and
//! energies over `ℝ^n` with symmetry-aware quadrature, verifies the closed
//! form asymptotics of the ring interaction sums, assembles and solves the
//! reduced balancing system for the scaling parameters, and certifies the
//! rank of the invariance-generated nullspace functions.
//!
//! Modules map the artifact one-to-one:
//!
//! * [`config`] — parameters, derived scalars and bubble-center lattices;
//! * [`bubble`] — bubbles, ansatz fields, kernel elements, rank functions;
//! * [`error_field`] — pointwise error, interior split, cutoffs, symmetry
//!   residuals;
//! * [`quadrature`] — weighted `L^q` norms, energy, kernel projections;
//! * [`asymptotics`] — ring interaction sums, moments, reduced system;
//! * [`rank`] — Gram matrix rank certification and independence probes;
//! * [`study`] — batch studies with CSV/JSON reports (driven by the `bt`
//!   binary).

pub mod asymptotics;
pub mod bubble;
pub mod config;
pub mod error_field;
pub mod point;
pub mod quadrature;
pub mod rank;
pub(crate) mod sample;
pub mod study;
#[cfg(test)]
pub(crate) mod testutil;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented bound. The message names the bound.
    #[error("validation: {0}")]
    Validation(String),
    /// Sequence lengths inconsistent with the requested pattern.
    #[error("shape: {0}")]
    Shape(String),
    /// An argument is outside the domain of the operation.
    #[error("domain: {0}")]
    Domain(String),
    /// An integral keeps growing under node refinement.
    #[error("divergence: integral grew by {growth:.3e} under tail refinement (tolerance {tol:.3e})")]
    Divergence { growth: f64, tol: f64 },
    /// Refinement budget exhausted before the requested tolerance was met.
    #[error("tolerance not met: last {last:.17e}, previous {previous:.17e}")]
    ToleranceNotMet { last: f64, previous: f64 },
    /// A fixed-point iteration failed to converge.
    #[error("fixed point: no convergence after {iterations} iterations")]
    FixedPoint { iterations: usize },
    /// Malformed configuration file.
    #[error("config: {0}")]
    Config(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
