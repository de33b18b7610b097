// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: wrong dimension, non-Hermitian matrix, missing entry.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// Evaluation point coincides with a discrete spectral atom.
    #[error("pole error: frequency {0} coincides with a discrete bath atom")]
    Pole(f64),
    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: estimated error {achieved:.3e} exceeds target {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },
    /// Generic numerical breakdown (eigensolver, overflow, singular solve).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A documented precondition (for example detailed balance) is violated.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Two Bohr frequencies are too close for a divided-difference formula.
    #[error("near-degenerate frequencies: {0}")]
    NearDegenerate(String),
    /// The null space of a generator is not one-dimensional.
    #[error("steady state is not unique: null space has dimension {0}")]
    NonUniqueSteadyState(usize),
    /// A result violates an invariant it must satisfy.
    #[error("consistency error: {0}")]
    Consistency(String),
    /// A problem size guard was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The requested solver exists only for a restricted class of systems.
    #[error("not implemented: {0}")]
    NotImplemented(String),
    /// Linear equation without a unique solution.
    #[error("singular equation: {0}")]
    Singular(String),
    /// Diagnostic failure signalling inconsistent spectral input.
    #[error("diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
