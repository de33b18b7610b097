// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Second-order Hamiltonian corrections and weak-coupling master equations
//! for open quantum systems.

pub mod bath;
pub mod corrections;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod perturbative;
pub mod quadrature;
pub mod system;
pub mod validation;

pub use error::{Error, Result};
