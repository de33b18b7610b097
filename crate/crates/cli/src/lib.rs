// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Batch front end for `thermocorr`: configuration parsing and task runners.

pub mod config;
pub mod error;
pub mod tasks;

pub use config::{RunConfig, Task};
pub use error::CliError;
pub use tasks::{run_corrections, run_evolve, run_steadystate, run_validate, RunOptions};
