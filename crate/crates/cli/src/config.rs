// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a JSON document describing the system, its baths and the task.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thermocorr::bath::{BathModel, Mode};
use thermocorr::linalg::CMat;
use thermocorr::operators::{CorrectionKind, HermitianOperator, UpsilonTable};
use thermocorr::corrections::KossakowskiSpec;
use thermocorr::quadrature::QuadratureConfig;
use thermocorr::system::OpenSystem;

use crate::error::CliError;

/// Complex number written as `[re, im]`.
pub type Pair = [f64; 2];
/// Complex matrix written as rows of `[re, im]` pairs.
pub type PairMatrix = Vec<Vec<Pair>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Corrections,
    Evolve,
    Steadystate,
    Validate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub couplings: Vec<CouplingSpec>,
    pub baths: BTreeMap<String, BathSpec>,
    pub beta: f64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    pub task: Task,
    #[serde(default)]
    pub quadrature: Option<QuadratureOverrides>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub evolve: Option<EvolveSpec>,
    #[serde(default)]
    pub steadystate: Option<SteadySpec>,
    #[serde(default)]
    pub validate: Option<ValidateSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemSpec {
    Tls { omega0: f64 },
    Hamiltonian(PairMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub operator: OperatorSpec,
    pub bath: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum OperatorSpec {
    Pauli { x: f64, y: f64, z: f64 },
    Matrix(PairMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BathSpec {
    Ohmic { gamma_c: f64, cutoff: f64 },
    Discrete { modes: Vec<ModeSpec> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub frequency: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `βω₀` at fixed `β` (two-level systems).
    BetaOmega0,
    /// `ω₀` (two-level systems).
    Omega0,
    /// System-bath coupling strength (evolve and steadystate tasks).
    Lambda,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Redfield,
    Davies,
    Cumulant,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::Redfield => "redfield",
            Equation::Davies => "davies",
            Equation::Cumulant => "cumulant",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    Gibbs,
    Pure(Vec<Pair>),
    Matrix(PairMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub equations: Vec<Equation>,
    pub initial_state: InitialState,
    /// Time after which cumulant coefficients are taken at their long-time values.
    #[serde(default)]
    pub saturation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySpec {
    pub lambda: f64,
    pub equations: Vec<Equation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub alpha: usize,
    pub beta: usize,
    pub omega: f64,
    pub omega_p: f64,
    pub value: Pair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomKossakowski {
    pub k: Vec<TableEntry>,
    #[serde(default)]
    pub dynamical: Vec<TableEntry>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    #[serde(default)]
    pub kossakowski: Option<CustomKossakowski>,
    #[serde(default)]
    pub skip_oracle: bool,
}

fn field(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config(format!("{path}: {}", msg.into()))
}

fn matrix(path: &str, rows: &PairMatrix) -> Result<CMat, CliError> {
    let n = rows.len();
    if n == 0 {
        return Err(field(path, "matrix is empty"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(field(&format!("{path}[{i}]"), format!("expected {n} entries, found {}", r.len())));
        }
        if r.iter().flatten().any(|v| !v.is_finite()) {
            return Err(field(&format!("{path}[{i}]"), "entries must be finite"));
        }
    }
    Ok(CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

fn hermitian(path: &str, m: CMat) -> Result<HermitianOperator, CliError> {
    HermitianOperator::new(m).map_err(|e| field(path, e.to_string()))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parse and validate; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(field("beta", "must be positive and finite"));
        }
        if self.couplings.is_empty() {
            return Err(field("couplings", "at least one coupling is required"));
        }
        for (i, c) in self.couplings.iter().enumerate() {
            if !self.baths.contains_key(&c.bath) {
                return Err(field(&format!("couplings[{i}].bath"), format!("unknown bath id '{}'", c.bath)));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(field("sweep.values", "must not be empty"));
            }
            if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(field(&format!("sweep.values[{i}]"), "must be finite"));
            }
        }
        self.system(None)?;
        Ok(())
    }

    pub fn is_tls(&self) -> bool {
        matches!(self.system, SystemSpec::Tls { .. })
    }

    pub fn omega0(&self) -> Option<f64> {
        match self.system {
            SystemSpec::Tls { omega0 } => Some(omega0),
            SystemSpec::Hamiltonian(_) => None,
        }
    }

    pub fn quadrature(&self, abs_tol: Option<f64>, rel_tol: Option<f64>) -> QuadratureConfig {
        let mut q = QuadratureConfig::default();
        if let Some(o) = &self.quadrature {
            q.abs_tol = o.abs_tol.unwrap_or(q.abs_tol);
            q.rel_tol = o.rel_tol.unwrap_or(q.rel_tol);
            q.max_subdivisions = o.max_subdivisions.unwrap_or(q.max_subdivisions);
        }
        q.abs_tol = abs_tol.unwrap_or(q.abs_tol);
        q.rel_tol = rel_tol.unwrap_or(q.rel_tol);
        q
    }

    /// Bath ids in deterministic order, with their models.
    pub fn bath_models(&self) -> Result<Vec<(String, BathModel)>, CliError> {
        self.baths
            .iter()
            .map(|(id, b)| {
                let model = match b {
                    BathSpec::Ohmic { gamma_c, cutoff } => BathModel::ohmic(self.beta, *gamma_c, *cutoff),
                    BathSpec::Discrete { modes } => BathModel::discrete(
                        self.beta,
                        modes
                            .iter()
                            .map(|m| Mode {
                                frequency: m.frequency,
                                coupling: m.coupling,
                            })
                            .collect(),
                    ),
                };
                model.map(|m| (id.clone(), m)).map_err(|e| field(&format!("baths.{id}"), e.to_string()))
            })
            .collect()
    }

    /// The open system, optionally with a replacement two-level splitting.
    pub fn system(&self, omega0: Option<f64>) -> Result<OpenSystem, CliError> {
        let h0 = match &self.system {
            SystemSpec::Tls { omega0: w } => {
                let w = omega0.unwrap_or(*w);
                if !(w.is_finite() && w != 0.0) {
                    return Err(field("system.tls.omega0", "must be finite and nonzero"));
                }
                HermitianOperator::tls_hamiltonian(w)
            }
            SystemSpec::Hamiltonian(rows) => hermitian("system.hamiltonian", matrix("system.hamiltonian", rows)?)?,
        };
        let baths = self.bath_models()?;
        let index: BTreeMap<&str, usize> = baths.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();
        let mut couplings = Vec::with_capacity(self.couplings.len());
        for (i, c) in self.couplings.iter().enumerate() {
            let path = format!("couplings[{i}].operator");
            let op = match &c.operator {
                OperatorSpec::Pauli { x, y, z } => {
                    if h0.dim() != 2 {
                        return Err(field(&path, "Pauli couplings require a two-level system"));
                    }
                    HermitianOperator::pauli_vector(*x, *y, *z)
                }
                OperatorSpec::Matrix(rows) => hermitian(&path, matrix(&path, rows)?)?,
            };
            if op.dim() != h0.dim() {
                return Err(field(&path, format!("dimension {} does not match the system dimension {}", op.dim(), h0.dim())));
            }
            let b = *index
                .get(c.bath.as_str())
                .ok_or_else(|| field(&format!("couplings[{i}].bath"), format!("unknown bath id '{}'", c.bath)))?;
            couplings.push((op, b));
        }
        OpenSystem::new(h0, couplings, baths.into_iter().map(|(_, b)| b).collect())
            .map_err(|e| field("system", e.to_string()))
    }

    pub fn custom_kossakowski(&self) -> Option<KossakowskiSpec> {
        let c = self.validate.as_ref()?.kossakowski.as_ref()?;
        let table = |entries: &[TableEntry]| {
            let mut t = UpsilonTable::new(CorrectionKind::Dynamical);
            for e in entries {
                t.insert(e.alpha, e.beta, e.omega, e.omega_p, Complex64::new(e.value[0], e.value[1]));
            }
            t
        };
        Some(KossakowskiSpec::Custom {
            k: table(&c.k),
            dynamical: table(&c.dynamical),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TLS: &str = r#"{
        "system": {"tls": {"omega0": 1.0}},
        "couplings": [{"operator": {"pauli": {"x": 0.7071067811865476, "y": 0.0, "z": 0.7071067811865476}}, "bath": "b"}],
        "baths": {"b": {"type": "ohmic", "gamma_c": 1.0, "cutoff": 50.0}},
        "beta": 1.0,
        "task": "corrections"
    }"#;

    #[test]
    fn parses_tls_config() {
        let c = RunConfig::from_json(TLS).unwrap();
        assert!(c.is_tls());
        assert_eq!(c.task, Task::Corrections);
        let sys = c.system(None).unwrap();
        assert_eq!(sys.dim(), 2);
    }

    #[test]
    fn unknown_bath_is_reported_with_field() {
        let bad = TLS.replace("\"bath\": \"b\"", "\"bath\": \"zz\"");
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("couplings[0].bath"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = RunConfig::from_json("{\n \"beta\": ,\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn non_hermitian_matrix_rejected() {
        let bad = TLS.replace(
            r#"{"tls": {"omega0": 1.0}}"#,
            r#"{"hamiltonian": [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}"#,
        );
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("system.hamiltonian"), "{err}");
    }

    #[test]
    fn quadrature_overrides_apply_in_order() {
        let mut c = RunConfig::from_json(TLS).unwrap();
        c.quadrature = Some(QuadratureOverrides {
            abs_tol: Some(1e-6),
            rel_tol: None,
            max_subdivisions: Some(10),
        });
        let q = c.quadrature(None, Some(1e-5));
        assert_eq!((q.abs_tol, q.rel_tol, q.max_subdivisions), (1e-6, 1e-5, 10));
    }
}
