// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! The four tasks: correction sweeps, evolution traces, steady states, validation.

use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use thermocorr::bath::{BathModel, Spectrum};
use thermocorr::corrections::{
    dynamical_from_values, dynamical_table, mean_force_kernel, mean_force_table, redfield_k_from_values,
    steady_offdiag_from_values, steady_state_table, tls_diagonal_steady, DiagonalEquation, KossakowskiSpec,
    MeanForceForm,
};
use thermocorr::generators::{
    build_davies_generator, build_redfield_generator, propagate, steady_state_of_generator, DensityMatrix, Evolution,
};
use thermocorr::linalg::{c64, CMat};
use thermocorr::operators::UpsilonTable;
use thermocorr::quadrature::QuadratureConfig;
use thermocorr::system::OpenSystem;
use thermocorr::validation::{self, Check, SuiteConfig};

use crate::config::{Equation, InitialState, OperatorSpec, RunConfig, SweepParameter, SystemSpec};
use crate::error::CliError;

/// Default two-level table abscissa: `βω₀` from 0.1 to 5 in 20 points.
pub const DEFAULT_BETA_OMEGA0: (f64, f64, usize) = (0.1, 5.0, 20);

pub const COEFFICIENT_NAMES: [&str; 3] = ["offdiag_re", "offdiag_im", "diag_diff"];
pub const CORRECTION_KINDS: [&str; 4] = ["mf", "dyn", "st-redfield", "st-cumulant"];

/// Command-line settings layered over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tol_abs: Option<f64>,
    pub tol_rel: Option<f64>,
    pub threads: Option<usize>,
    pub skip_oracle: bool,
}

/// Fixed-width scientific notation with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

/// One row of the two-level coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub sweep_value: f64,
    pub coefficient_name: &'static str,
    pub correction_kind: &'static str,
    pub value_re: f64,
    pub value_im: f64,
    pub error: Option<String>,
}

/// Complex combinations for one two-level splitting, scaled by `β/γ_c`:
/// `[kind] → (Υ(0,−ω₀) − Υ(ω₀,0), Υ(ω₀,ω₀) − Υ(−ω₀,−ω₀))`.
pub fn tls_combinations(bath: &BathModel, omega0: f64, scale: f64, cfg: &QuadratureConfig) -> thermocorr::Result<[(Complex64, Complex64); 4]> {
    let w = omega0;
    let beta = bath.beta;
    let m = bath.measure();
    let spec = |x: f64| -> thermocorr::Result<(f64, f64)> { Ok((m.gamma(x), m.lamb_shift(x, cfg)?)) };
    let (gp, sp) = spec(w)?;
    let (gm, sm) = spec(-w)?;
    let (g0, s0) = spec(0.0)?;
    let at = |x: f64| if x > 0.0 { (gp, sp) } else if x < 0.0 { (gm, sm) } else { (g0, s0) };
    let redfield = |a: f64, b: f64| {
        let ((ga, sa), (gb, sb)) = (at(a), at(b));
        (redfield_k_from_values(ga, sa, gb, sb), dynamical_from_values(ga, sa, gb, sb))
    };
    let steady = |a: f64, b: f64| {
        let (k_direct, dynamical) = redfield(a, b);
        let (k_reflected, _) = redfield(-b, -a);
        steady_offdiag_from_values(dynamical, k_reflected, k_direct, beta, a, b)
    };
    let mf = |a: f64, b: f64| -> thermocorr::Result<Complex64> { Ok(c64(mean_force_kernel(&m, beta, a, b, cfg)?, 0.0)) };

    let mf_off = mf(0.0, -w)? - mf(w, 0.0)?;
    let mf_diag = mf(w, w)? - mf(-w, -w)?;
    let dyn_off = redfield(0.0, -w).1 - redfield(w, 0.0).1;
    let dyn_diag = c64(sp - sm, 0.0);
    let st_off = steady(0.0, -w)? - steady(w, 0.0)?;
    let (rp, rm) = tls_diagonal_steady(bath, w, DiagonalEquation::Redfield, cfg)?;
    let (cp, cm) = tls_diagonal_steady(bath, w, DiagonalEquation::Cumulant, cfg)?;
    let s = c64(scale, 0.0);
    Ok([
        (mf_off * s, mf_diag * s),
        (dyn_off * s, dyn_diag * s),
        (st_off * s, (rp - rm) * s),
        (st_off * s, (cp - cm) * s),
    ])
}

fn tls_table_rows_for(value: f64, result: thermocorr::Result<[(Complex64, Complex64); 4]>) -> Vec<CoefficientRow> {
    let mut rows = Vec::with_capacity(12);
    for name in COEFFICIENT_NAMES {
        for (k, kind) in CORRECTION_KINDS.iter().enumerate() {
            let (value_re, value_im, error) = match &result {
                Ok(c) => {
                    let (off, diag) = c[k];
                    match name {
                        "offdiag_re" => (off.re, 0.0, None),
                        "offdiag_im" => (0.0, off.im, None),
                        _ => (diag.re, diag.im, None),
                    }
                }
                Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
            };
            rows.push(CoefficientRow {
                sweep_value: value,
                coefficient_name: name,
                correction_kind: kind,
                value_re,
                value_im,
                error,
            });
        }
    }
    rows
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))
}

fn single_tls_bath(config: &RunConfig) -> Result<(BathModel, f64), CliError> {
    let baths = config.bath_models()?;
    if config.couplings.len() != 1 {
        return Err(CliError::Config("couplings: the two-level sweep expects exactly one coupling".into()));
    }
    let id = &config.couplings[0].bath;
    let bath = baths
        .into_iter()
        .find(|(b, _)| b == id)
        .map(|(_, m)| m)
        .ok_or_else(|| CliError::Config(format!("couplings[0].bath: unknown bath id '{id}'")))?;
    let gamma_c = match bath.spectrum {
        Spectrum::Ohmic { gamma_c, .. } if gamma_c > 0.0 => gamma_c,
        _ => 1.0,
    };
    Ok((bath, gamma_c))
}

/// Two-level table rows over a `βω₀` (or `ω₀`) sweep.
pub fn tls_table_rows(config: &RunConfig, opts: &RunOptions) -> Result<Vec<CoefficientRow>, CliError> {
    let (bath, gamma_c) = single_tls_bath(config)?;
    let cfg = config.quadrature(opts.tol_abs, opts.tol_rel);
    let (parameter, values) = match &config.sweep {
        Some(s) => (s.parameter, s.values.clone()),
        None => {
            let (lo, hi, n) = DEFAULT_BETA_OMEGA0;
            (SweepParameter::BetaOmega0, validation::linspace(lo, hi, n))
        }
    };
    let beta = config.beta;
    let omega_of = |v: f64| -> Result<f64, CliError> {
        match parameter {
            SweepParameter::BetaOmega0 => Ok(v / beta),
            SweepParameter::Omega0 => Ok(v),
            SweepParameter::Lambda => Err(CliError::Config(
                "sweep.parameter: 'lambda' does not change second-order coefficients; use beta_omega0 or omega0".into(),
            )),
        }
    };
    let omegas = values.iter().map(|&v| omega_of(v)).collect::<Result<Vec<_>, _>>()?;
    let scale = beta / gamma_c;
    let rows: Vec<Vec<CoefficientRow>> = pool(opts.threads)?.install(|| {
        values
            .par_iter()
            .zip(omegas.par_iter())
            .map(|(&v, &w)| {
                let r = if w > 0.0 {
                    tls_combinations(&bath, w, scale, &cfg)
                } else {
                    Err(thermocorr::Error::Domain(format!("two-level splitting must be positive, got {w}")))
                };
                tls_table_rows_for(v, r)
            })
            .collect()
    });
    Ok(rows.into_iter().flatten().collect())
}

fn sink(opts: &RunOptions, config: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    match opts.out.as_ref().or(config.output.as_ref()) {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn csv_writer(w: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub const TLS_TABLE_NOTE: &str = "# values are beta*Upsilon/gamma_c; offdiag = Upsilon(0,-w0) - Upsilon(w0,0); diag_diff = Upsilon(w0,w0) - Upsilon(-w0,-w0)";

/// Write two-level table rows, or the full coefficient tables for a general system.
pub fn run_corrections(config: &RunConfig, opts: &RunOptions) -> Result<(), CliError> {
    let mut out = sink(opts, config)?;
    if config.is_tls() && config.couplings.len() == 1 {
        let rows = tls_table_rows(config, opts)?;
        writeln!(out, "{TLS_TABLE_NOTE}")?;
        let mut w = csv_writer(out);
        w.write_record(["sweep_value", "coefficient_name", "correction_kind", "value_re", "value_im", "error"])?;
        for r in rows {
            w.write_record([
                fmt_num(r.sweep_value),
                r.coefficient_name.into(),
                r.correction_kind.into(),
                fmt_num(r.value_re),
                fmt_num(r.value_im),
                r.error.unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        return Ok(());
    }
    if config.sweep.is_some() {
        return Err(CliError::Config("sweep: only two-level systems support a correction sweep".into()));
    }
    let cfg = config.quadrature(opts.tol_abs, opts.tol_rel);
    let sys = config.system(None)?;
    let lt = sys.long_time_spectra(&cfg)?;
    let tables: [(&str, UpsilonTable); 3] = [
        ("mf", mean_force_table(&sys, MeanForceForm::Kernel, &cfg)?),
        ("dyn", dynamical_table(&sys, &KossakowskiSpec::Redfield, &lt)?),
        ("st-redfield", steady_state_table(&sys, &KossakowskiSpec::Redfield, &lt)?),
    ];
    let mut w = csv_writer(out);
    w.write_record(["correction_kind", "alpha", "beta", "omega", "omega_p", "value_re", "value_im"])?;
    for (kind, t) in &tables {
        for (key, v) in t.iter() {
            w.write_record([
                kind.to_string(),
                key.alpha.to_string(),
                key.beta.to_string(),
                fmt_num(key.omega()),
                fmt_num(key.omega_p()),
                fmt_num(v.re),
                fmt_num(v.im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn initial_state(sys: &OpenSystem, spec: &InitialState) -> Result<DensityMatrix, CliError> {
    let bad = |e: thermocorr::Error| CliError::Config(format!("evolve.initial_state: {e}"));
    match spec {
        InitialState::Gibbs => DensityMatrix::gibbs(sys.h0.matrix(), sys.beta).map_err(bad),
        InitialState::Pure(v) => {
            if v.len() != sys.dim() {
                return Err(CliError::Config(format!("evolve.initial_state.pure: expected {} amplitudes", sys.dim())));
            }
            DensityMatrix::pure(&v.iter().map(|p| c64(p[0], p[1])).collect::<Vec<_>>()).map_err(bad)
        }
        InitialState::Matrix(rows) => {
            let n = sys.dim();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("evolve.initial_state.matrix: expected {n}×{n}")));
            }
            DensityMatrix::new(CMat::from_fn(n, n, |i, j| c64(rows[i][j][0], rows[i][j][1]))).map_err(bad)
        }
    }
}

fn state_header(d: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            h.push(format!("rho_{i}{j}_re"));
            h.push(format!("rho_{i}{j}_im"));
        }
    }
    h
}

fn state_fields(rho: &CMat) -> Vec<String> {
    let d = rho.nrows();
    let mut v = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            v.push(fmt_num(rho[(i, j)].re));
            v.push(fmt_num(rho[(i, j)].im));
        }
    }
    v
}

/// Density-matrix trajectories for each requested equation.
pub fn run_evolve(config: &RunConfig, opts: &RunOptions) -> Result<(), CliError> {
    let spec = config
        .evolve
        .as_ref()
        .ok_or_else(|| CliError::Config("evolve: section is required for the evolve task".into()))?;
    if let Some(i) = spec.times.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(CliError::Config(format!("evolve.times[{i}]: must be finite and non-negative")));
    }
    let cfg = config.quadrature(opts.tol_abs, opts.tol_rel);
    let sys = config.system(None)?;
    let rho0 = initial_state(&sys, &spec.initial_state)?;
    let d = sys.dim();
    let lambda = spec.lambda;

    let mut results = Vec::new();
    for &eq in &spec.equations {
        let generator = match eq {
            Equation::Redfield => Some(build_redfield_generator(&sys, lambda, f64::INFINITY, &cfg)?),
            Equation::Davies => Some(build_davies_generator(&sys, lambda, &cfg)?),
            Equation::Cumulant => None,
        };
        let states: Vec<thermocorr::Result<DensityMatrix>> = pool(opts.threads)?.install(|| {
            spec.times
                .par_iter()
                .map(|&t| match &generator {
                    Some(l) => propagate(&Evolution::Generator(l), &rho0, t),
                    None => propagate(
                        &Evolution::Cumulant {
                            system: &sys,
                            lambda,
                            saturation: spec.saturation,
                            cfg: &cfg,
                        },
                        &rho0,
                        t,
                    ),
                })
                .collect()
        });
        results.push((eq, states));
    }

    let mut w = csv_writer(sink(opts, config)?);
    let mut header = vec!["equation".to_string(), "t".to_string()];
    header.extend(state_header(d));
    header.extend(["trace".to_string(), "min_eigenvalue".to_string(), "error".to_string()]);
    w.write_record(&header)?;
    for (eq, states) in results {
        for (&t, st) in spec.times.iter().zip(states) {
            let mut rec = vec![eq.name().to_string(), fmt_num(t)];
            match st.and_then(|r| Ok((r.min_eigenvalue()?, r))) {
                Ok((min, r)) => {
                    rec.extend(state_fields(r.matrix()));
                    rec.push(fmt_num(r.trace().re));
                    rec.push(fmt_num(min));
                    rec.push(String::new());
                }
                Err(e) => {
                    rec.extend(std::iter::repeat("NaN".to_string()).take(2 * d * d + 2));
                    rec.push(e.to_string());
                }
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Stationary states of the requested generators, plus the mean-force Gibbs state.
pub fn run_steadystate(config: &RunConfig, opts: &RunOptions) -> Result<(), CliError> {
    let spec = config
        .steadystate
        .as_ref()
        .ok_or_else(|| CliError::Config("steadystate: section is required for the steadystate task".into()))?;
    let cfg = config.quadrature(opts.tol_abs, opts.tol_rel);
    let sys = config.system(None)?;
    let lambdas = match &config.sweep {
        Some(s) if s.parameter == SweepParameter::Lambda => s.values.clone(),
        Some(_) => return Err(CliError::Config("sweep.parameter: the steadystate task sweeps 'lambda' only".into())),
        None => vec![spec.lambda],
    };
    let d = sys.dim();
    let mut w = csv_writer(sink(opts, config)?);
    let mut header = vec!["lambda".to_string(), "kind".to_string()];
    header.extend(state_header(d));
    header.extend(["coherence".to_string(), "error".to_string()]);
    w.write_record(&header)?;

    let mut kinds: Vec<&str> = spec.equations.iter().map(|e| e.name()).collect();
    kinds.push("mean-force");
    let rows: Vec<Vec<(String, thermocorr::Result<DensityMatrix>)>> = pool(opts.threads)?.install(|| {
        lambdas
            .par_iter()
            .map(|&l| {
                kinds
                    .iter()
                    .map(|&k| {
                        let st = match k {
                            "redfield" => build_redfield_generator(&sys, l, f64::INFINITY, &cfg).and_then(|g| steady_state_of_generator(&g)),
                            "davies" => build_davies_generator(&sys, l, &cfg).and_then(|g| steady_state_of_generator(&g)),
                            "cumulant" => Err(thermocorr::Error::NotImplemented(
                                "the cumulant map has no time-independent generator; use the evolve task".into(),
                            )),
                            _ => validation::mean_force_state(&sys, l, &cfg),
                        };
                        (k.to_string(), st)
                    })
                    .collect()
            })
            .collect()
    });
    for (&l, per) in lambdas.iter().zip(rows) {
        for (k, st) in per {
            let mut rec = vec![fmt_num(l), k];
            match st.and_then(|r| Ok((validation::coherence(&sys, r.matrix())?, r))) {
                Ok((c, r)) => {
                    rec.extend(state_fields(r.matrix()));
                    rec.push(fmt_num(c));
                    rec.push(String::new());
                }
                Err(e) => {
                    rec.extend(std::iter::repeat("NaN".to_string()).take(2 * d * d + 1));
                    rec.push(e.to_string());
                }
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Suite settings from a two-level configuration with a single Pauli coupling.
pub fn suite_config(config: &RunConfig, opts: &RunOptions) -> Result<SuiteConfig, CliError> {
    let omega0 = match config.system {
        SystemSpec::Tls { omega0 } => omega0,
        SystemSpec::Hamiltonian(_) => {
            return Err(CliError::Config("system: the validation suite runs on a two-level system".into()))
        }
    };
    let coupling = match config.couplings.as_slice() {
        [c] => match c.operator {
            OperatorSpec::Pauli { x, y, z } => (x, y, z),
            OperatorSpec::Matrix(_) => {
                return Err(CliError::Config("couplings[0].operator: validation expects a Pauli coupling".into()))
            }
        },
        _ => return Err(CliError::Config("couplings: validation expects exactly one coupling".into())),
    };
    let (bath, gamma_c) = single_tls_bath(config)?;
    let cutoff = match bath.spectrum {
        Spectrum::Ohmic { cutoff, .. } => cutoff,
        Spectrum::Discrete { .. } => {
            return Err(CliError::Config("baths: validation expects an Ohmic bath".into()))
        }
    };
    let spec = config.validate.clone().unwrap_or_default();
    Ok(SuiteConfig {
        beta: config.beta,
        gamma_c,
        cutoff: cutoff * config.beta,
        omega0,
        coupling,
        cfg: config.quadrature(opts.tol_abs, opts.tol_rel),
        run_oracle: !(opts.skip_oracle || spec.skip_oracle),
        kossakowski: config.custom_kossakowski(),
    })
}

/// Run the suite, write one line per check, return whether every executed check passed.
pub fn run_validate(config: &RunConfig, opts: &RunOptions) -> Result<bool, CliError> {
    let sc = suite_config(config, opts)?;
    let checks: Vec<Check> = validation::run_suite(&sc);
    let mut out = sink(opts, config)?;
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let ok = checks.iter().all(Check::passed);
    writeln!(out, "SUMMARY: {}", if ok { "PASS" } else { "FAIL" })?;
    out.flush()?;
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(fmt_num(1.0), "1.00000000000e0");
        assert_eq!(fmt_num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }

    #[test]
    fn failed_point_keeps_row_layout() {
        let rows = tls_table_rows_for(0.5, Err(thermocorr::Error::Domain("x".into())));
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.error.is_some() && r.value_re.is_nan()));
        assert_eq!(rows[0].coefficient_name, "offdiag_re");
        assert_eq!(rows[3].correction_kind, "st-cumulant");
    }

    #[test]
    fn mean_force_matches_steady_redfield_offdiag() {
        let bath = BathModel::ohmic(1.0, 1.0, 50.0).unwrap();
        let c = tls_combinations(&bath, 1.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((c[0].0 - c[2].0).norm() <= 1e-7);
        assert!(c[0].0.im == 0.0 && c[1].0.im.abs() > 1e-3);
        assert_eq!(c[2].1, c64(0.0, 0.0));
    }
}
