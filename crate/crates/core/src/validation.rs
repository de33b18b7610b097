// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical self-checks with measured values and tolerances.
//!
//! Each check reports one line `CHECK name: PASS|FAIL|SKIP measured=… tol=…`.

use std::fmt;

use num_complex::Complex64;

use crate::bath::{BathModel, Mode};
use crate::corrections::{
    dynamical_from_values, mean_force_kernel, mean_force_s_form, redfield_k_from_values, steady_offdiag_from_values,
    steady_state_table, KossakowskiSpec, MeanForceForm,
};
use crate::error::{Error, Result};
use crate::generators::{
    build_cumulant_exponent, build_cumulant_generator, build_davies_generator, build_interaction_redfield,
    min_choi_eigenvalue, propagate, steady_state_of_generator, DensityMatrix, Evolution,
};
use crate::linalg::{c64, eigh, frobenius, traceless, CMat};
use crate::operators::{assemble_correction, HermitianOperator};
use crate::oracle::{effective_hamiltonian, exact_reduced_gibbs, scaling_exponent, TruncatedBath};
use crate::perturbative::second_order_residual;
use crate::quadrature::QuadratureConfig;
use crate::system::OpenSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

/// Result of one self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub measured: f64,
    pub tol: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `measured ≤ tol`; NaN fails.
    pub fn at_most(name: &str, measured: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            outcome: if measured <= tol { Outcome::Pass } else { Outcome::Fail },
            measured,
            tol,
            detail: String::new(),
        }
    }

    /// Passes when `measured ≥ tol`; NaN fails.
    pub fn at_least(name: &str, measured: f64, tol: f64) -> Self {
        let mut c = Self::at_most(name, measured, tol);
        c.outcome = if measured >= tol { Outcome::Pass } else { Outcome::Fail };
        c
    }

    pub fn skipped(name: &str) -> Self {
        Self {
            name: name.into(),
            outcome: Outcome::Skipped,
            measured: f64::NAN,
            tol: f64::NAN,
            detail: "skipped".into(),
        }
    }

    pub fn failed(name: &str, err: &Error) -> Self {
        Self {
            name: name.into(),
            outcome: Outcome::Fail,
            measured: f64::NAN,
            tol: f64::NAN,
            detail: err.to_string(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skipped => "SKIP",
        };
        write!(f, "CHECK {}: {status} measured={:.6e} tol={:.6e}", self.name, self.measured, self.tol)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Long-time `γ` and `S` at `±ω` for every grid point.
struct GridSpectra {
    beta: f64,
    values: Vec<(f64, f64, f64)>,
}

impl GridSpectra {
    fn new(bath: &BathModel, grid: &[f64], cfg: &QuadratureConfig) -> Result<Self> {
        let m = bath.measure();
        let mut pts: Vec<f64> = grid.iter().flat_map(|&w| [w, -w]).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let values = pts
            .into_iter()
            .map(|w| Ok((w, m.gamma(w), m.lamb_shift(w, cfg)?)))
            .collect::<Result<_>>()?;
        Ok(Self { beta: bath.beta, values })
    }

    fn at(&self, w: f64) -> Result<(f64, f64)> {
        self.values
            .iter()
            .find(|v| v.0 == w)
            .map(|v| (v.1, v.2))
            .ok_or_else(|| Error::Validation(format!("no spectral data at {w}")))
    }

    fn s(&self, w: f64) -> Result<f64> {
        Ok(self.at(w)?.1)
    }

    fn redfield(&self, w: f64, wp: f64) -> Result<(Complex64, Complex64)> {
        let (g, s) = self.at(w)?;
        let (gp, sp) = self.at(wp)?;
        Ok((redfield_k_from_values(g, s, gp, sp), dynamical_from_values(g, s, gp, sp)))
    }
}

/// Equally spaced grid on `[lo, hi]` with `n` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Kernel and Lamb-shift forms of `Υ_mf(ω,ω′)` on all off-diagonal grid pairs.
/// Measured value is the worst `|kernel − S-form| / max(1e-7, 1e-6|kernel|)`.
pub fn dual_form(bath: &BathModel, grid: &[f64], cfg: &QuadratureConfig) -> Result<Check> {
    let spectra = GridSpectra::new(bath, grid, cfg)?;
    let m = bath.measure();
    let s = |w: f64| spectra.s(w);
    let mut worst = 0.0f64;
    for &w in grid {
        for &wp in grid {
            if w == wp {
                continue;
            }
            let k = mean_force_kernel(&m, bath.beta, w, wp, cfg)?;
            let sf = mean_force_s_form(s, s, bath.beta, w, wp)?;
            worst = worst.max((k - sf).abs() / (1e-6 * k.abs()).max(1e-7));
        }
    }
    Ok(Check::at_most("dual_form_mean_force", worst, 1.0).with_detail("(error/bound)"))
}

/// Off-diagonal steady-state coefficients against `Υ_mf` (Redfield) and `Υ_dyn`
/// (secular Kossakowski matrix with Redfield shifts).
pub fn steady_equals_mean_force(bath: &BathModel, grid: &[f64], cfg: &QuadratureConfig) -> Result<[Check; 2]> {
    let spectra = GridSpectra::new(bath, grid, cfg)?;
    let m = bath.measure();
    let beta = spectra.beta;
    let (mut worst_mf, mut worst_sec) = (0.0f64, 0.0f64);
    for &w in grid {
        for &wp in grid {
            if w == wp {
                continue;
            }
            let (k_direct, dynamical) = spectra.redfield(w, wp)?;
            let (k_reflected, _) = spectra.redfield(-wp, -w)?;
            let st = steady_offdiag_from_values(dynamical, k_reflected, k_direct, beta, w, wp)?;
            let mf = mean_force_kernel(&m, beta, w, wp, cfg)?;
            worst_mf = worst_mf.max((st - mf).norm());
            let zero = Complex64::new(0.0, 0.0);
            let sec = steady_offdiag_from_values(dynamical, zero, zero, beta, w, wp)?;
            worst_sec = worst_sec.max((sec - dynamical).norm());
        }
    }
    Ok([
        Check::at_most("steady_offdiag_redfield_equals_mean_force", worst_mf, 1e-7),
        Check::at_most("steady_offdiag_secular_equals_dynamical", worst_sec, 1e-10),
    ])
}

/// Relative second-order stationarity residual with Redfield steady-state coefficients.
pub fn second_order(name: &str, sys: &OpenSystem, spec: &KossakowskiSpec, cfg: &QuadratureConfig) -> Result<Check> {
    let lt = sys.long_time_spectra(cfg)?;
    let table = steady_state_table(sys, spec, &lt)?;
    let r = second_order_residual(sys, spec, &table, cfg)?;
    Ok(Check::at_most(name, r.relative(), 1e-8))
}

/// Fixed three-level system with a generic coupling.
pub fn three_level_system(bath: BathModel) -> Result<OpenSystem> {
    let h0 = HermitianOperator::new(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c64(0.0, 0.0),
        c64(0.73, 0.0),
        c64(1.91, 0.0),
    ])))?;
    let a = CMat::from_row_slice(
        3,
        3,
        &[
            c64(0.31, 0.0),
            c64(0.52, -0.17),
            c64(-0.24, 0.41),
            c64(0.52, 0.17),
            c64(-0.66, 0.0),
            c64(0.13, 0.29),
            c64(-0.24, -0.41),
            c64(0.13, -0.29),
            c64(0.18, 0.0),
        ],
    );
    OpenSystem::new(h0, vec![(HermitianOperator::new(a)?, 0)], vec![bath])
}

/// Worst trace defect and most negative Choi eigenvalue of `e^{K̃_t}` over a grid.
pub fn cumulant_cptp(sys: &OpenSystem, lambdas: &[f64], times: &[f64], cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let mut trace = 0.0f64;
    let mut choi = f64::INFINITY;
    for &l in lambdas {
        for &t in times {
            let map = build_cumulant_exponent(sys, l, t, cfg)?.exp(1.0)?;
            trace = trace.max(map.map_trace_defect());
            choi = choi.min(min_choi_eigenvalue(&map)?);
        }
    }
    Ok((trace, choi))
}

/// `‖𝓛ᶜ_t − 𝓛̃ᴿ_t‖` at each coupling and the fitted log-log slope.
pub fn cumulant_redfield_gap(sys: &OpenSystem, t: f64, lambdas: &[f64], cfg: &QuadratureConfig) -> Result<(f64, Vec<f64>)> {
    let gaps = lambdas
        .iter()
        .map(|&l| {
            let c = build_cumulant_generator(sys, l, t, cfg)?;
            let r = build_interaction_redfield(sys, l, t, cfg)?;
            Ok((&c - &r).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((scaling_exponent(lambdas, &gaps)?, gaps))
}

/// Default three-mode discrete bath for the exact oracle.
pub fn oracle_modes() -> Vec<Mode> {
    vec![
        Mode { frequency: 2.0, coupling: 0.5 },
        Mode { frequency: 3.0, coupling: 0.4 },
        Mode { frequency: 4.5, coupling: 0.3 },
    ]
}

/// `‖traceless(H_eff − H₀) − λ² traceless(H_mf⁽²⁾)‖` for each coupling and the fitted slope.
pub fn oracle_mean_force_residuals(
    h0: &HermitianOperator,
    coupling: &HermitianOperator,
    bath: &TruncatedBath,
    beta: f64,
    lambdas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, Vec<f64>)> {
    let sys = OpenSystem::new(h0.clone(), vec![(coupling.clone(), 0)], vec![bath.bath_model(beta)?])?;
    let table = crate::corrections::mean_force_table(&sys, MeanForceForm::Kernel, cfg)?;
    let h2 = traceless(assemble_correction(&table, &sys.jumps)?.matrix());
    let h0t = traceless(h0.matrix());
    let res = lambdas
        .iter()
        .map(|&l| {
            let rho = exact_reduced_gibbs(h0, coupling, bath, beta, l)?;
            let heff = effective_hamiltonian(&rho, beta)?;
            Ok(frobenius(&(heff.matrix() - &h0t - &h2 * c64(l * l, 0.0))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((scaling_exponent(lambdas, &res)?, res))
}

/// `|⟨e₀|ρ|e₁⟩|` in the eigenbasis of `H₀` (lowest two levels).
pub fn coherence(sys: &OpenSystem, rho: &CMat) -> Result<f64> {
    let (_, v) = eigh(sys.h0.matrix())?;
    let rb = v.adjoint() * rho * &v;
    Ok(rb[(0, 1)].norm())
}

/// Gibbs state of `H₀ + λ² H_mf⁽²⁾`.
pub fn mean_force_state(sys: &OpenSystem, lambda: f64, cfg: &QuadratureConfig) -> Result<DensityMatrix> {
    let table = crate::corrections::mean_force_table(sys, MeanForceForm::Kernel, cfg)?;
    let h2 = assemble_correction(&table, &sys.jumps)?;
    DensityMatrix::gibbs(&(sys.h0.matrix() + h2.matrix() * c64(lambda * lambda, 0.0)), sys.beta)
}

/// Cumulant state at `t` from the bare Gibbs state, with saturated coefficients after `t_sat`.
pub fn cumulant_state(sys: &OpenSystem, lambda: f64, t: f64, t_sat: f64, cfg: &QuadratureConfig) -> Result<DensityMatrix> {
    let rho0 = DensityMatrix::gibbs(sys.h0.matrix(), sys.beta)?;
    let ev = Evolution::Cumulant {
        system: sys,
        lambda,
        saturation: Some(t_sat),
        cfg,
    };
    propagate(&ev, &rho0, t)
}

/// Time after which the cumulant coherence is read: `n` population relaxation times.
pub fn relaxation_time(sys: &OpenSystem, lambda: f64, n: f64) -> Result<f64> {
    let w0 = sys.frequencies().into_iter().fold(0.0f64, f64::max);
    let j = &sys.jumps[0];
    let a = j.op(w0).ok_or_else(|| Error::Validation("no positive Bohr frequency".into()))?;
    let weight = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let m = &sys.measures[sys.bath_of[0]];
    let rate = lambda * lambda * weight * (m.gamma(w0) + m.gamma(-w0));
    if !(rate > 0.0) {
        return Err(Error::Domain("no dissipation at the Bohr frequency".into()));
    }
    Ok(n / rate)
}

/// Settings for [`run_suite`].
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub beta: f64,
    pub gamma_c: f64,
    pub cutoff: f64,
    pub omega0: f64,
    pub coupling: (f64, f64, f64),
    pub cfg: QuadratureConfig,
    pub run_oracle: bool,
    /// Replaces the Redfield Kossakowski data in the second-order checks.
    pub kossakowski: Option<KossakowskiSpec>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            beta: 1.0,
            gamma_c: 1.0,
            cutoff: 50.0,
            omega0: 1.0,
            coupling: (r, 0.0, r),
            cfg: QuadratureConfig::default(),
            run_oracle: true,
            kossakowski: None,
        }
    }
}

fn guard(name: &str, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::failed(name, &e))
}

/// Module-level invariant suite for a two-level spin-boson setup.
pub fn run_suite(sc: &SuiteConfig) -> Vec<Check> {
    let cfg = &sc.cfg;
    let mut out = Vec::new();
    let bath = match BathModel::ohmic(sc.beta, sc.gamma_c, sc.cutoff / sc.beta) {
        Ok(b) => b,
        Err(e) => return vec![Check::failed("configuration", &e)],
    };
    let sys = match OpenSystem::tls(sc.omega0, sc.coupling, bath.clone()) {
        Ok(s) => s,
        Err(e) => return vec![Check::failed("configuration", &e)],
    };
    let grid: Vec<f64> = linspace(-4.5, 4.5, 10).into_iter().map(|x| x / sc.beta).collect();

    out.push(guard("dual_form_mean_force", dual_form(&bath, &grid, cfg)));
    match steady_equals_mean_force(&bath, &grid, cfg) {
        Ok(cs) => out.extend(cs),
        Err(e) => out.push(Check::failed("steady_offdiag_equals_mean_force", &e)),
    }
    let spec = sc.kossakowski.clone().unwrap_or(KossakowskiSpec::Redfield);
    out.push(guard("second_order_residual_tls", second_order("second_order_residual_tls", &sys, &spec, cfg)));
    if sc.kossakowski.is_none() {
        out.push(guard(
            "second_order_residual_three_level",
            three_level_system(bath.clone()).and_then(|s| second_order("second_order_residual_three_level", &s, &spec, cfg)),
        ));
    }

    let times: Vec<f64> = [0.5, 5.0, 50.0].iter().map(|t| t / sc.omega0).collect();
    match cumulant_cptp(&sys, &[0.02, 0.1], &times, cfg) {
        Ok((tr, choi)) => {
            out.push(Check::at_most("cumulant_trace_preservation", tr, 1e-12));
            out.push(Check::at_least("cumulant_min_choi_eigenvalue", choi, -1e-10));
        }
        Err(e) => out.push(Check::failed("cumulant_cptp", &e)),
    }

    out.push(guard(
        "cumulant_redfield_gap_slope",
        cumulant_redfield_gap(&sys, 2.0 / sc.omega0, &[1e-1, 3e-2, 1e-2], cfg)
            .map(|(s, _)| Check::at_most("cumulant_redfield_gap_slope", (s - 4.0).abs(), 0.3).with_detail(format!("slope={s:.4}"))),
    ));

    out.push(guard(
        "davies_steady_coherence",
        build_davies_generator(&sys, 0.05, cfg)
            .and_then(|l| steady_state_of_generator(&l))
            .and_then(|rho| coherence(&sys, rho.matrix()))
            .map(|c| Check::at_most("davies_steady_coherence", c, 1e-10)),
    ));

    if sc.run_oracle {
        let (x, y, z) = sc.coupling;
        let oracle = (|| {
            let bath = TruncatedBath::new(oracle_modes(), 7)?;
            let h0 = HermitianOperator::tls_hamiltonian(sc.omega0);
            let s = HermitianOperator::pauli_vector(x, y, z);
            oracle_mean_force_residuals(&h0, &s, &bath, sc.beta, &[0.02, 0.05, 0.1], cfg)
        })();
        out.push(guard(
            "oracle_mean_force_slope",
            oracle.map(|(s, _)| Check::at_most("oracle_mean_force_slope", (s - 4.0).abs(), 0.3).with_detail(format!("slope={s:.4}"))),
        ));
    } else {
        out.push(Check::skipped("oracle_mean_force_slope"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CorrectionKind, UpsilonTable};

    #[test]
    fn check_lines_are_formatted() {
        let c = Check::at_most("x", 1e-9, 1e-8);
        assert_eq!(c.to_string(), "CHECK x: PASS measured=1.000000e-9 tol=1.000000e-8");
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed());
        assert!(Check::skipped("y").passed());
        assert!(!Check::at_least("z", -1.0, 0.0).passed());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.1, 5.0, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.1);
        assert!((g[19] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn broken_detailed_balance_is_reported() {
        let bath = BathModel::ohmic(1.0, 1.0, 5.0).unwrap();
        let sys = OpenSystem::tls(1.0, (0.6, 0.0, 0.8), bath).unwrap();
        let mut k = UpsilonTable::new(CorrectionKind::Dynamical);
        k.insert(0, 0, 1.0, 1.0, c64(1.0, 0.0));
        k.insert(0, 0, -1.0, -1.0, c64(1.0, 0.0));
        let spec = KossakowskiSpec::Custom {
            k,
            dynamical: UpsilonTable::new(CorrectionKind::Dynamical),
        };
        let r = second_order("x", &sys, &spec, &QuadratureConfig::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn relaxation_time_scales_inverse_square() {
        let bath = BathModel::ohmic(1.0, 1.0, 5.0).unwrap();
        let sys = OpenSystem::tls(1.0, (0.6, 0.0, 0.8), bath).unwrap();
        let a = relaxation_time(&sys, 0.1, 1.0).unwrap();
        let b = relaxation_time(&sys, 0.05, 1.0).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);
    }
}
