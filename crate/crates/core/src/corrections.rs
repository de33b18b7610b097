// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Second-order coefficient tables: dynamical, mean-force and steady-state.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::{principal_value, BathModel, SmoothDensity, SpectralMeasure, Spectrum};
use crate::error::{Error, Result};
use crate::operators::{CorrectionKind, UpsilonTable};
use crate::quadrature::{self, QuadratureConfig};
use crate::system::{LongTimeSpectra, OpenSystem};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Below this `|y|` the difference quotient in the kernel switches to quadrature.
const KERNEL_SERIES_THRESHOLD: f64 = 1e-3;

/// `φ₁(z) = (e^z − 1)/z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `ψ(x, y) = [φ₁(x+y) − φ₁(x)]/y = ∫₀¹ s e^{sx} φ₁(sy) ds`.
fn psi(x: f64, y: f64) -> f64 {
    if y.abs() >= KERNEL_SERIES_THRESHOLD {
        return (phi1(x + y) - phi1(x)) / y;
    }
    let panels = (x.abs() / 4.0).ceil().max(1.0) as usize;
    quadrature::composite_fixed(
        |s| Complex64::new(s * (s * x).exp() * phi1(s * y), 0.0),
        0.0,
        1.0,
        panels,
    )
    .re
}

/// Mean-force kernel
/// `D(ω,ω′,Ω) = 1/(ω′−Ω) − (ω−ω′)(e^{β(ω−Ω)}−1)/((ω−Ω)(ω′−Ω)(e^{β(ω−ω′)}−1))`,
/// with every removable singularity filled in.
pub fn kernel_d(beta: f64, omega: f64, omega_p: f64, big_omega: f64) -> f64 {
    let x = beta * (omega - omega_p);
    let y = beta * (omega_p - big_omega);
    -beta * psi(x, y) / phi1(x)
}

/// `D(ω,ω′,Ω)·γ(Ω)` without overflow when `β(ω−Ω)` is large.
fn kernel_times_density(beta: f64, omega: f64, omega_p: f64, w: f64, d: &dyn SmoothDensity) -> f64 {
    let x = beta * (omega - omega_p);
    let y = beta * (omega_p - w);
    if x + y > 30.0 && y.abs() >= KERNEL_SERIES_THRESHOLD {
        if let Some(s) = d.ln_value(w) {
            let a = (x + y + s).exp() - s.exp();
            let psi_g = (a / (x + y) - phi1(x) * s.exp()) / y;
            return -beta * psi_g / phi1(x);
        }
    }
    let g = d.value(w);
    if g == 0.0 {
        return 0.0;
    }
    kernel_d(beta, omega, omega_p, w) * g
}

/// Representation used to evaluate the mean-force coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanForceForm {
    /// Pole-free kernel integral against `γ(Ω)`.
    Kernel,
    /// Combination of four Lamb-shift values; requires `ω ≠ ω′`.
    SForm,
}

/// Mean-force coefficient from the kernel integral over a spectral measure.
pub fn mean_force_kernel(
    measure: &SpectralMeasure,
    beta: f64,
    omega: f64,
    omega_p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut acc = 0.0;
    if let Some(d) = measure.smooth() {
        let (lo, hi) = d.support(cfg);
        let mut breaks = d.breakpoints();
        breaks.extend([omega, omega_p]);
        acc += quadrature::integrate(
            |w| kernel_times_density(beta, omega, omega_p, w, d),
            lo,
            hi,
            &breaks,
            cfg,
        )?;
    }
    for a in &measure.atoms {
        acc += kernel_d(beta, omega, omega_p, a.location) * a.weight;
    }
    Ok(acc / (2.0 * PI))
}

/// Mean-force coefficient from Lamb-shift values.
///
/// `s(ω)` supplies `S_{αβ}(ω)`, `s_rev(ω)` supplies `S_{βα}(ω)`.
pub fn mean_force_s_form(
    s: impl Fn(f64) -> Result<f64>,
    s_rev: impl Fn(f64) -> Result<f64>,
    beta: f64,
    omega: f64,
    omega_p: f64,
) -> Result<f64> {
    if omega == omega_p {
        return Err(Error::Domain(
            "S-form of the mean-force coefficient is undefined for ω = ω′".into(),
        ));
    }
    let m = omega.max(omega_p);
    let ew = (beta * (omega - m)).exp();
    let ewp = (beta * (omega_p - m)).exp();
    let esum = (beta * omega.min(omega_p)).exp();
    let denom = if omega > omega_p {
        -(-beta * (omega - omega_p)).exp_m1()
    } else {
        (-beta * (omega_p - omega)).exp_m1()
    };
    let num = ew * s(omega_p)? - ewp * s(omega)? + esum * (s_rev(-omega_p)? - s_rev(-omega)?);
    Ok(num / denom)
}

/// Mean-force coefficient `Υ_mf(ω, ω′)` of a single-coupling bath.
pub fn upsilon_mean_force(
    bath: &BathModel,
    omega: f64,
    omega_p: f64,
    form: MeanForceForm,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    let m = bath.measure();
    let v = match form {
        MeanForceForm::Kernel => mean_force_kernel(&m, bath.beta, omega, omega_p, cfg)?,
        MeanForceForm::SForm => {
            let s = |w: f64| m.lamb_shift(w, cfg);
            mean_force_s_form(s, s, bath.beta, omega, omega_p)?
        }
    };
    Ok(Complex64::new(v, 0.0))
}

/// `Υ_dyn(ω,ω′) = ½(S(ω)+S(ω′)) + (i/4)(γ(ω)−γ(ω′))` from long-time values.
pub fn dynamical_from_values(g_w: f64, s_w: f64, g_wp: f64, s_wp: f64) -> Complex64 {
    Complex64::new(0.5 * (s_w + s_wp), 0.25 * (g_w - g_wp))
}

/// Redfield Kossakowski entry `½(γ(ω)+γ(ω′)) + i(S(ω′)−S(ω))`.
pub fn redfield_k_from_values(g_w: f64, s_w: f64, g_wp: f64, s_wp: f64) -> Complex64 {
    Complex64::new(0.5 * (g_w + g_wp), s_wp - s_w)
}

/// Dynamical (Redfield) coefficient of a single-coupling bath.
pub fn upsilon_dynamical(bath: &BathModel, omega: f64, omega_p: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
    let m = bath.measure();
    if omega == omega_p {
        return Ok(Complex64::new(m.lamb_shift(omega, cfg)?, 0.0));
    }
    Ok(dynamical_from_values(
        m.gamma(omega),
        m.lamb_shift(omega, cfg)?,
        m.gamma(omega_p),
        m.lamb_shift(omega_p, cfg)?,
    ))
}

/// Master-equation coefficients at long times.
#[derive(Debug, Clone)]
pub enum KossakowskiSpec {
    /// `K = γ(ω,ω′,∞)`, `Υ_dyn = S(ω,ω′,∞)`.
    Redfield,
    /// `K = γ(ω)δ_{ωω′}`, `Υ_dyn = S(ω)δ_{ωω′}`.
    Secular,
    /// Explicit tables; absent entries are zero.
    Custom { k: UpsilonTable, dynamical: UpsilonTable },
}

impl KossakowskiSpec {
    /// `(K_{αβ}(ω,ω′), Υ^dyn_{αβ}(ω,ω′))`.
    pub fn coefficients(
        &self,
        sys: &OpenSystem,
        lt: &LongTimeSpectra,
        alpha: usize,
        beta: usize,
        omega: f64,
        omega_p: f64,
    ) -> Result<(Complex64, Complex64)> {
        match self {
            KossakowskiSpec::Custom { k, dynamical } => Ok((
                k.get(alpha, beta, omega, omega_p).unwrap_or(ZERO),
                dynamical.get(alpha, beta, omega, omega_p).unwrap_or(ZERO),
            )),
            KossakowskiSpec::Redfield | KossakowskiSpec::Secular => {
                let Some(b) = sys.shared_bath(alpha, beta) else {
                    return Ok((ZERO, ZERO));
                };
                let secular = matches!(self, KossakowskiSpec::Secular);
                if secular && omega != omega_p {
                    return Ok((ZERO, ZERO));
                }
                let (g_w, s_w) = (lt.gamma(b, omega)?, lt.s(b, omega)?);
                if omega == omega_p {
                    return Ok((Complex64::new(g_w, 0.0), Complex64::new(s_w, 0.0)));
                }
                let (g_wp, s_wp) = (lt.gamma(b, omega_p)?, lt.s(b, omega_p)?);
                Ok((
                    redfield_k_from_values(g_w, s_w, g_wp, s_wp),
                    dynamical_from_values(g_w, s_w, g_wp, s_wp),
                ))
            }
        }
    }

    /// Largest relative violation of `K_{αβ}(ω,ω) = K_{βα}(−ω,−ω)e^{βω}`.
    pub fn detailed_balance_defect(&self, sys: &OpenSystem, lt: &LongTimeSpectra) -> Result<f64> {
        let mut worst = 0.0f64;
        for ja in &sys.jumps {
            for jb in &sys.jumps {
                for &w in &ja.frequencies {
                    if jb.op(w).is_none() || ja.op(-w).is_none() {
                        continue;
                    }
                    let (k, _) = self.coefficients(sys, lt, ja.alpha, jb.alpha, w, w)?;
                    let (kr, _) = self.coefficients(sys, lt, jb.alpha, ja.alpha, -w, -w)?;
                    let rhs = kr * (sys.beta * w).exp();
                    let scale = k.norm().max(rhs.norm());
                    if scale > 0.0 {
                        worst = worst.max((k - rhs).norm() / scale);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Off-diagonal steady-state coefficient for `ω ≠ ω′` from its ingredients:
/// `Υ_dyn + i/(e^{βω}−e^{βω′}) [K_{βα}(−ω′,−ω)e^{β(ω+ω′)} − ½K_{αβ}(ω,ω′)(e^{βω}+e^{βω′})]`.
pub fn steady_offdiag_from_values(
    dynamical: Complex64,
    k_reflected: Complex64,
    k_direct: Complex64,
    beta: f64,
    omega: f64,
    omega_p: f64,
) -> Result<Complex64> {
    if omega == omega_p {
        return Err(Error::Domain(
            "the second-order equation leaves diagonal steady-state entries undetermined".into(),
        ));
    }
    let m = omega.max(omega_p);
    let denom = (beta * (omega - m)).exp() - (beta * (omega_p - m)).exp();
    if denom.abs() < 1e-12 {
        return Err(Error::NearDegenerate(format!(
            "e^(βω) and e^(βω′) coincide to 1e-12 for ω = {omega}, ω′ = {omega_p}"
        )));
    }
    let e_min = (beta * omega.min(omega_p)).exp();
    let e_sum = 1.0 + (-beta * (omega - omega_p).abs()).exp();
    Ok(dynamical + I / denom * (k_reflected * e_min - k_direct * (0.5 * e_sum)))
}

/// Steady-state coefficient `Υ_st_{αβ}(ω,ω′)` for `ω ≠ ω′`.
pub fn upsilon_steady_offdiag(
    spec: &KossakowskiSpec,
    sys: &OpenSystem,
    lt: &LongTimeSpectra,
    alpha: usize,
    beta: usize,
    omega: f64,
    omega_p: f64,
) -> Result<Complex64> {
    if omega == omega_p {
        return Err(Error::Domain(
            "steady-state off-diagonal formula requires ω ≠ ω′".into(),
        ));
    }
    let defect = spec.detailed_balance_defect(sys, lt)?;
    if defect > 1e-9 {
        return Err(Error::Precondition(format!(
            "Kossakowski diagonal violates detailed balance (relative defect {defect:.3e})"
        )));
    }
    let (k_direct, dynamical) = spec.coefficients(sys, lt, alpha, beta, omega, omega_p)?;
    let (k_reflected, _) = spec.coefficients(sys, lt, beta, alpha, -omega_p, -omega)?;
    steady_offdiag_from_values(dynamical, k_reflected, k_direct, sys.beta, omega, omega_p)
}

fn for_each_pair(sys: &OpenSystem, mut f: impl FnMut(usize, usize, f64, f64) -> Result<()>) -> Result<()> {
    for ja in &sys.jumps {
        for jb in &sys.jumps {
            if sys.shared_bath(ja.alpha, jb.alpha).is_none() {
                continue;
            }
            for &w in &ja.frequencies {
                for &wp in &jb.frequencies {
                    f(ja.alpha, jb.alpha, w, wp)?;
                }
            }
        }
    }
    Ok(())
}

/// Mean-force table over all coupling and frequency pairs. Diagonal entries
/// always use the kernel form.
pub fn mean_force_table(sys: &OpenSystem, form: MeanForceForm, cfg: &QuadratureConfig) -> Result<UpsilonTable> {
    let mut t = UpsilonTable::new(CorrectionKind::MeanForce);
    let lt = if form == MeanForceForm::SForm {
        Some(sys.long_time_spectra(cfg)?)
    } else {
        None
    };
    for_each_pair(sys, |a, b, w, wp| {
        let bath = sys.bath_of[a];
        if let Some(v) = t.get(b, a, wp, w).filter(|_| a == b) {
            t.insert(a, b, w, wp, v);
            return Ok(());
        }
        let v = match (&lt, w == wp) {
            (Some(lt), false) => {
                let s = |x: f64| lt.s(bath, x);
                mean_force_s_form(s, s, sys.beta, w, wp)?
            }
            _ => mean_force_kernel(&sys.measures[bath], sys.beta, w, wp, cfg)?,
        };
        t.insert(a, b, w, wp, Complex64::new(v, 0.0));
        Ok(())
    })?;
    Ok(t)
}

/// Dynamical table of a master equation.
pub fn dynamical_table(sys: &OpenSystem, spec: &KossakowskiSpec, lt: &LongTimeSpectra) -> Result<UpsilonTable> {
    let mut t = UpsilonTable::new(CorrectionKind::Dynamical);
    for_each_pair(sys, |a, b, w, wp| {
        let (_, d) = spec.coefficients(sys, lt, a, b, w, wp)?;
        t.insert(a, b, w, wp, d);
        Ok(())
    })?;
    Ok(t)
}

/// Steady-state table: off-diagonal entries from the second-order solution,
/// diagonal entries set to zero (the gauge left free at this order).
pub fn steady_state_table(sys: &OpenSystem, spec: &KossakowskiSpec, lt: &LongTimeSpectra) -> Result<UpsilonTable> {
    let defect = spec.detailed_balance_defect(sys, lt)?;
    if defect > 1e-9 {
        return Err(Error::Precondition(format!(
            "Kossakowski diagonal violates detailed balance (relative defect {defect:.3e})"
        )));
    }
    let mut t = UpsilonTable::new(CorrectionKind::SteadyState);
    for_each_pair(sys, |a, b, w, wp| {
        let v = if w == wp {
            ZERO
        } else {
            let (k_direct, dynamical) = spec.coefficients(sys, lt, a, b, w, wp)?;
            let (k_reflected, _) = spec.coefficients(sys, lt, b, a, -wp, -w)?;
            steady_offdiag_from_values(dynamical, k_reflected, k_direct, sys.beta, w, wp)?
        };
        t.insert(a, b, w, wp, v);
        Ok(())
    })?;
    Ok(t)
}

/// Master equation whose two-level diagonal steady-state entries are requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalEquation {
    Redfield,
    Cumulant,
}

/// `M(ω) = (1/π) PV∫ [γ(Ω) − e^{βω}γ(−Ω)]/(ω−Ω)² dΩ`, which equals
/// `∫₀^∞ ds (γ(ω,s) − e^{βω}γ(−ω,s))`.
pub fn cumulant_integral_m(measure: &SpectralMeasure, beta: f64, omega: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let ebw = (beta * omega).exp();
    let mut acc = 0.0;
    if let Some(d) = measure.smooth() {
        let (lo, hi) = d.support(cfg);
        let (lo, hi) = (lo.min(-hi), hi.max(-lo));
        let mut breaks = d.breakpoints();
        breaks.extend(d.breakpoints().iter().map(|b| -b));
        let f = |w: f64| {
            let n = d.value(w) - ebw * d.value(-w);
            n / ((omega - w) * (omega - w) * PI)
        };
        acc += principal_value(omega, f, (lo, hi), &breaks, d.width(), 1e-4, cfg)?;
    }
    for a in &measure.atoms {
        let dp = omega - a.location;
        let dm = omega + a.location;
        if dp == 0.0 || dm == 0.0 {
            return Err(Error::Pole(omega));
        }
        acc += a.weight / (dp * dp * PI) - ebw * a.weight / (dm * dm * PI);
    }
    Ok(acc)
}

/// Diagonal steady-state entries `(Υ_st(ω₀,ω₀), Υ_st(−ω₀,−ω₀))` of a two-level
/// system in the gauge `Υ_st(0,0) = 0`.
pub fn tls_diagonal_steady(
    bath: &BathModel,
    omega0: f64,
    equation: DiagonalEquation,
    cfg: &QuadratureConfig,
) -> Result<(Complex64, Complex64)> {
    match equation {
        DiagonalEquation::Redfield => Ok((ZERO, ZERO)),
        DiagonalEquation::Cumulant => {
            let m = bath.measure();
            let b = bath.beta;
            Ok((
                Complex64::new(cumulant_integral_m(&m, b, omega0, cfg)? / (2.0 * b), 0.0),
                Complex64::new(cumulant_integral_m(&m, b, -omega0, cfg)? / (2.0 * b), 0.0),
            ))
        }
    }
}

/// Literature expression for `⟨σ_x⟩` of the two-level system at second order,
/// `−(4λ²f₁f₂/ω)∫₀^∞ [ω_s ω tanh(βω/2)/(Ω²−ω²) − ω² ω_a/(Ω(Ω²−ω²))] dΩ`
/// with `ω_a = J` and `ω_s = J coth(βΩ/2)`.
pub fn guarnieri_sigma_x(
    bath: &BathModel,
    omega0: f64,
    lambda: f64,
    f1: f64,
    f2: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let Spectrum::Ohmic { gamma_c, cutoff } = bath.spectrum else {
        return Err(Error::Validation("the σ_x expression needs an Ohmic bath".into()));
    };
    if f1 == 0.0 || f2 == 0.0 || lambda == 0.0 {
        return Ok(0.0);
    }
    let beta = bath.beta;
    let w = omega0;
    let th = (0.5 * beta * w).tanh();
    let f = |om: f64| {
        if om <= 0.0 {
            // J(Ω)/Ω and J coth(βΩ/2) are finite at the origin.
            let js = 2.0 * gamma_c / beta;
            return (js * w * th) / (-w * w) - w * w * gamma_c / (-w * w);
        }
        let e = (-om / cutoff).exp();
        let jcoth = gamma_c * om * e * (1.0 + (-beta * om).exp()) / (-(-beta * om).exp_m1());
        let d = om * om - w * w;
        (jcoth * w * th) / d - w * w * (gamma_c * e) / d
    };
    let l = cfg.cutoff_multiplier * cutoff.max(1.0 / beta);
    let integral = principal_value(w, f, (0.0, l), &[], cutoff, 1e-4, cfg)?;
    Ok(-4.0 * lambda * lambda * f1 * f2 / w * integral)
}
