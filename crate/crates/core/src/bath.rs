// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Reservoir spectral functions.
//!
//! The spectral measure `γ(Ω)` is the Fourier transform of the bath
//! autocorrelation function. It consists of a smooth density and a list of
//! atoms. From it we derive the Lamb shift `S(ω)`, the finite-time half-sided
//! transform `Γ(ω, t)`, its Redfield combinations, and the time-integrated
//! coefficients of the cumulant map.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureConfig};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// One harmonic bath mode: frequency `Ω_k > 0` and coupling `g_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub frequency: f64,
    pub coupling: f64,
}

/// Spectral description of a reservoir.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// `J(Ω) = γ_c Ω e^{-|Ω|/ω_c}`.
    Ohmic { gamma_c: f64, cutoff: f64 },
    Discrete { modes: Vec<Mode> },
}

/// A reservoir at inverse temperature `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathModel {
    pub beta: f64,
    pub spectrum: Spectrum,
}

impl BathModel {
    pub fn ohmic(beta: f64, gamma_c: f64, cutoff: f64) -> Result<Self> {
        let b = Self {
            beta,
            spectrum: Spectrum::Ohmic { gamma_c, cutoff },
        };
        b.validate()?;
        Ok(b)
    }

    pub fn discrete(beta: f64, modes: Vec<Mode>) -> Result<Self> {
        let b = Self {
            beta,
            spectrum: Spectrum::Discrete { modes },
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Validation(format!("beta must be positive, got {}", self.beta)));
        }
        match &self.spectrum {
            Spectrum::Ohmic { gamma_c, cutoff } => {
                if !(*cutoff > 0.0 && cutoff.is_finite()) {
                    return Err(Error::Validation(format!("cutoff must be positive, got {cutoff}")));
                }
                if !(*gamma_c >= 0.0 && gamma_c.is_finite()) {
                    return Err(Error::Validation(format!("gamma_c must be non-negative, got {gamma_c}")));
                }
            }
            Spectrum::Discrete { modes } => {
                for m in modes {
                    if !(m.frequency > 0.0 && m.frequency.is_finite() && m.coupling.is_finite()) {
                        return Err(Error::Validation(format!(
                            "mode frequencies must be positive and finite, got {m:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The spectral measure `γ(Ω)` of this bath.
    pub fn measure(&self) -> SpectralMeasure {
        gamma_spectral(self)
    }
}

/// Bose–Einstein occupation `1/(e^{βΩ}−1)`.
pub fn bose(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// Smooth part of a spectral measure.
pub trait SmoothDensity: Send + Sync {
    fn value(&self, omega: f64) -> f64;
    /// `ln γ(Ω)` when available in closed form; used to avoid overflow in
    /// products with exponentially large kernels.
    fn ln_value(&self, _omega: f64) -> Option<f64> {
        None
    }
    /// Integration interval.
    fn support(&self, cfg: &QuadratureConfig) -> (f64, f64);
    /// Points of reduced smoothness inside the support.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Characteristic spectral width, used to size principal-value windows.
    fn width(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
struct OhmicDensity {
    beta: f64,
    gamma_c: f64,
    cutoff: f64,
}

impl SmoothDensity for OhmicDensity {
    fn value(&self, w: f64) -> f64 {
        if w == 0.0 {
            return 2.0 * PI * self.gamma_c / self.beta;
        }
        // πJ(|Ω|)(coth(βΩ/2)+1) = 2πγ_c Ω e^{−|Ω|/ω_c} / (1 − e^{−βΩ}) for either sign.
        2.0 * PI * self.gamma_c * w * (-w.abs() / self.cutoff).exp() / (-(-self.beta * w).exp_m1())
    }

    fn ln_value(&self, w: f64) -> Option<f64> {
        if self.gamma_c <= 0.0 {
            return None;
        }
        let base = (2.0 * PI * self.gamma_c).ln();
        if w == 0.0 {
            return Some(base - self.beta.ln());
        }
        let a = w.abs();
        let x = self.beta * a;
        let denom = (-(-x).exp_m1()).ln();
        Some(if w > 0.0 {
            base + a.ln() - a / self.cutoff - denom
        } else {
            base + a.ln() - a / self.cutoff - x - denom
        })
    }

    fn support(&self, cfg: &QuadratureConfig) -> (f64, f64) {
        let l = cfg.cutoff_multiplier * self.cutoff.max(1.0 / self.beta);
        (-l, l)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn width(&self) -> f64 {
        self.cutoff
    }
}

/// Closure-backed density with an explicit support, for user-supplied spectra.
pub struct FnDensity<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
    pub width: f64,
}

impl<F: Fn(f64) -> f64 + Send + Sync> SmoothDensity for FnDensity<F> {
    fn value(&self, w: f64) -> f64 {
        if w < self.lo || w > self.hi {
            0.0
        } else {
            (self.f)(w)
        }
    }
    fn support(&self, _cfg: &QuadratureConfig) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
    fn width(&self) -> f64 {
        self.width
    }
}

/// Point mass of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// `γ(Ω) dΩ = smooth(Ω) dΩ + Σ w_k δ(Ω − Ω_k) dΩ`.
#[derive(Clone, Default)]
pub struct SpectralMeasure {
    smooth: Option<Arc<dyn SmoothDensity>>,
    pub atoms: Vec<Atom>,
}

impl fmt::Debug for SpectralMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralMeasure")
            .field("smooth", &self.smooth.is_some())
            .field("atoms", &self.atoms)
            .finish()
    }
}

/// Spectral measure of a bath model.
pub fn gamma_spectral(bath: &BathModel) -> SpectralMeasure {
    match &bath.spectrum {
        Spectrum::Ohmic { gamma_c, cutoff } => SpectralMeasure {
            smooth: Some(Arc::new(OhmicDensity {
                beta: bath.beta,
                gamma_c: *gamma_c,
                cutoff: *cutoff,
            })),
            atoms: Vec::new(),
        },
        Spectrum::Discrete { modes } => {
            let mut atoms = Vec::with_capacity(2 * modes.len());
            for m in modes {
                let n = bose(bath.beta, m.frequency);
                let g2 = 2.0 * PI * m.coupling * m.coupling;
                atoms.push(Atom {
                    location: m.frequency,
                    weight: g2 * (n + 1.0),
                });
                atoms.push(Atom {
                    location: -m.frequency,
                    weight: g2 * n,
                });
            }
            SpectralMeasure { smooth: None, atoms }
        }
    }
}

/// Principal value of `∫ f(Ω) dΩ` over `[lo, hi]` where `f` has at most a
/// simple pole at `omega`.
///
/// The pole is removed by pairing `ω ± u` over a window of half-width
/// `min(|ω| + m·width, 2m·width)`; the rest is integrated directly. Inside
/// `u < umin_rel · max(|ω|, min(width, 1))` the paired integrand is frozen at its
/// value at the threshold to suppress rounding noise.
pub fn principal_value<F>(
    omega: f64,
    f: F,
    (lo, hi): (f64, f64),
    breaks: &[f64],
    width: f64,
    umin_rel: f64,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if omega <= lo || omega >= hi {
        return quadrature::integrate(&f, lo, hi, breaks, cfg);
    }
    let m = cfg.window_multiplier;
    let h = (omega.abs() + m * width)
        .min(2.0 * m * width)
        .min(omega - lo)
        .min(hi - omega);
    let umin = umin_rel * omega.abs().max(width.min(1.0));
    let pair_breaks: Vec<f64> = breaks.iter().map(|b| (b - omega).abs()).collect();
    let paired = quadrature::integrate(
        |u| {
            let u = u.max(umin);
            f(omega - u) + f(omega + u)
        },
        0.0,
        h,
        &pair_breaks,
        cfg,
    )?;
    let left = quadrature::integrate(&f, lo, omega - h, breaks, cfg)?;
    let right = quadrature::integrate(&f, omega + h, hi, breaks, cfg)?;
    Ok(paired + left + right)
}

/// `F_t(x) = ∫₀ᵗ e^{ixs} ds`, evaluated without cancellation.
pub fn f_t(x: f64, t: f64) -> Complex64 {
    if x == 0.0 {
        return Complex64::new(t, 0.0);
    }
    let h = 0.5 * x * t;
    Complex64::new((x * t).sin() / x, 2.0 * h.sin() * h.sin() / x)
}

impl SpectralMeasure {
    pub fn from_smooth(density: Arc<dyn SmoothDensity>) -> Self {
        Self {
            smooth: Some(density),
            atoms: Vec::new(),
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        Self { smooth: None, atoms }
    }

    /// Closure-backed smooth measure on `[lo, hi]`.
    pub fn from_fn<F>(f: F, lo: f64, hi: f64, breaks: Vec<f64>, width: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_smooth(Arc::new(FnDensity {
            f,
            lo,
            hi,
            breaks,
            width,
        }))
    }

    pub fn smooth(&self) -> Option<&dyn SmoothDensity> {
        self.smooth.as_deref()
    }

    /// Smooth density at `Ω`; atoms contribute nothing pointwise.
    pub fn value(&self, omega: f64) -> f64 {
        self.smooth.as_ref().map_or(0.0, |s| s.value(omega))
    }

    fn check_pole(&self, omega: f64) -> Result<()> {
        for a in &self.atoms {
            if (omega - a.location).abs() <= 1e-12 * a.location.abs().max(1.0) {
                return Err(Error::Pole(omega));
            }
        }
        Ok(())
    }

    fn smooth_support(&self, s: &dyn SmoothDensity, cfg: &QuadratureConfig) -> (f64, f64) {
        s.support(cfg)
    }

    /// Lamb shift `S(ω) = PV (1/2π)∫ γ(Ω)/(ω−Ω) dΩ`.
    pub fn lamb_shift(&self, omega: f64, cfg: &QuadratureConfig) -> Result<f64> {
        self.check_pole(omega)?;
        let mut s = 0.0;
        if let Some(d) = &self.smooth {
            let (lo, hi) = self.smooth_support(d.as_ref(), cfg);
            s += principal_value(
                omega,
                |w| d.value(w) / (omega - w),
                (lo, hi),
                &d.breakpoints(),
                d.width(),
                1e-7,
                cfg,
            )? / (2.0 * PI);
        }
        for a in &self.atoms {
            s += a.weight / (2.0 * PI * (omega - a.location));
        }
        Ok(s)
    }

    /// `γ(ω)` of the long-time coefficients (smooth part; atoms are point masses).
    pub fn gamma(&self, omega: f64) -> f64 {
        self.value(omega)
    }

    /// Half-sided transform `Γ(ω, t) = (1/2π)∫ γ(Ω) F_t(ω−Ω) dΩ`;
    /// `t = +∞` returns `½γ(ω) + iS(ω)`.
    pub fn gamma_finite(&self, omega: f64, t: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
        Ok(self.gamma_finite_many(&[omega], t, cfg)?[0])
    }

    /// [`Self::gamma_finite`] for several frequencies sharing one quadrature.
    pub fn gamma_finite_many(
        &self,
        omegas: &[f64],
        t: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Vec<Complex64>> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        if t == f64::INFINITY {
            return omegas
                .iter()
                .map(|&w| Ok(Complex64::new(0.5 * self.gamma(w), self.lamb_shift(w, cfg)?)))
                .collect();
        }
        let n = omegas.len();
        let mut out = vec![ZERO; n];
        if t == 0.0 {
            return Ok(out);
        }
        if let Some(d) = &self.smooth {
            let (lo, hi) = self.smooth_support(d.as_ref(), cfg);
            let mut breaks = d.breakpoints();
            breaks.extend_from_slice(omegas);
            let v = quadrature::integrate_vec(
                |w, buf| {
                    let g = d.value(w) / (2.0 * PI);
                    for (k, &om) in omegas.iter().enumerate() {
                        buf[k] = f_t(om - w, t) * g;
                    }
                },
                lo,
                hi,
                n,
                &breaks,
                Some(2.0 * PI / t),
                cfg,
            )?;
            for k in 0..n {
                out[k] += v[k];
            }
        }
        for a in &self.atoms {
            for (k, &om) in omegas.iter().enumerate() {
                out[k] += f_t(om - a.location, t) * (a.weight / (2.0 * PI));
            }
        }
        Ok(out)
    }

    /// Correlation function `C(t) = (1/2π)∫ γ(Ω) e^{−iΩt} dΩ`.
    pub fn correlation(&self, t: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
        let mut c = ZERO;
        if let Some(d) = &self.smooth {
            let (lo, hi) = self.smooth_support(d.as_ref(), cfg);
            let panel = if t != 0.0 { Some(2.0 * PI / t.abs()) } else { None };
            c += quadrature::integrate_complex(
                |w| Complex64::new(0.0, -w * t).exp() * d.value(w),
                lo,
                hi,
                &d.breakpoints(),
                panel,
                cfg,
            )? / (2.0 * PI);
        }
        for a in &self.atoms {
            c += Complex64::new(0.0, -a.location * t).exp() * (a.weight / (2.0 * PI));
        }
        Ok(c)
    }

    /// Largest relative violation of `γ(−Ω) = γ(Ω) e^{−βΩ}` over the given
    /// sample points and over atom pairs.
    pub fn detailed_balance_defect(&self, beta: f64, samples: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for &w in samples {
            let a = self.value(-w);
            let b = self.value(w) * (-beta * w).exp();
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        for a in self.atoms.iter().filter(|a| a.location > 0.0) {
            let partner = self
                .atoms
                .iter()
                .find(|b| b.location == -a.location)
                .map_or(0.0, |b| b.weight);
            let expect = a.weight * (-beta * a.location).exp();
            let scale = expect.abs().max(partner.abs());
            if scale > 0.0 {
                worst = worst.max((partner - expect).abs() / scale);
            }
        }
        worst
    }

    /// Time-integrated cumulant coefficients at time `t` for the frequency list.
    pub fn cumulant_integrals(
        &self,
        omegas: &[f64],
        t: f64,
        cfg: &QuadratureConfig,
    ) -> Result<CumulantIntegrals> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("cumulant time must be finite and non-negative, got {t}")));
        }
        let n = omegas.len();
        let nn = n * n;
        let mut p = DMatrix::from_element(n, n, ZERO);
        let mut gram = DMatrix::from_element(n, n, ZERO);
        if t == 0.0 || n == 0 {
            return Ok(CumulantIntegrals::from_parts(omegas.to_vec(), t, p, gram));
        }
        let moments: Vec<[Complex64; 6]> = (0..nn)
            .map(|k| small_y_moments(omegas[k / n] - omegas[k % n], t))
            .collect();
        let node = |w: f64, weight: f64, buf: &mut [Complex64], fx: &mut Vec<Complex64>| {
            fx.clear();
            fx.extend(omegas.iter().map(|&om| f_t(om - w, t)));
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    let y = omegas[j] - w;
                    let h = if (y * t).abs() < 1e-3 {
                        small_y_h(&moments[k], y)
                    } else {
                        let delta = omegas[i] - omegas[j];
                        (fx[i] - f_t(delta, t)) / (I * y)
                    };
                    buf[k] = h * weight;
                    buf[nn + k] = fx[i] * fx[j].conj() * weight;
                }
            }
        };
        if let Some(d) = &self.smooth {
            let (lo, hi) = self.smooth_support(d.as_ref(), cfg);
            let mut breaks = d.breakpoints();
            breaks.extend_from_slice(omegas);
            let mut fx = Vec::with_capacity(n);
            let v = quadrature::integrate_vec(
                |w, buf| node(w, d.value(w) / (2.0 * PI), buf, &mut fx),
                lo,
                hi,
                2 * nn,
                &breaks,
                Some(2.0 * PI / t),
                cfg,
            )?;
            for k in 0..nn {
                p[(k / n, k % n)] += v[k];
                gram[(k / n, k % n)] += v[nn + k];
            }
        }
        let mut buf = vec![ZERO; 2 * nn];
        let mut fx = Vec::with_capacity(n);
        for a in &self.atoms {
            node(a.location, a.weight / (2.0 * PI), &mut buf, &mut fx);
            for k in 0..nn {
                p[(k / n, k % n)] += buf[k];
                gram[(k / n, k % n)] += buf[nn + k];
            }
        }
        Ok(CumulantIntegrals::from_parts(omegas.to_vec(), t, p, gram))
    }
}

/// `M_k = ∫₀ᵗ (is)^k e^{iΔs} ds / (k!·i)` for k = 1..6, the Taylor coefficients
/// of `[F_t(Δ+y) − F_t(Δ)]/(iy)` in powers of `y`.
fn small_y_moments(delta: f64, t: f64) -> [Complex64; 6] {
    let panels = ((delta.abs() * t / 2.0).ceil() as usize).clamp(1, 100_000);
    let mut out = [ZERO; 6];
    let mut fact = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        let kk = (k + 1) as i32;
        fact *= kk as f64;
        let m = quadrature::composite_fixed(
            |s| (I * s).powi(kk) * Complex64::new(0.0, delta * s).exp(),
            0.0,
            t,
            panels,
        );
        *slot = m / (I * fact);
    }
    out
}

fn small_y_h(m: &[Complex64; 6], y: f64) -> Complex64 {
    let mut acc = ZERO;
    let mut yp = 1.0;
    for c in m {
        acc += c * yp;
        yp *= y;
    }
    acc
}

/// Time-integrated cumulant coefficients over a frequency list.
///
/// `p[(i,j)] = ∫₀ᵗ e^{i(ω_i−ω_j)s} Γ(ω_j, s) ds`. The integrated dissipative
/// coefficient `∫₀ᵗ γ̃(ω_i, ω_j, s) ds` is stored in Gram form, which keeps it
/// positive semi-definite.
#[derive(Debug, Clone)]
pub struct CumulantIntegrals {
    pub omegas: Vec<f64>,
    pub t: f64,
    pub p: DMatrix<Complex64>,
    pub i_gamma: DMatrix<Complex64>,
    pub i_s: DMatrix<Complex64>,
}

impl CumulantIntegrals {
    fn from_parts(omegas: Vec<f64>, t: f64, p: DMatrix<Complex64>, gram: DMatrix<Complex64>) -> Self {
        let i_s = s_from_p(&p);
        let i_gamma = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
        Self {
            omegas,
            t,
            p,
            i_gamma,
            i_s,
        }
    }

    /// Extend to a later time `t_new` assuming `Γ(ω, s) = Γ(ω, ∞)` for `s > t`.
    pub fn extend_saturated(&self, t_new: f64, gamma_inf: &[Complex64]) -> Result<Self> {
        if t_new < self.t {
            return Err(Error::Domain("cannot extend cumulant integrals backwards in time".into()));
        }
        let n = self.omegas.len();
        let mut p = self.p.clone();
        let mut ig = self.i_gamma.clone();
        for i in 0..n {
            for j in 0..n {
                let delta = self.omegas[i] - self.omegas[j];
                let g = f_t(delta, t_new) - f_t(delta, self.t);
                p[(i, j)] += gamma_inf[j] * g;
                ig[(i, j)] += g * (gamma_inf[j] + gamma_inf[i].conj());
            }
        }
        let i_s = s_from_p(&p);
        Ok(Self {
            omegas: self.omegas.clone(),
            t: t_new,
            p,
            i_gamma: (&ig + ig.adjoint()) * Complex64::new(0.5, 0.0),
            i_s,
        })
    }

    pub fn index(&self, omega: f64) -> Option<usize> {
        self.omegas.iter().position(|&w| w == omega)
    }
}

fn s_from_p(p: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let pt = p.adjoint();
    (p - pt) / Complex64::new(0.0, 2.0)
}

/// Redfield coefficient `γ(ω,ω′,t) = Γ(ω′,t) + Γ*(ω,t)` from `Γ` values.
pub fn redfield_gamma(gamma_w: Complex64, gamma_wp: Complex64) -> Complex64 {
    gamma_wp + gamma_w.conj()
}

/// Redfield coefficient `S(ω,ω′,t) = (Γ(ω′,t) − Γ*(ω,t))/(2i)`.
pub fn redfield_s(gamma_w: Complex64, gamma_wp: Complex64) -> Complex64 {
    (gamma_wp - gamma_w.conj()) / Complex64::new(0.0, 2.0)
}

/// Convenience wrapper: Lamb shift of a bath model.
pub fn lamb_shift_s(bath: &BathModel, omega: f64, cfg: &QuadratureConfig) -> Result<f64> {
    bath.measure().lamb_shift(omega, cfg)
}

/// Convenience wrapper: `Γ(ω, t)` of a bath model.
pub fn finite_time_gamma(bath: &BathModel, omega: f64, t: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
    bath.measure().gamma_finite(omega, t, cfg)
}

/// `γ(ω,ω′,t)` of a bath model.
pub fn gamma_finite_time(
    bath: &BathModel,
    omega: f64,
    omega_p: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    let g = bath.measure().gamma_finite_many(&[omega, omega_p], t, cfg)?;
    Ok(redfield_gamma(g[0], g[1]))
}

/// `S(ω,ω′,t)` of a bath model.
pub fn s_finite_time(
    bath: &BathModel,
    omega: f64,
    omega_p: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    let g = bath.measure().gamma_finite_many(&[omega, omega_p], t, cfg)?;
    Ok(redfield_s(g[0], g[1]))
}

/// Bath autocorrelation `⟨R(t)R(0)⟩`.
///
/// Ohmic baths use `∫₀^∞ J(Ω)[coth(βΩ/2) cos Ωt − i sin Ωt] dΩ`; discrete
/// baths sum their modes exactly.
pub fn correlation_time_domain(bath: &BathModel, t: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
    match &bath.spectrum {
        Spectrum::Ohmic { gamma_c, cutoff } => {
            let beta = bath.beta;
            let l = cfg.cutoff_multiplier * cutoff.max(1.0 / beta);
            let j_coth = |w: f64| {
                if w == 0.0 {
                    2.0 * gamma_c / beta
                } else {
                    let e = (-beta * w).exp();
                    gamma_c * w * (-w / cutoff).exp() * (1.0 + e) / (-(-beta * w).exp_m1())
                }
            };
            let panel = if t != 0.0 { Some(2.0 * PI / t.abs()) } else { None };
            quadrature::integrate_complex(
                |w| {
                    let j = gamma_c * w * (-w / cutoff).exp();
                    Complex64::new(j_coth(w) * (w * t).cos(), -j * (w * t).sin())
                },
                0.0,
                l,
                &[],
                panel,
                cfg,
            )
        }
        Spectrum::Discrete { modes } => Ok(modes
            .iter()
            .map(|m| {
                let n = bose(bath.beta, m.frequency);
                let ph = Complex64::new(0.0, -m.frequency * t).exp();
                (ph * (n + 1.0) + ph.conj() * n) * (m.coupling * m.coupling)
            })
            .sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ohmic() -> BathModel {
        BathModel::ohmic(1.0, 1.0, 50.0).unwrap()
    }

    #[test]
    fn ohmic_zero_limit() {
        let b = BathModel::ohmic(2.0, 0.7, 10.0).unwrap();
        let m = b.measure();
        let lim = 2.0 * PI * 0.7 / 2.0;
        assert!((m.value(0.0) - lim).abs() < 1e-14);
        assert!((m.value(1e-9) - lim).abs() < 1e-8 * lim);
        assert!((m.value(-1e-9) - lim).abs() < 1e-8 * lim);
    }

    #[test]
    fn ohmic_detailed_balance_at_one() {
        let m = ohmic().measure();
        let r = m.value(-1.0) / m.value(1.0);
        assert!((r - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn ohmic_log_density_matches() {
        let b = BathModel::ohmic(0.7, 1.3, 20.0).unwrap();
        let m = b.measure();
        let d = m.smooth().unwrap();
        for w in [-30.0, -2.0, -1e-3, 0.0, 1e-3, 3.0, 50.0] {
            let v = d.value(w);
            assert!((d.ln_value(w).unwrap() - v.ln()).abs() < 1e-12, "w={w}");
        }
        assert!(d.ln_value(-5000.0).unwrap().is_finite());
    }

    #[test]
    fn discrete_weights_ratio() {
        let b = BathModel::discrete(
            1.5,
            vec![Mode {
                frequency: 2.0,
                coupling: 0.3,
            }],
        )
        .unwrap();
        let m = b.measure();
        let plus = m.atoms.iter().find(|a| a.location == 2.0).unwrap().weight;
        let minus = m.atoms.iter().find(|a| a.location == -2.0).unwrap().weight;
        assert!((minus / plus - (-3.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(BathModel::ohmic(-1.0, 1.0, 1.0).is_err());
        assert!(BathModel::ohmic(1.0, 1.0, 0.0).is_err());
        assert!(BathModel::discrete(
            1.0,
            vec![Mode {
                frequency: -1.0,
                coupling: 1.0
            }]
        )
        .is_err());
    }

    #[test]
    fn box_spectrum_lamb_shift() {
        let (c, w) = (0.8, 3.0);
        let m = SpectralMeasure::from_fn(move |_| c, -w, w, vec![], w);
        let cfg = QuadratureConfig::default();
        for om in [-2.5, -0.4, 0.0, 1.1, 2.9] {
            let s = m.lamb_shift(om, &cfg).unwrap();
            let exact = c / (2.0 * PI) * ((w + om) / (w - om)).ln();
            assert!((s - exact).abs() < 1e-8, "ω={om}: {s} vs {exact}");
        }
    }

    #[test]
    fn even_spectrum_has_zero_shift_at_origin() {
        let m = SpectralMeasure::from_fn(|x: f64| (-x * x).exp(), -8.0, 8.0, vec![], 1.0);
        let s = m.lamb_shift(0.0, &QuadratureConfig::default()).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn ohmic_shift_matches_independent_oracle() {
        // Oracle: antisymmetric pairing over the whole support in the variable u = Ω − ω,
        // integrated with a plain composite rule on a dense grid.
        let m = ohmic().measure();
        let cfg = QuadratureConfig::default();
        let s = m.lamb_shift(1.0, &cfg).unwrap();
        let d = m.smooth().unwrap();
        let l = 2000.0;
        let w = 1.0;
        let paired = |u: f64| {
            let u = u.max(1e-12);
            (d.value(w - u) - d.value(w + u)) / u
        };
        // Pairing covers u ∈ [0, l - w]; the leftover [-l, -l + 2w] side is negligible.
        let mut acc = quadrature::composite_fixed(|u| Complex64::new(paired(u), 0.0), 0.0, 1.0, 400).re;
        acc += quadrature::composite_fixed(|u| Complex64::new(paired(u), 0.0), 1.0, 50.0, 4000).re;
        acc += quadrature::composite_fixed(|u| Complex64::new(paired(u), 0.0), 50.0, l - w, 8000).re;
        let oracle = acc / (2.0 * PI);
        assert!((s - oracle).abs() < 1e-7, "{s} vs {oracle}");
    }

    #[test]
    fn discrete_shift_pole_and_sum() {
        let b = BathModel::discrete(
            1.0,
            vec![Mode {
                frequency: 2.0,
                coupling: 0.5,
            }],
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        assert!(matches!(lamb_shift_s(&b, 2.0, &cfg), Err(Error::Pole(_))));
        let n = bose(1.0, 2.0);
        let s = lamb_shift_s(&b, 1.0, &cfg).unwrap();
        let exact = 0.25 * ((n + 1.0) / (1.0 - 2.0) + n / (1.0 + 2.0));
        assert!((s - exact).abs() < 1e-14);
    }

    #[test]
    fn gamma_finite_limits() {
        let b = BathModel::ohmic(1.0, 1.0, 5.0).unwrap();
        let cfg = QuadratureConfig::default();
        assert_eq!(finite_time_gamma(&b, 1.0, 0.0, &cfg).unwrap(), ZERO);
        let inf = finite_time_gamma(&b, 1.0, f64::INFINITY, &cfg).unwrap();
        let m = b.measure();
        assert!((inf.re - 0.5 * m.value(1.0)).abs() < 1e-14);
        assert!((inf.im - m.lamb_shift(1.0, &cfg).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn gamma_finite_small_time() {
        let b = ohmic();
        let cfg = QuadratureConfig::with_tolerances(1e-14, 1e-12);
        let t = 1e-3 / 50.0;
        let c0 = b.measure().correlation(0.0, &cfg).unwrap();
        let g = finite_time_gamma(&b, 1.0, t, &cfg).unwrap();
        let rel = (g - c0 * t).norm() / (c0.norm() * t);
        // Leading correction is first order in t·(scale of C′), bounded well below 1e-2 here.
        assert!(rel < 2e-2, "rel {rel}");
        // Time-domain oracle: Γ(ω,t) = ∫₀ᵗ e^{iωs} C(s) ds by Gauss–Kronrod in s.
        let oracle: Complex64 = quadrature::kronrod_rule(0.0, t)
            .iter()
            .map(|&(s, w)| Complex64::new(0.0, s).exp() * correlation_time_domain(&b, s, &cfg).unwrap() * w)
            .sum();
        assert!((g - oracle).norm() < 1e-8 * oracle.norm());
    }

    #[test]
    fn gamma_finite_approaches_long_time() {
        let b = BathModel::ohmic(1.0, 0.5, 4.0).unwrap();
        let cfg = QuadratureConfig::default();
        let g = finite_time_gamma(&b, 1.0, 400.0, &cfg).unwrap();
        let inf = finite_time_gamma(&b, 1.0, f64::INFINITY, &cfg).unwrap();
        assert!((g - inf).norm() < 5e-3 * inf.norm());
    }

    #[test]
    fn redfield_combinations() {
        let b = BathModel::ohmic(1.0, 1.0, 10.0).unwrap();
        let cfg = QuadratureConfig::default();
        let m = b.measure();
        let g = gamma_finite_time(&b, 1.0, 1.0, f64::INFINITY, &cfg).unwrap();
        let s = s_finite_time(&b, 1.0, 1.0, f64::INFINITY, &cfg).unwrap();
        assert!((g.re - m.value(1.0)).abs() < 1e-13 && g.im == 0.0);
        assert!((s.re - m.lamb_shift(1.0, &cfg).unwrap()).abs() < 1e-13 && s.im.abs() < 1e-15);
        let g12 = gamma_finite_time(&b, 1.0, -1.0, f64::INFINITY, &cfg).unwrap();
        let expect = Complex64::new(
            0.5 * (m.value(1.0) + m.value(-1.0)),
            m.lamb_shift(-1.0, &cfg).unwrap() - m.lamb_shift(1.0, &cfg).unwrap(),
        );
        assert!((g12 - expect).norm() < 1e-13);
        assert_eq!(gamma_finite_time(&b, 1.0, 2.0, 0.0, &cfg).unwrap(), ZERO);
        assert_eq!(s_finite_time(&b, 1.0, 2.0, 0.0, &cfg).unwrap(), ZERO);
    }

    #[test]
    fn discrete_correlation_single_mode() {
        let (om, g, beta) = (1.7, 0.4, 0.9);
        let b = BathModel::discrete(
            beta,
            vec![Mode {
                frequency: om,
                coupling: g,
            }],
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        let n = 1.0 / ((beta * om).exp() - 1.0);
        for t in [0.0, 0.3, 2.0] {
            let c = correlation_time_domain(&b, t, &cfg).unwrap();
            let expect = (Complex64::new(0.0, -om * t).exp() * (n + 1.0)
                + Complex64::new(0.0, om * t).exp() * n)
                * (g * g);
            assert!((c - expect).norm() < 1e-14);
            assert!((b.measure().correlation(t, &cfg).unwrap() - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn ohmic_correlation_fourier_consistency() {
        let b = ohmic();
        let cfg = QuadratureConfig::with_tolerances(1e-11, 1e-11);
        let c0 = correlation_time_domain(&b, 0.0, &cfg).unwrap();
        assert!(c0.re > 0.0 && c0.im.abs() < 1e-12);
        let t = 0.1 / 50.0;
        let direct = correlation_time_domain(&b, t, &cfg).unwrap();
        let fourier = b.measure().correlation(t, &cfg).unwrap();
        assert!((direct - fourier).norm() < 1e-6 * direct.norm());
        let back = correlation_time_domain(&b, -t, &cfg).unwrap();
        assert!((back - direct.conj()).norm() < 1e-9 * direct.norm());
    }

    #[test]
    fn lamb_shift_equals_long_time_imaginary_part() {
        let b = BathModel::ohmic(2.0, 0.3, 8.0).unwrap();
        let cfg = QuadratureConfig::default();
        for w in [-1.5, 0.0, 0.8] {
            let s = lamb_shift_s(&b, w, &cfg).unwrap();
            let g = finite_time_gamma(&b, w, f64::INFINITY, &cfg).unwrap();
            assert!((s - g.im).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulant_integrals_match_direct_time_integral() {
        let b = BathModel::ohmic(1.0, 0.5, 5.0).unwrap();
        let m = b.measure();
        let cfg = QuadratureConfig::with_tolerances(1e-11, 1e-11);
        let om = [-1.0, 0.0, 1.0];
        let t = 1.3;
        let ci = m.cumulant_integrals(&om, t, &cfg).unwrap();
        // Oracle: ∫₀ᵗ e^{iΔs} Γ(ω′, s) ds with Γ from the single-frequency routine.
        let nodes = quadrature::kronrod_rule(0.0, t);
        let gs: Vec<Vec<Complex64>> = nodes
            .iter()
            .map(|&(s, _)| m.gamma_finite_many(&om, s, &cfg).unwrap())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let oracle: Complex64 = nodes
                    .iter()
                    .zip(&gs)
                    .map(|(&(s, w), g)| Complex64::new(0.0, (om[i] - om[j]) * s).exp() * g[j] * w)
                    .sum();
                assert!((ci.p[(i, j)] - oracle).norm() < 1e-8, "({i},{j})");
                let gamma_oracle: Complex64 = nodes
                    .iter()
                    .zip(&gs)
                    .map(|(&(s, w), g)| {
                        Complex64::new(0.0, (om[i] - om[j]) * s).exp() * redfield_gamma(g[i], g[j]) * w
                    })
                    .sum();
                assert!((ci.i_gamma[(i, j)] - gamma_oracle).norm() < 1e-8, "γ ({i},{j})");
            }
        }
    }

    #[test]
    fn cumulant_integrals_psd() {
        let m = ohmic().measure();
        let cfg = QuadratureConfig::default();
        for t in [0.5, 5.0, 50.0] {
            let ci = m.cumulant_integrals(&[1.0, -1.0], t, &cfg).unwrap();
            let ev = crate::linalg::eigvalsh(&ci.i_gamma).unwrap();
            let tr = ci.i_gamma.trace().re;
            assert!(ev[0] >= -1e-9 * tr, "t={t}: {ev:?}");
        }
    }

    proptest! {
        #[test]
        fn detailed_balance_pointwise(beta in 0.1f64..5.0, wc in 0.5f64..60.0, w in 0.01f64..30.0) {
            let m = BathModel::ohmic(beta, 1.0, wc).unwrap().measure();
            let a = m.value(-w);
            let b = m.value(w) * (-beta * w).exp();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300));
        }

        #[test]
        fn f_t_matches_definition(x in -20.0f64..20.0, t in 0.0f64..5.0) {
            let direct = quadrature::composite_fixed(|s| Complex64::new(0.0, x * s).exp(), 0.0, t, 20);
            prop_assert!((f_t(x, t) - direct).norm() < 1e-11);
        }
    }
}
