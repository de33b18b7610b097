// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Order-by-order stationarity conditions: the second-order residual and the
//! fourth-order diagonal equations of a two-level system.

use num_complex::Complex64;

use crate::bath::{f_t, redfield_gamma, redfield_s, BathModel};
use crate::corrections::{
    cumulant_integral_m, steady_offdiag_from_values, DiagonalEquation, KossakowskiSpec,
};
use crate::error::{Error, Result};
use crate::generators::{build_generator, Superoperator};
use crate::linalg::{self, CMat};
use crate::operators::{assemble_correction, SpectralDecomposition, UpsilonTable};
use crate::quadrature::QuadratureConfig;
use crate::system::{LongTimeSpectra, OpenSystem};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `α(ω) = (1 − e^{−βω})/ω`, with `α(0) = β`.
pub fn alpha_weight(beta: f64, omega: f64) -> f64 {
    let x = beta * omega;
    if x.abs() < 1e-6 {
        beta * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        -(-x).exp_m1() / omega
    }
}

/// Residual of `𝓛⁽⁰⁾[ϱ₂] + 𝓛⁽²⁾[ϱ₀]` together with `‖𝓛⁽²⁾[ϱ₀]‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderResidual {
    pub residual: f64,
    pub source: f64,
}

impl SecondOrderResidual {
    pub fn relative(&self) -> f64 {
        if self.source == 0.0 {
            self.residual
        } else {
            self.residual / self.source
        }
    }
}

/// Second-order stationarity residual for a steady-state table.
///
/// `ϱ₀ = e^{−βH₀}` and `ϱ₂ = −e^{−βH₀}∫₀^β e^{tH₀} H e^{−tH₀} dt`, whose
/// eigenbasis entries are `−e^{−βε_l} α(ε_k − ε_l) H_kl`.
pub fn second_order_residual(
    sys: &OpenSystem,
    spec: &KossakowskiSpec,
    steady: &UpsilonTable,
    cfg: &QuadratureConfig,
) -> Result<SecondOrderResidual> {
    let h2 = assemble_correction(steady, &sys.jumps)?;
    let beta = sys.beta;
    let (eps, v) = linalg::eigh(sys.h0.matrix())?;
    let e0 = eps[0];
    let d = eps.len();
    let hb = v.adjoint() * h2.matrix() * &v;
    let mut rho0 = CMat::zeros(d, d);
    let mut rho2 = CMat::zeros(d, d);
    for k in 0..d {
        rho0[(k, k)] = Complex64::new((-beta * (eps[k] - e0)).exp(), 0.0);
        for l in 0..d {
            let w = (-beta * (eps[l] - e0)).exp() * alpha_weight(beta, eps[k] - eps[l]);
            rho2[(k, l)] = -hb[(k, l)] * w;
        }
    }
    let rho0 = &v * rho0 * v.adjoint();
    let rho2 = &v * rho2 * v.adjoint();
    let l0 = Superoperator::hamiltonian(sys.h0.matrix());
    let full = build_generator(sys, 1.0, spec, cfg)?;
    let l2 = &full - &l0;
    let source = l2.apply(&rho0)?;
    let res = l0.apply(&rho2)? + &source;
    Ok(SecondOrderResidual {
        residual: linalg::frobenius(&res),
        source: linalg::frobenius(&source),
    })
}

/// Four-tuples `(ε_l−ε_k, ε_m−ε_l, ε_j−ε_m, ε_k−ε_j)` anchored at level `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourTupleSet {
    pub anchor: usize,
    pub tuples: Vec<[f64; 4]>,
}

impl FourTupleSet {
    /// Tuples over distinct energy levels, ordered by the number of nonzero
    /// entries (stable in `(l, m, j)`).
    pub fn build(sd: &SpectralDecomposition, anchor: usize) -> Result<Self> {
        let n = sd.levels();
        if anchor >= n {
            return Err(Error::Validation(format!("anchor level {anchor} out of range ({n} levels)")));
        }
        let bf = sd.bohr_frequencies();
        let w = |a: usize, b: usize| bf.pair[a][b];
        let mut tuples = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for m in 0..n {
                for j in 0..n {
                    tuples.push([w(anchor, l), w(l, m), w(m, j), w(j, anchor)]);
                }
            }
        }
        tuples.sort_by_key(|t| t.iter().filter(|x| **x != 0.0).count());
        Ok(Self { anchor, tuples })
    }
}

/// Long-time coefficient tables entering `g₂₂`.
pub struct SecondOrderTables<'a> {
    pub k: &'a dyn Fn(f64, f64) -> Result<Complex64>,
    pub dynamical: &'a dyn Fn(f64, f64) -> Result<Complex64>,
    pub steady: &'a dyn Fn(f64, f64) -> Result<Complex64>,
}

/// `g₂₂(ω₁,ω₂,ω₃,ω₄)` for a single coupling.
pub fn g22_coefficient(tables: &SecondOrderTables<'_>, w: [f64; 4], beta: f64) -> Result<Complex64> {
    let [w1, w2, w3, w4] = w;
    let a34 = alpha_weight(beta, w3 + w4);
    let a12 = alpha_weight(beta, w1 + w2);
    let a23 = alpha_weight(beta, w2 + w3);
    let t1 = (tables.steady)(-w3, w4)?
        * a34
        * (I * (tables.dynamical)(-w1, w2)? + (tables.k)(-w1, w2)? * 0.5)
        * (-beta * (w1 + w2)).exp();
    let t2 = (tables.steady)(-w1, w2)? * a12 * (I * (tables.dynamical)(-w3, w4)? - (tables.k)(-w3, w4)? * 0.5);
    let t3 = (tables.steady)(-w2, w3)? * a23 * (tables.k)(-w4, w1)? * (-beta * w1).exp();
    Ok(t1 - t2 - t3)
}

/// Two-level spin-boson system used for the fourth-order equations.
fn tls_system(bath: &BathModel, omega0: f64) -> Result<OpenSystem> {
    if omega0 == 0.0 {
        return Err(Error::Domain("two-level splitting must be nonzero".into()));
    }
    let r = 0.5f64.sqrt();
    OpenSystem::tls(omega0.abs(), (r, 0.0, r), bath.clone())
}

/// `g₄₀(ω₀,−ω₀,ω₀,−ω₀)` in closed form:
/// `½e^{−βω₀}(1+e^{βω₀})γ(ω₀) ∫₀^∞ ds (e^{−βω₀}γ(ω₀,s) − γ(−ω₀,s))`.
///
/// A negative `ω₀` gives the value for the excited-state anchor.
pub fn g40_tls(bath: &BathModel, omega0: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let m = bath.measure();
    let b = bath.beta;
    let e = (-b * omega0).exp();
    let integral = e * cumulant_integral_m(&m, b, omega0, cfg)?;
    Ok(0.5 * e * (1.0 + (b * omega0).exp()) * m.gamma(omega0) * integral)
}

#[derive(Clone, Copy)]
enum Factor {
    S,
    G,
}

#[derive(Clone, Copy)]
enum At {
    S,
    T,
}

/// One term `c · X(−ω_a, ω_b, time) · Y(−ω_c, ω_d, time′) · e^{−β Σ_{i<n} ω_i}`
/// of the fourth-order integrand. Indices are zero-based positions in the tuple.
struct Term {
    c: Complex64,
    x: (Factor, usize, usize, At),
    y: (Factor, usize, usize, At),
    boltzmann: usize,
}

fn integrand_terms() -> Vec<Term> {
    use At::{S as s, T as t};
    use Factor::{G, S};
    let h = 0.5;
    let q = 0.25;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let mk = |cc, x, y, boltzmann| Term { c: cc, x, y, boltzmann };
    vec![
        mk(c(1.0, 0.0), (S, 0, 1, s), (S, 2, 3, t), 2),
        mk(c(-1.0, 0.0), (S, 0, 1, s), (S, 2, 3, t), 4),
        mk(c(0.0, h), (S, 0, 1, s), (G, 2, 3, t), 2),
        mk(c(0.0, h), (S, 0, 1, s), (G, 2, 3, t), 4),
        mk(c(0.0, -1.0), (S, 0, 1, s), (G, 3, 2, t), 3),
        mk(c(1.0, 0.0), (S, 0, 1, t), (S, 2, 3, s), 2),
        mk(c(-1.0, 0.0), (S, 0, 1, t), (S, 2, 3, s), 0),
        mk(c(0.0, h), (S, 0, 1, t), (G, 2, 3, s), 2),
        mk(c(0.0, -h), (S, 0, 1, t), (G, 2, 3, s), 0),
        mk(c(0.0, -1.0), (S, 1, 2, t), (G, 3, 0, s), 3),
        mk(c(0.0, 1.0), (S, 1, 2, t), (G, 3, 0, s), 1),
        mk(c(0.0, -h), (S, 2, 3, s), (G, 0, 1, t), 2),
        mk(c(0.0, -h), (S, 2, 3, s), (G, 0, 1, t), 0),
        mk(c(0.0, 1.0), (S, 2, 3, s), (G, 1, 0, t), 1),
        mk(c(0.0, -h), (S, 2, 3, t), (G, 0, 1, s), 2),
        mk(c(0.0, h), (S, 2, 3, t), (G, 0, 1, s), 4),
        mk(c(q, 0.0), (G, 0, 1, s), (G, 2, 3, t), 2),
        mk(c(q, 0.0), (G, 0, 1, s), (G, 2, 3, t), 4),
        mk(c(-h, 0.0), (G, 0, 1, s), (G, 3, 2, t), 3),
        mk(c(q, 0.0), (G, 0, 1, t), (G, 2, 3, s), 2),
        mk(c(q, 0.0), (G, 0, 1, t), (G, 2, 3, s), 0),
        mk(c(-h, 0.0), (G, 1, 0, t), (G, 2, 3, s), 1),
        mk(c(-h, 0.0), (G, 1, 2, t), (G, 3, 0, s), 3),
        mk(c(-h, 0.0), (G, 1, 2, t), (G, 3, 0, s), 1),
        mk(c(1.0, 0.0), (G, 2, 1, t), (G, 3, 0, s), 2),
    ]
}

/// Finite-time `g₄₀(ω₁,…,ω₄,t) = ½e^{iΣωt}∫₀ᵗ ds (f(t,s) − f(s,t))` from the
/// interaction-picture Redfield coefficients and their time integrals.
pub fn g40_direct(bath: &BathModel, omega0: f64, tuple: [f64; 4], t: f64, cfg: &QuadratureConfig) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive and finite, got {t}")));
    }
    let w0 = omega0.abs();
    let freqs = [-w0, 0.0, w0];
    let m = bath.measure();
    let gam = m.gamma_finite_many(&freqs, t, cfg)?;
    let ci = m.cumulant_integrals(&freqs, t, cfg)?;
    let idx = |w: f64| {
        freqs
            .iter()
            .position(|&x| x == w || (x == 0.0 && w == 0.0))
            .ok_or_else(|| Error::Validation(format!("frequency {w} is not a Bohr frequency of the two-level system")))
    };
    // Value at time t of the interaction-picture coefficient X(a, b, ·).
    let value = |f: Factor, a: f64, b: f64| -> Result<Complex64> {
        let (ia, ib) = (idx(a)?, idx(b)?);
        let phase = Complex64::new(0.0, (a - b) * t).exp();
        Ok(phase
            * match f {
                Factor::G => redfield_gamma(gam[ia], gam[ib]),
                Factor::S => redfield_s(gam[ia], gam[ib]),
            })
    };
    let integral = |f: Factor, a: f64, b: f64| -> Result<Complex64> {
        let (ia, ib) = (idx(a)?, idx(b)?);
        Ok(match f {
            Factor::G => ci.i_gamma[(ia, ib)],
            Factor::S => ci.i_s[(ia, ib)],
        })
    };
    let beta = bath.beta;
    let mut acc = ZERO;
    for term in integrand_terms() {
        let (fx, xa, xb, xt) = term.x;
        let (fy, ya, yb, yt) = term.y;
        let (xa, xb) = (-tuple[xa], tuple[xb]);
        let (ya, yb) = (-tuple[ya], tuple[yb]);
        let weight = (-beta * tuple[..term.boltzmann].iter().sum::<f64>()).exp();
        // ∫₀ᵗ ds [P(s)Q(t) − P(t)Q(s)] where P is the factor evaluated at s in f(t,s).
        let (p, q) = match (xt, yt) {
            (At::S, At::T) => ((fx, xa, xb), (fy, ya, yb)),
            (At::T, At::S) => ((fy, ya, yb), (fx, xa, xb)),
            _ => unreachable!("every term pairs one factor at s with one at t"),
        };
        let contrib = integral(p.0, p.1, p.2)? * value(q.0, q.1, q.2)? - value(p.0, p.1, p.2)? * integral(q.0, q.1, q.2)?;
        acc += term.c * weight * contrib;
    }
    let phase = Complex64::new(0.0, tuple.iter().sum::<f64>() * t).exp();
    Ok(acc * phase * 0.5)
}

/// Long-time limit of [`g40_direct`].
///
/// The finite-time value carries a residual oscillation at the Bohr
/// frequency, so each estimate is a trapezoidal average over one period
/// `2π/ω₀` starting at `t`; `t` is doubled from `t0` until the relative
/// change between consecutive averages drops below `tol`.
pub fn g40_direct_limit(
    bath: &BathModel,
    omega0: f64,
    tuple: [f64; 4],
    t0: f64,
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Complex64> {
    const SAMPLES: usize = 32;
    let period = 2.0 * std::f64::consts::PI / omega0.abs();
    let average = |t: f64| -> Result<Complex64> {
        let mut acc = ZERO;
        for k in 0..SAMPLES {
            acc += g40_direct(bath, omega0, tuple, t + period * k as f64 / SAMPLES as f64, cfg)?;
        }
        Ok(acc / SAMPLES as f64)
    };
    let mut t = t0;
    let mut prev = average(t)?;
    for _ in 0..10 {
        t *= 2.0;
        let next = average(t)?;
        let scale = next.norm().max(1e-300);
        if (next - prev).norm() <= tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numeric(format!("fourth-order integrand did not settle by t = {t}")))
}

/// Tables `K`, `Υ_dyn` at long times and `Υ_st` off-diagonal entries for a
/// two-level system; diagonal entries come from `diag(ω)`.
pub struct TlsTables {
    sys: OpenSystem,
    lt: LongTimeSpectra,
    spec: KossakowskiSpec,
}

impl TlsTables {
    pub fn new(bath: &BathModel, omega0: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let sys = tls_system(bath, omega0)?;
        let lt = sys.long_time_spectra(cfg)?;
        Ok(Self {
            sys,
            lt,
            spec: KossakowskiSpec::Redfield,
        })
    }

    pub fn k(&self, w: f64, wp: f64) -> Result<Complex64> {
        Ok(self.spec.coefficients(&self.sys, &self.lt, 0, 0, w, wp)?.0)
    }

    pub fn dynamical(&self, w: f64, wp: f64) -> Result<Complex64> {
        Ok(self.spec.coefficients(&self.sys, &self.lt, 0, 0, w, wp)?.1)
    }

    pub fn steady_offdiag(&self, w: f64, wp: f64) -> Result<Complex64> {
        let (k_direct, dynamical) = self.spec.coefficients(&self.sys, &self.lt, 0, 0, w, wp)?;
        let (k_reflected, _) = self.spec.coefficients(&self.sys, &self.lt, 0, 0, -wp, -w)?;
        steady_offdiag_from_values(dynamical, k_reflected, k_direct, self.sys.beta, w, wp)
    }

    /// `Σ g₂₂` over a tuple set with the given diagonal entries.
    pub fn g22_sum(&self, tuples: &[[f64; 4]], diag: impl Fn(f64) -> Complex64) -> Result<Complex64> {
        let k = |w: f64, wp: f64| self.k(w, wp);
        let d = |w: f64, wp: f64| self.dynamical(w, wp);
        let st = |w: f64, wp: f64| if w == wp { Ok(diag(w)) } else { self.steady_offdiag(w, wp) };
        let tables = SecondOrderTables {
            k: &k,
            dynamical: &d,
            steady: &st,
        };
        tuples.iter().map(|t| g22_coefficient(&tables, *t, self.sys.beta)).sum()
    }

    pub fn system(&self) -> &OpenSystem {
        &self.sys
    }
}

/// Diagonal pair `(Υ_st(ω₀,ω₀), Υ_st(−ω₀,−ω₀))` solving the fourth-order
/// equation for the ground-state anchor, in the gauge `Υ_st(0,0) = 0` with
/// `Υ_st(−ω₀,−ω₀) = −e^{−βω₀} Υ_st(ω₀,ω₀)`.
pub fn fourth_order_solve_tls(
    bath: &BathModel,
    omega0: f64,
    equation: DiagonalEquation,
    cfg: &QuadratureConfig,
) -> Result<(Complex64, Complex64)> {
    if omega0 <= 0.0 {
        return Err(Error::Domain("the two-level splitting must be positive".into()));
    }
    let tables = TlsTables::new(bath, omega0, cfg)?;
    if tables.sys.dim() != 2 {
        return Err(Error::NotImplemented("fourth-order solve beyond two levels".into()));
    }
    let kd = tables.k(omega0, omega0)?;
    if kd.norm() == 0.0 {
        return Err(Error::Singular("K(ω₀,ω₀) = 0: no dissipation fixes the diagonal".into()));
    }
    let set = FourTupleSet::build(&tables.sys.spectral, 0)?;
    let beta = bath.beta;
    let split = 1.0 / (1.0 + (-beta * omega0).exp());
    let g40 = match equation {
        DiagonalEquation::Redfield => 0.0,
        DiagonalEquation::Cumulant => g40_tls(bath, omega0, cfg)?,
    };
    let residual = |d: f64| -> Result<Complex64> {
        let up = d * split;
        let down = up - d;
        let diag = |w: f64| {
            Complex64::new(
                if w > 0.0 {
                    up
                } else if w < 0.0 {
                    down
                } else {
                    0.0
                },
                0.0,
            )
        };
        Ok(tables.g22_sum(&set.tuples, diag)? + g40)
    };
    let r0 = residual(0.0)?;
    let r1 = residual(1.0)?;
    let slope = r1 - r0;
    if slope.norm() <= 1e-14 * r0.norm().max(r1.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::Singular("fourth-order equation does not constrain the diagonal".into()));
    }
    let d = (-r0 / slope).re;
    let up = d * split;
    Ok((Complex64::new(up, 0.0), Complex64::new(up - d, 0.0)))
}

/// `F_t(x)`, re-exported for consumers that build their own time integrals.
pub fn half_sided_kernel(x: f64, t: f64) -> Complex64 {
    f_t(x, t)
}
