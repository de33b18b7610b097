// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Superoperators for weak-coupling master equations and the cumulant map.
//!
//! All superoperators act on column-stacked density matrices, so the map
//! `ρ ↦ AρB` has matrix `Bᵀ ⊗ A`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bath::{redfield_gamma, redfield_s, CumulantIntegrals};
use crate::corrections::KossakowskiSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, kron, CMat};
use crate::quadrature::QuadratureConfig;
use crate::system::OpenSystem;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Linear map on `d × d` matrices stored as a `d² × d²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMat,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: CMat) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Validation(format!(
                "superoperator on {dim}×{dim} matrices must be {n}×{n}, got {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMat::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: linalg::identity(dim * dim),
        }
    }

    /// `ρ ↦ AρB`.
    pub fn sandwich(a: &CMat, b: &CMat) -> Self {
        Self {
            dim: a.nrows(),
            matrix: kron(&b.transpose(), a),
        }
    }

    /// `ρ ↦ −i[H, ρ]`.
    pub fn hamiltonian(h: &CMat) -> Self {
        let d = h.nrows();
        let id = linalg::identity(d);
        let m = (kron(&id, h) - kron(&h.transpose(), &id)) * c64(0.0, -1.0);
        Self { dim: d, matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::Validation("operand dimension does not match superoperator".into()));
        }
        linalg::unvectorize(&(&self.matrix * linalg::vectorize(rho)))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `e^{t·self}`.
    pub fn exp(&self, t: f64) -> Result<Self> {
        Ok(Self {
            dim: self.dim,
            matrix: linalg::expm(&self.matrix.scale(t))?,
        })
    }

    /// Largest entry of `vec(1)† L`, zero for a trace-annihilating generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|c| (0..d).map(|i| self.matrix[(i * d + i, c)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `vec(1)† Φ − vec(1)†`, zero for a trace-preserving map.
    pub fn map_trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|c| {
                let s: Complex64 = (0..d).map(|i| self.matrix[(i * d + i, c)]).sum();
                let target = if c % (d + 1) == 0 { 1.0 } else { 0.0 };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.matrix)
    }

    /// Conjugation by `U`: `ρ ↦ U ρ U†`.
    pub fn unitary(u: &CMat) -> Self {
        Self::sandwich(u, &u.adjoint())
    }
}

impl std::ops::Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

/// Unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    /// Validates Hermiticity (1e-12) and unit trace (1e-12).
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Validation("density matrix must be square and non-empty".into()));
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > 1e-12 * linalg::max_abs(&m).max(1.0) {
            return Err(Error::Validation(format!("density matrix not Hermitian (defect {herm:.3e})")));
        }
        let tr = linalg::trace(&m);
        if (tr - 1.0).norm() > 1e-12 {
            return Err(Error::Validation(format!("density matrix trace is {tr}, expected 1")));
        }
        Ok(Self(m))
    }

    /// Normalizes the trace and Hermitizes; used for states produced internally.
    pub fn normalized(m: &CMat) -> Result<Self> {
        let tr = linalg::trace(m);
        if tr.norm() < 1e-300 {
            return Err(Error::Numeric("matrix has zero trace".into()));
        }
        Ok(Self(linalg::hermitian_part(&(m / tr))))
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = linalg::CVec::from_column_slice(psi);
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::Validation("state vector is zero".into()));
        }
        let v = v / Complex64::new(n, 0.0);
        Self::normalized(&(&v * v.adjoint()))
    }

    pub fn gibbs(h: &CMat, beta: f64) -> Result<Self> {
        Ok(Self(linalg::gibbs_state(h, beta)?))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(&linalg::hermitian_part(&self.0))?[0])
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.0)
    }
}

/// Coefficients `(K, Υ)` attached to a term `A_α(ω), A_β(ω′)`.
type Coefficient<'a> = dyn FnMut(usize, usize, f64, f64) -> Result<(Complex64, Complex64)> + 'a;

/// `ρ ↦ [−i[H₀,ρ]] + λ² Σ (iΥ[ρ, A†A′] + K(A′ρA† − ½{A†A′, ρ}))`.
fn assemble(sys: &OpenSystem, lambda: f64, with_h0: bool, coef: &mut Coefficient<'_>) -> Result<Superoperator> {
    let d = sys.dim();
    let mut out = if with_h0 {
        Superoperator::hamiltonian(sys.h0.matrix())
    } else {
        Superoperator::zeros(d)
    };
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Validation(format!("coupling strength must be finite and ≥ 0, got {lambda}")));
    }
    let l2 = lambda * lambda;
    if l2 == 0.0 {
        return Ok(out);
    }
    let id = linalg::identity(d);
    for ja in &sys.jumps {
        for jb in &sys.jumps {
            if sys.shared_bath(ja.alpha, jb.alpha).is_none() {
                continue;
            }
            for (&w, a) in ja.frequencies.iter().zip(&ja.ops) {
                for (&wp, b) in jb.frequencies.iter().zip(&jb.ops) {
                    let (k, u) = coef(ja.alpha, jb.alpha, w, wp)?;
                    if k == ZERO && u == ZERO {
                        continue;
                    }
                    let x = a.adjoint() * b;
                    let right = kron(&x.transpose(), &id);
                    let left = kron(&id, &x);
                    let iu = u * c64(0.0, 1.0);
                    out.matrix += (kron(&a.conjugate(), b) * k + right * (iu - k * 0.5) - left * (iu + k * 0.5)).scale(l2);
                }
            }
        }
    }
    Ok(out)
}

fn finite_gamma_per_bath(sys: &OpenSystem, t: f64, cfg: &QuadratureConfig) -> Result<Vec<BTreeMap<u64, Complex64>>> {
    let freqs = sys.frequencies();
    sys.measures
        .iter()
        .map(|m| {
            let g = m.gamma_finite_many(&freqs, t, cfg)?;
            Ok(freqs.iter().map(|w| w.to_bits()).zip(g).collect())
        })
        .collect()
}

fn lookup(map: &BTreeMap<u64, Complex64>, w: f64) -> Result<Complex64> {
    map.get(&w.to_bits())
        .copied()
        .ok_or_else(|| Error::Validation(format!("no coefficient for frequency {w}")))
}

/// Schrödinger-picture Redfield generator with coefficients at time `t`
/// (`f64::INFINITY` for the long-time limit).
pub fn build_redfield_generator(sys: &OpenSystem, lambda: f64, t: f64, cfg: &QuadratureConfig) -> Result<Superoperator> {
    let g = if lambda == 0.0 {
        Vec::new()
    } else {
        finite_gamma_per_bath(sys, t, cfg)?
    };
    assemble(sys, lambda, true, &mut |a, _b, w, wp| {
        let m = &g[sys.bath_of[a]];
        let (gw, gwp) = (lookup(m, w)?, lookup(m, wp)?);
        Ok((redfield_gamma(gw, gwp), redfield_s(gw, gwp)))
    })
}

/// Interaction-picture Redfield generator `𝓛̃ᴿ_t` (finite `t`).
pub fn build_interaction_redfield(sys: &OpenSystem, lambda: f64, t: f64, cfg: &QuadratureConfig) -> Result<Superoperator> {
    if !t.is_finite() {
        return Err(Error::Domain("interaction-picture generator needs a finite time".into()));
    }
    let g = if lambda == 0.0 {
        Vec::new()
    } else {
        finite_gamma_per_bath(sys, t, cfg)?
    };
    assemble(sys, lambda, false, &mut |a, _b, w, wp| {
        let m = &g[sys.bath_of[a]];
        let (gw, gwp) = (lookup(m, w)?, lookup(m, wp)?);
        let phase = Complex64::new(0.0, (w - wp) * t).exp();
        Ok((redfield_gamma(gw, gwp) * phase, redfield_s(gw, gwp) * phase))
    })
}

/// Long-time generator for an arbitrary Kossakowski specification.
pub fn build_generator(sys: &OpenSystem, lambda: f64, spec: &KossakowskiSpec, cfg: &QuadratureConfig) -> Result<Superoperator> {
    let lt = sys.long_time_spectra(cfg)?;
    assemble(sys, lambda, true, &mut |a, b, w, wp| spec.coefficients(sys, &lt, a, b, w, wp))
}

/// Per-frequency Kossakowski blocks `γ_{αβ}(ω)` of the secular generator.
pub fn davies_kossakowski_blocks(sys: &OpenSystem, cfg: &QuadratureConfig) -> Result<Vec<(f64, CMat)>> {
    let lt = sys.long_time_spectra(cfg)?;
    let n = sys.jumps.len();
    let mut out = Vec::new();
    for w in sys.frequencies() {
        let mut m = CMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                if sys.jumps[a].op(w).is_none() || sys.jumps[b].op(w).is_none() {
                    continue;
                }
                if let Some(bath) = sys.shared_bath(a, b) {
                    m[(a, b)] = c64(lt.gamma(bath, w)?, 0.0);
                }
            }
        }
        out.push((w, m));
    }
    Ok(out)
}

/// Davies (secular) generator; rejects non-positive Kossakowski blocks.
pub fn build_davies_generator(sys: &OpenSystem, lambda: f64, cfg: &QuadratureConfig) -> Result<Superoperator> {
    for (w, m) in davies_kossakowski_blocks(sys, cfg)? {
        let ev = linalg::eigvalsh(&m)?;
        if ev.first().is_some_and(|&e| e < -1e-10) {
            return Err(Error::Diagnostic(format!(
                "Kossakowski block at ω = {w} has eigenvalue {:.3e}",
                ev[0]
            )));
        }
    }
    build_generator(sys, lambda, &KossakowskiSpec::Secular, cfg)
}

/// Integrated cumulant coefficients for each bath at time `t`.
///
/// With `saturation = Some(t_s)` and `t > t_s`, the integrals are computed at
/// `t_s` and extended assuming the coefficients have reached their long-time
/// values, which avoids oscillatory quadrature at very large `t`.
pub fn cumulant_integrals(
    sys: &OpenSystem,
    t: f64,
    saturation: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Vec<CumulantIntegrals>> {
    let freqs = sys.frequencies();
    sys.measures
        .iter()
        .map(|m| match saturation {
            Some(ts) if t > ts => {
                let base = m.cumulant_integrals(&freqs, ts, cfg)?;
                let ginf = m.gamma_finite_many(&freqs, f64::INFINITY, cfg)?;
                base.extend_saturated(t, &ginf)
            }
            _ => m.cumulant_integrals(&freqs, t, cfg),
        })
        .collect()
}

/// Interaction-picture cumulant exponent `K̃_t` from precomputed integrals.
pub fn cumulant_exponent_from(sys: &OpenSystem, lambda: f64, ints: &[CumulantIntegrals]) -> Result<Superoperator> {
    assemble(sys, lambda, false, &mut |a, _b, w, wp| {
        let ci = &ints[sys.bath_of[a]];
        let (i, j) = ci
            .index(w)
            .zip(ci.index(wp))
            .ok_or_else(|| Error::Validation(format!("no cumulant integral for ({w}, {wp})")))?;
        Ok((ci.i_gamma[(i, j)], ci.i_s[(i, j)]))
    })
}

/// Interaction-picture cumulant exponent `K̃_t`.
pub fn build_cumulant_exponent(sys: &OpenSystem, lambda: f64, t: f64, cfg: &QuadratureConfig) -> Result<Superoperator> {
    if lambda == 0.0 || t == 0.0 {
        return Ok(Superoperator::zeros(sys.dim()));
    }
    cumulant_exponent_from(sys, lambda, &cumulant_integrals(sys, t, None, cfg)?)
}

/// Exact generator `𝓛ᶜ_t = (d/dt e^{K̃_t}) e^{−K̃_t}` of the cumulant map in
/// the interaction picture.
pub fn build_cumulant_generator(sys: &OpenSystem, lambda: f64, t: f64, cfg: &QuadratureConfig) -> Result<Superoperator> {
    let k = build_cumulant_exponent(sys, lambda, t, cfg)?;
    let dk = build_interaction_redfield(sys, lambda, t, cfg)?;
    let (_, l) = linalg::expm_frechet(k.matrix(), dk.matrix())?;
    let inv = linalg::expm(&(-k.matrix()))?;
    Superoperator::new(sys.dim(), l * inv)
}

/// `e^{−iH₀t}`.
pub fn free_unitary(sys: &OpenSystem, t: f64) -> Result<CMat> {
    let (vals, vecs) = linalg::eigh(sys.h0.matrix())?;
    let mut scaled = vecs.clone();
    for (k, e) in vals.iter().enumerate() {
        let ph = Complex64::new(0.0, -e * t).exp();
        for r in 0..vals.len() {
            scaled[(r, k)] *= ph;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Something that evolves a density matrix in time.
pub enum Evolution<'a> {
    /// Time-independent Schrödinger-picture generator.
    Generator(&'a Superoperator),
    /// Cumulant map `e^{K̃_t}` followed by the free rotation.
    Cumulant {
        system: &'a OpenSystem,
        lambda: f64,
        saturation: Option<f64>,
        cfg: &'a QuadratureConfig,
    },
}

/// State at time `t` in the Schrödinger picture.
pub fn propagate(evolution: &Evolution<'_>, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("propagation time must be finite and ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let m = match evolution {
        Evolution::Generator(l) => l.exp(t)?.apply(rho0.matrix())?,
        Evolution::Cumulant {
            system,
            lambda,
            saturation,
            cfg,
        } => {
            let k = if *lambda == 0.0 {
                Superoperator::zeros(system.dim())
            } else {
                cumulant_exponent_from(system, *lambda, &cumulant_integrals(system, t, *saturation, cfg)?)?
            };
            let rho_i = k.exp(1.0)?.apply(rho0.matrix())?;
            let u = free_unitary(system, t)?;
            &u * rho_i * u.adjoint()
        }
    };
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("propagated state is not finite".into()));
    }
    Ok(DensityMatrix(m))
}

/// Choi matrix `Σ_{ij} E_ij ⊗ Φ(E_ij)`.
pub fn choi_matrix(map: &Superoperator) -> CMat {
    let d = map.dim();
    let mut out = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            // vec(E_ij) has a single one at index j·d + i.
            let col = map.matrix().column(j * d + i);
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, j * d + b)] = col[b * d + a];
                }
            }
        }
    }
    out
}

/// Smallest eigenvalue of the Hermitian part of the Choi matrix.
pub fn min_choi_eigenvalue(map: &Superoperator) -> Result<f64> {
    Ok(linalg::eigvalsh(&linalg::hermitian_part(&choi_matrix(map)))?[0])
}

/// Unique stationary state of a generator.
pub fn steady_state_of_generator(l: &Superoperator) -> Result<DensityMatrix> {
    let ns = linalg::null_space(l.matrix(), 1e-10)?;
    match ns.len() {
        0 => Err(Error::Numeric("generator has no numerical null vector".into())),
        1 => {
            let m = linalg::unvectorize(&ns[0])?;
            let tr = linalg::trace(&m);
            if tr.norm() < 1e-12 {
                return Err(Error::Numeric("null vector is traceless".into()));
            }
            let rho = &m / tr;
            let herm = linalg::hermiticity_defect(&rho);
            if herm > 1e-8 * linalg::max_abs(&rho) {
                return Err(Error::Numeric(format!("null vector is not Hermitian (defect {herm:.3e})")));
            }
            DensityMatrix::normalized(&rho)
        }
        k => Err(Error::NonUniqueSteadyState(k)),
    }
}
