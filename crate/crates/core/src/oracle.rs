// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact reduced Gibbs states for a system coupled to a few truncated bosonic
//! modes, and helpers for comparing them against perturbative corrections.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bath::{BathModel, Mode};
use crate::error::{Error, Result};
use crate::generators::DensityMatrix;
use crate::linalg::{c64, eigh, identity, kron, traceless, CMat};
use crate::operators::HermitianOperator;

/// Upper bound on the global Hilbert-space dimension.
pub const MAX_GLOBAL_DIM: usize = 4096;
/// Smallest `βΩ_k` for which a finite Fock cutoff is accepted.
pub const MIN_BETA_OMEGA: f64 = 2.0;

/// Harmonic modes truncated to occupation `fock_cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedBath {
    pub modes: Vec<Mode>,
    pub fock_cutoff: usize,
}

impl TruncatedBath {
    pub fn new(modes: Vec<Mode>, fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::Validation(format!("Fock cutoff must be at least 2, got {fock_cutoff}")));
        }
        if modes.is_empty() {
            return Err(Error::Validation("a truncated bath needs at least one mode".into()));
        }
        for m in &modes {
            if !(m.frequency > 0.0 && m.frequency.is_finite() && m.coupling.is_finite()) {
                return Err(Error::Validation(format!("invalid mode {m:?}")));
            }
        }
        Ok(Self { modes, fock_cutoff })
    }

    /// Dimension of the truncated bath Hilbert space, `None` on overflow.
    pub fn bath_dim(&self) -> Option<usize> {
        (0..self.modes.len()).try_fold(1usize, |acc, _| acc.checked_mul(self.fock_cutoff + 1))
    }

    /// The untruncated reservoir with the same modes, for the perturbative side.
    pub fn bath_model(&self, beta: f64) -> Result<BathModel> {
        BathModel::discrete(beta, self.modes.clone())
    }

    fn check(&self, system_dim: usize, beta: f64) -> Result<usize> {
        let db = self
            .bath_dim()
            .filter(|db| db.checked_mul(system_dim).is_some_and(|n| n <= MAX_GLOBAL_DIM))
            .ok_or_else(|| {
                Error::Resource(format!(
                    "global dimension {system_dim}·{}^{} exceeds {MAX_GLOBAL_DIM}",
                    self.fock_cutoff + 1,
                    self.modes.len()
                ))
            })?;
        for m in &self.modes {
            if beta * m.frequency < MIN_BETA_OMEGA {
                return Err(Error::Validation(format!(
                    "βΩ = {} is below {MIN_BETA_OMEGA}; the Fock truncation is not controlled",
                    beta * m.frequency
                )));
            }
        }
        Ok(db)
    }

    /// `H_R = Σ Ω_k a_k†a_k` and `R = Σ g_k (a_k + a_k†)` on the truncated space.
    fn operators(&self) -> (CMat, CMat) {
        let n = self.fock_cutoff + 1;
        let mut x = CMat::zeros(n, n);
        let mut num = CMat::zeros(n, n);
        for k in 1..n {
            let s = c64((k as f64).sqrt(), 0.0);
            x[(k - 1, k)] = s;
            x[(k, k - 1)] = s;
            num[(k, k)] = c64(k as f64, 0.0);
        }
        let db = self.bath_dim().unwrap_or(0);
        let mut hr = CMat::zeros(db, db);
        let mut r = CMat::zeros(db, db);
        let m = self.modes.len();
        for (k, mode) in self.modes.iter().enumerate() {
            let left = identity(n.pow(k as u32));
            let right = identity(n.pow((m - k - 1) as u32));
            hr += kron(&kron(&left, &num), &right) * c64(mode.frequency, 0.0);
            r += kron(&kron(&left, &x), &right) * c64(mode.coupling, 0.0);
        }
        (hr, r)
    }
}

/// Reduced state `Tr_R e^{−βH}/Z` of `H = H₀⊗1 + 1⊗H_R + λ S⊗R`.
///
/// The system index is the slow one in the tensor product.
pub fn exact_reduced_gibbs(
    h0: &HermitianOperator,
    s: &HermitianOperator,
    bath: &TruncatedBath,
    beta: f64,
    lambda: f64,
) -> Result<DensityMatrix> {
    let d = h0.dim();
    if s.dim() != d {
        return Err(Error::Validation(format!("coupling has dimension {}, system has {d}", s.dim())));
    }
    if !(beta > 0.0 && beta.is_finite() && lambda.is_finite()) {
        return Err(Error::Domain(format!("need β > 0 and finite λ, got β = {beta}, λ = {lambda}")));
    }
    let db = bath.check(d, beta)?;
    let (hr, r) = bath.operators();
    let h = kron(h0.matrix(), &identity(db)) + kron(&identity(d), &hr) + kron(s.matrix(), &r) * c64(lambda, 0.0);
    let n = d * db;

    let (vals, vecs) = large_eigh(&h)?;
    let e0 = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = vals.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();

    let mut rho = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..db {
                let (ri, rj) = (vecs.row(i * db + b), vecs.row(j * db + b));
                for k in 0..n {
                    if w[k] > 0.0 {
                        acc += ri[k] * rj[k].conj() * w[k];
                    }
                }
            }
            rho[(i, j)] = acc / z;
            rho[(j, i)] = (acc / z).conj();
        }
    }
    DensityMatrix::normalized(&rho)
}

/// Hermitian eigendecomposition for the global Hamiltonian.
///
/// The dense tridiagonal QR in `nalgebra` loses accuracy on the large,
/// highly degenerate spectra of multi-mode baths, so this path uses `faer`.
fn large_eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    let fail = |e: faer::linalg::evd::EvdError| Error::Numeric(format!("eigendecomposition failed: {e:?}"));
    if h.iter().all(|z| z.im == 0.0) {
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)].re);
        let evd = m.self_adjoint_eigen(faer::Side::Lower).map_err(fail)?;
        let (u, s) = (evd.U(), evd.S());
        let vals = (0..n).map(|i| s[i]).collect();
        Ok((vals, CMat::from_fn(n, n, |i, j| c64(u[(i, j)], 0.0))))
    } else {
        let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| faer::c64::new(h[(i, j)].re, h[(i, j)].im));
        let evd = m.self_adjoint_eigen(faer::Side::Lower).map_err(fail)?;
        let (u, s) = (evd.U(), evd.S());
        let vals = (0..n).map(|i| s[i].re).collect();
        Ok((vals, CMat::from_fn(n, n, |i, j| c64(u[(i, j)].re, u[(i, j)].im))))
    }
}

/// Traceless part of `−(1/β) log ρ`.
pub fn effective_hamiltonian(rho: &DensityMatrix, beta: f64) -> Result<HermitianOperator> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("β must be positive, got {beta}")));
    }
    let (vals, vecs) = eigh(rho.matrix())?;
    let max = vals.iter().copied().fold(0.0, f64::max);
    if vals.iter().any(|&v| v <= 1e-300 || v <= 1e-15 * max) {
        return Err(Error::Domain("density matrix is singular; its logarithm is undefined".into()));
    }
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let f = -vals[k].ln() / beta;
        for r in 0..n {
            scaled[(r, k)] *= f;
        }
    }
    let h = scaled * vecs.adjoint();
    HermitianOperator::new(traceless(&((&h + h.adjoint()) * c64(0.5, 0.0))))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn scaling_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Validation(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Validation("a scaling fit needs at least three points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("scaling fit requires positive finite values".into()));
    }
    let a = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i].ln() });
    let b = nalgebra::DVector::from_iterator(ys.len(), ys.iter().map(|y| y.ln()));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numeric(format!("least-squares fit failed: {e}")))?;
    Ok(sol[1])
}
