// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! A system Hamiltonian together with its couplings and reservoirs.

use std::collections::BTreeMap;

use crate::bath::{BathModel, SpectralMeasure};
use crate::error::{Error, Result};
use crate::operators::{
    bohr_decompose, spectral_decompose, HermitianOperator, JumpDecomposition, SpectralDecomposition,
    DEFAULT_DEGENERACY_TOL,
};
use crate::quadrature::QuadratureConfig;

/// `H = H₀ + λ Σ_α A_α ⊗ R_α`, each `R_α` drawn from one of `baths`.
///
/// Couplings attached to the same bath share its correlation function;
/// couplings on different baths are uncorrelated.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    pub h0: HermitianOperator,
    pub spectral: SpectralDecomposition,
    pub couplings: Vec<HermitianOperator>,
    pub jumps: Vec<JumpDecomposition>,
    pub bath_of: Vec<usize>,
    pub baths: Vec<BathModel>,
    pub measures: Vec<SpectralMeasure>,
    pub beta: f64,
}

impl OpenSystem {
    pub fn new(
        h0: HermitianOperator,
        couplings: Vec<(HermitianOperator, usize)>,
        baths: Vec<BathModel>,
    ) -> Result<Self> {
        Self::with_tolerance(h0, couplings, baths, DEFAULT_DEGENERACY_TOL)
    }

    pub fn with_tolerance(
        h0: HermitianOperator,
        couplings: Vec<(HermitianOperator, usize)>,
        baths: Vec<BathModel>,
        tol: f64,
    ) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::Validation("at least one coupling operator is required".into()));
        }
        let beta = baths
            .first()
            .map(|b| b.beta)
            .ok_or_else(|| Error::Validation("at least one bath is required".into()))?;
        for b in &baths {
            b.validate()?;
            if (b.beta - beta).abs() > 1e-14 * beta {
                return Err(Error::Validation(
                    "all baths must share one inverse temperature".into(),
                ));
            }
        }
        let spectral = spectral_decompose(&h0, tol)?;
        let mut jumps = Vec::with_capacity(couplings.len());
        let mut ops = Vec::with_capacity(couplings.len());
        let mut bath_of = Vec::with_capacity(couplings.len());
        for (alpha, (a, b)) in couplings.into_iter().enumerate() {
            if b >= baths.len() {
                return Err(Error::Validation(format!(
                    "coupling {alpha} refers to bath {b}, but only {} baths exist",
                    baths.len()
                )));
            }
            jumps.push(bohr_decompose(&spectral, &a, alpha)?);
            ops.push(a);
            bath_of.push(b);
        }
        let measures = baths.iter().map(BathModel::measure).collect();
        Ok(Self {
            h0,
            spectral,
            couplings: ops,
            jumps,
            bath_of,
            baths,
            measures,
            beta,
        })
    }

    /// Two-level system `H₀ = −(ω₀/2)σ_z` coupled through `xσ_x + yσ_y + zσ_z`.
    pub fn tls(omega0: f64, (x, y, z): (f64, f64, f64), bath: BathModel) -> Result<Self> {
        Self::new(
            HermitianOperator::tls_hamiltonian(omega0),
            vec![(HermitianOperator::pauli_vector(x, y, z), 0)],
            vec![bath],
        )
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Bath shared by couplings `α` and `β`, if any.
    pub fn shared_bath(&self, alpha: usize, beta: usize) -> Option<usize> {
        (self.bath_of[alpha] == self.bath_of[beta]).then_some(self.bath_of[alpha])
    }

    /// All canonical frequencies used by some jump operator.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.jumps.iter().flat_map(|j| j.frequencies.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Long-time `γ(ω)` and `S(ω)` at every jump frequency and its negative.
    pub fn long_time_spectra(&self, cfg: &QuadratureConfig) -> Result<LongTimeSpectra> {
        let mut freqs = self.frequencies();
        freqs.extend(self.frequencies().iter().map(|w| if *w == 0.0 { 0.0 } else { -w }));
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        let mut per_bath = Vec::with_capacity(self.measures.len());
        for m in &self.measures {
            let mut map = BTreeMap::new();
            for &w in &freqs {
                map.insert(w.to_bits(), (m.gamma(w), m.lamb_shift(w, cfg)?));
            }
            per_bath.push(map);
        }
        Ok(LongTimeSpectra { per_bath })
    }
}

/// Cached `γ_b(ω)` and `S_b(ω)` per bath at canonical frequencies.
#[derive(Debug, Clone)]
pub struct LongTimeSpectra {
    per_bath: Vec<BTreeMap<u64, (f64, f64)>>,
}

impl LongTimeSpectra {
    /// Build from explicit values for a single bath.
    pub fn from_values(values: &[(f64, f64, f64)]) -> Self {
        let map = values.iter().map(|&(w, g, s)| (norm_zero(w).to_bits(), (g, s))).collect();
        Self { per_bath: vec![map] }
    }

    fn lookup(&self, bath: usize, omega: f64) -> Result<(f64, f64)> {
        self.per_bath
            .get(bath)
            .and_then(|m| m.get(&norm_zero(omega).to_bits()))
            .copied()
            .ok_or_else(|| Error::Validation(format!("no spectral data for bath {bath} at ω = {omega}")))
    }

    pub fn gamma(&self, bath: usize, omega: f64) -> Result<f64> {
        Ok(self.lookup(bath, omega)?.0)
    }

    pub fn s(&self, bath: usize, omega: f64) -> Result<f64> {
        Ok(self.lookup(bath, omega)?.1)
    }
}

fn norm_zero(w: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tls_frequencies_and_spectra() {
        let bath = BathModel::ohmic(1.0, 1.0, 10.0).unwrap();
        let sys = OpenSystem::tls(1.0, (0.6, 0.0, 0.8), bath).unwrap();
        assert_eq!(sys.frequencies(), vec![-1.0, 0.0, 1.0]);
        let lt = sys.long_time_spectra(&QuadratureConfig::default()).unwrap();
        assert!(lt.gamma(0, 1.0).unwrap() > lt.gamma(0, -1.0).unwrap());
        assert!(lt.s(0, 2.0).is_err());
    }

    #[test]
    fn mismatched_temperatures_rejected() {
        let b1 = BathModel::ohmic(1.0, 1.0, 10.0).unwrap();
        let b2 = BathModel::ohmic(2.0, 1.0, 10.0).unwrap();
        let r = OpenSystem::new(
            HermitianOperator::tls_hamiltonian(1.0),
            vec![(HermitianOperator::pauli_vector(1.0, 0.0, 0.0), 0), (HermitianOperator::pauli_vector(0.0, 0.0, 1.0), 1)],
            vec![b1, b2],
        );
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_bath_index_rejected() {
        let b = BathModel::ohmic(1.0, 1.0, 10.0).unwrap();
        let r = OpenSystem::new(
            HermitianOperator::tls_hamiltonian(1.0),
            vec![(HermitianOperator::pauli_vector(1.0, 0.0, 0.0), 3)],
            vec![b],
        );
        assert!(r.is_err());
    }
}
