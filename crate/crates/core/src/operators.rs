// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Bare-Hamiltonian spectra, Bohr decompositions of coupling operators, and
//! assembly of correction Hamiltonians from coefficient tables.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};

/// Default relative tolerance for merging eigenvalues and Bohr frequencies.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMat,
}

impl HermitianOperator {
    /// Validates Hermiticity to `1e-12 · max|entry|`.
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Validation(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("operator has non-finite entries".into()));
        }
        let scale = linalg::max_abs(&m);
        let defect = linalg::hermiticity_defect(&m);
        if defect > 1e-12 * scale {
            return Err(Error::Validation(format!(
                "operator is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            m: linalg::hermitian_part(&m),
        })
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("ragged matrix".into()));
        }
        Self::new(CMat::from_fn(n, n, |i, j| c64(rows[i][j], 0.0)))
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: CMat::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: CMat::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { m: self.m.scale(s) }
    }

    /// Two-level Hamiltonian `-(ω₀/2) σ_z`; the first basis state is the ground state.
    pub fn tls_hamiltonian(omega0: f64) -> Self {
        let (_, _, _, sz) = pauli();
        Self { m: sz.scale(-0.5 * omega0) }
    }

    /// `x σ_x + y σ_y + z σ_z`.
    pub fn pauli_vector(x: f64, y: f64, z: f64) -> Self {
        let (_, sx, sy, sz) = pauli();
        Self::new(sx.scale(x) + sy.scale(y) + sz.scale(z)).expect("Pauli combination is Hermitian")
    }
}

/// Identity and the three Pauli matrices.
pub fn pauli() -> (CMat, CMat, CMat, CMat) {
    let o = c64(0.0, 0.0);
    let l = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    (
        CMat::from_row_slice(2, 2, &[l, o, o, l]),
        CMat::from_row_slice(2, 2, &[o, l, l, o]),
        CMat::from_row_slice(2, 2, &[o, -i, i, o]),
        CMat::from_row_slice(2, 2, &[l, o, o, -l]),
    )
}

/// Energies (ascending, cluster means) and spectral projectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub energies: Vec<f64>,
    pub projectors: Vec<CMat>,
    pub tol: f64,
    dim: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// `Σ ε Π(ε)`.
    pub fn reconstruct(&self) -> CMat {
        let mut h = CMat::zeros(self.dim, self.dim);
        for (e, p) in self.energies.iter().zip(&self.projectors) {
            h += p.scale(*e);
        }
        h
    }

    /// `f(H₀) = Σ f(ε) Π(ε)`.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (e, p) in self.energies.iter().zip(&self.projectors) {
            out += p.scale(f(*e));
        }
        out
    }

    /// Canonical Bohr frequencies ε_j − ε_i for every ordered level pair.
    pub fn bohr_frequencies(&self) -> BohrFrequencies {
        BohrFrequencies::new(&self.energies, self.tol)
    }
}

/// Decompose `h0` into spectral projectors, merging eigenvalues closer than
/// `tol · max(1, max|ε|)`.
pub fn spectral_decompose(h0: &HermitianOperator, tol: f64) -> Result<SpectralDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("degeneracy tolerance must be positive, got {tol}")));
    }
    let (vals, vecs) = linalg::eigh(h0.matrix())?;
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let thr = tol * scale;
    let n = vals.len();
    let mut energies = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= thr {
            end += 1;
        }
        let mean = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
        let block = vecs.columns(start, end - start);
        energies.push(mean);
        projectors.push(&block * block.adjoint());
        start = end;
    }
    Ok(SpectralDecomposition {
        energies,
        projectors,
        tol,
        dim: n,
    })
}

/// Canonical representatives of all level differences.
///
/// Negative frequencies are exact negations of positive ones and the zero
/// cluster is exactly `0.0`, so downstream tables can compare by value.
#[derive(Debug, Clone)]
pub struct BohrFrequencies {
    /// Sorted distinct canonical frequencies.
    pub values: Vec<f64>,
    /// `pair[i][j]` is the canonical value of `ε_j − ε_i`.
    pub pair: Vec<Vec<f64>>,
}

impl BohrFrequencies {
    fn new(energies: &[f64], tol: f64) -> Self {
        let n = energies.len();
        let scale = energies.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let thr = tol * scale;
        let mut positive: Vec<f64> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let d = energies[j] - energies[i];
                if d > thr {
                    positive.push(d);
                }
            }
        }
        positive.sort_by(f64::total_cmp);
        let mut reps: Vec<(f64, f64, f64)> = Vec::new(); // (min, max, mean)
        let mut start = 0;
        while start < positive.len() {
            let mut end = start + 1;
            while end < positive.len() && positive[end] - positive[end - 1] <= thr {
                end += 1;
            }
            let mean = positive[start..end].iter().sum::<f64>() / (end - start) as f64;
            reps.push((positive[start], positive[end - 1], mean));
            start = end;
        }
        let canon = |d: f64| -> f64 {
            if d.abs() <= thr {
                return 0.0;
            }
            let a = d.abs();
            let rep = reps
                .iter()
                .find(|(lo, hi, _)| a >= *lo && a <= *hi)
                .map(|r| r.2)
                .expect("difference belongs to a cluster");
            if d > 0.0 {
                rep
            } else {
                -rep
            }
        };
        let pair: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| canon(energies[j] - energies[i])).collect())
            .collect();
        let mut values: Vec<f64> = reps.iter().map(|r| r.2).collect();
        values.extend(reps.iter().map(|r| -r.2));
        values.push(0.0);
        values.sort_by(f64::total_cmp);
        Self { values, pair }
    }
}

/// Jump operators `A_α(ω) = Σ_{ε'−ε=ω} Π(ε) A Π(ε')` of one coupling operator.
#[derive(Debug, Clone)]
pub struct JumpDecomposition {
    pub alpha: usize,
    /// Sorted distinct canonical frequencies with a nonzero block.
    pub frequencies: Vec<f64>,
    pub ops: Vec<CMat>,
}

impl JumpDecomposition {
    /// Operator at a canonical frequency.
    pub fn op(&self, omega: f64) -> Option<&CMat> {
        self.frequencies
            .iter()
            .position(|&w| w == omega)
            .map(|k| &self.ops[k])
    }

    /// `Σ_ω A(ω)`.
    pub fn sum(&self) -> CMat {
        let d = self.ops.first().map(|m| m.nrows()).unwrap_or(0);
        self.ops.iter().fold(CMat::zeros(d, d), |acc, m| acc + m)
    }
}

/// Bohr decomposition of coupling operator `a` (labelled `alpha`).
pub fn bohr_decompose(
    h0: &SpectralDecomposition,
    a: &HermitianOperator,
    alpha: usize,
) -> Result<JumpDecomposition> {
    if a.dim() != h0.dim() {
        return Err(Error::Validation(format!(
            "coupling operator dimension {} does not match Hamiltonian dimension {}",
            a.dim(),
            h0.dim()
        )));
    }
    let bohr = h0.bohr_frequencies();
    let d = h0.dim();
    let n = h0.levels();
    let mut blocks: BTreeMap<u64, (f64, CMat)> = BTreeMap::new();
    let norm = linalg::frobenius(a.matrix()).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            let block = &h0.projectors[i] * a.matrix() * &h0.projectors[j];
            let w = bohr.pair[i][j];
            let key = ordered_key(w);
            let entry = blocks.entry(key).or_insert_with(|| (w, CMat::zeros(d, d)));
            entry.1 += block;
        }
    }
    let mut frequencies = Vec::new();
    let mut ops = Vec::new();
    for (_, (w, m)) in blocks {
        if linalg::frobenius(&m) > 1e-13 * norm {
            frequencies.push(w);
            ops.push(m);
        }
    }
    if frequencies.is_empty() {
        // The zero operator still decomposes, into a single zero block.
        frequencies.push(0.0);
        ops.push(CMat::zeros(d, d));
    }
    Ok(JumpDecomposition {
        alpha,
        frequencies,
        ops,
    })
}

/// Monotone map from f64 to u64 so BTreeMap iterates in numeric order.
fn ordered_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Which correction a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionKind {
    Dynamical,
    MeanForce,
    SteadyState,
}

impl CorrectionKind {
    pub fn must_be_hermitian(self) -> bool {
        !matches!(self, CorrectionKind::Dynamical)
    }
}

/// Key `(α, β, ω, ω′)` with canonical frequencies compared bitwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UpsilonKey {
    pub alpha: usize,
    pub beta: usize,
    omega: u64,
    omega_p: u64,
}

impl UpsilonKey {
    pub fn new(alpha: usize, beta: usize, omega: f64, omega_p: f64) -> Self {
        let norm = |x: f64| if x == 0.0 { 0.0f64 } else { x };
        Self {
            alpha,
            beta,
            omega: ordered_key(norm(omega)),
            omega_p: ordered_key(norm(omega_p)),
        }
    }

    pub fn omega(&self) -> f64 {
        from_ordered_key(self.omega)
    }

    pub fn omega_p(&self) -> f64 {
        from_ordered_key(self.omega_p)
    }
}

fn from_ordered_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// Coefficients `Υ_{αβ}(ω, ω′)` of one correction kind.
#[derive(Debug, Clone)]
pub struct UpsilonTable {
    pub kind: CorrectionKind,
    entries: BTreeMap<UpsilonKey, Complex64>,
}

impl UpsilonTable {
    pub fn new(kind: CorrectionKind) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, alpha: usize, beta: usize, omega: f64, omega_p: f64, value: Complex64) {
        self.entries
            .insert(UpsilonKey::new(alpha, beta, omega, omega_p), value);
    }

    pub fn get(&self, alpha: usize, beta: usize, omega: f64, omega_p: f64) -> Option<Complex64> {
        self.entries
            .get(&UpsilonKey::new(alpha, beta, omega, omega_p))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UpsilonKey, &Complex64)> {
        self.entries.iter()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            kind: self.kind,
            entries: self.entries.iter().map(|(k, v)| (*k, v * s)).collect(),
        }
    }

    /// Largest violation of `Υ_{αβ}(ω,ω′) = conj Υ_{βα}(ω′,ω)` relative to the
    /// largest entry; missing partners count as full violations.
    pub fn hermiticity_violation(&self) -> f64 {
        let scale = self.entries.values().fold(0.0f64, |a, v| a.max(v.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (k, v) in &self.entries {
            let partner = self.get(k.beta, k.alpha, k.omega_p(), k.omega());
            let dev = match partner {
                Some(p) => (v - p.conj()).norm(),
                None => v.norm(),
            };
            worst = worst.max(dev / scale);
        }
        worst
    }
}

/// `H = Σ Υ_{αβ}(ω,ω′) A_α(ω)† A_β(ω′)`.
pub fn assemble_correction(table: &UpsilonTable, jumps: &[JumpDecomposition]) -> Result<HermitianOperator> {
    let d = jumps
        .first()
        .and_then(|j| j.ops.first())
        .map(|m| m.nrows())
        .ok_or_else(|| Error::Validation("no jump decompositions supplied".into()))?;
    let find = |alpha: usize| jumps.iter().find(|j| j.alpha == alpha);
    let mut h = CMat::zeros(d, d);
    for (k, v) in table.iter() {
        let ja = find(k.alpha)
            .ok_or_else(|| Error::Validation(format!("coupling index {} not supplied", k.alpha)))?;
        let jb = find(k.beta)
            .ok_or_else(|| Error::Validation(format!("coupling index {} not supplied", k.beta)))?;
        let a = ja.op(k.omega()).ok_or_else(|| {
            Error::Validation(format!("no jump operator A_{}({})", k.alpha, k.omega()))
        })?;
        let b = jb.op(k.omega_p()).ok_or_else(|| {
            Error::Validation(format!("no jump operator A_{}({})", k.beta, k.omega_p()))
        })?;
        h += (a.adjoint() * b) * *v;
    }
    let scale = linalg::max_abs(&h).max(f64::MIN_POSITIVE);
    let defect = linalg::hermiticity_defect(&h);
    if table.kind.must_be_hermitian() && defect > 1e-8 * scale {
        return Err(Error::Consistency(format!(
            "assembled {:?} correction is not Hermitian (defect {defect:.3e})",
            table.kind
        )));
    }
    // A dynamical table need not pair up; its Hermitian part is the Hamiltonian.
    Ok(HermitianOperator {
        m: linalg::hermitian_part(&h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = CMat::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        HermitianOperator::new(linalg::hermitian_part(&m)).unwrap()
    }

    #[test]
    fn tls_spectrum() {
        let h = HermitianOperator::tls_hamiltonian(1.0);
        let sd = spectral_decompose(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(sd.energies, vec![-0.5, 0.5]);
        assert!((sd.projectors[0][(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((sd.projectors[1][(1, 1)] - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_identity() {
        let h = HermitianOperator::identity(3).scaled(2.5);
        let sd = spectral_decompose(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(sd.levels(), 1);
        assert!((sd.energies[0] - 2.5).abs() < 1e-15);
        assert!(linalg::max_abs(&(&sd.projectors[0] - CMat::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let h = random_hermitian(4, 42);
        let sd = spectral_decompose(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        assert!(linalg::frobenius(&(sd.reconstruct() - h.matrix())) < 1e-10);
        let sum = sd.projectors.iter().fold(CMat::zeros(4, 4), |a, p| a + p);
        assert!(linalg::frobenius(&(sum - CMat::identity(4, 4))) < 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn tls_sigma_x_jumps() {
        let sd = spectral_decompose(&HermitianOperator::tls_hamiltonian(1.0), 1e-9).unwrap();
        let j = bohr_decompose(&sd, &HermitianOperator::pauli_vector(1.0, 0.0, 0.0), 0).unwrap();
        assert_eq!(j.frequencies, vec![-1.0, 1.0]);
        // A(ω₀) = |g⟩⟨e| lowers the excited state.
        let a = j.op(1.0).unwrap();
        assert_eq!(a[(0, 1)], c64(1.0, 0.0));
        assert_eq!(a[(1, 0)], c64(0.0, 0.0));
    }

    #[test]
    fn tls_general_coupling_oracle() {
        let (x, y, z) = (0.3, -0.7, 0.4);
        let sd = spectral_decompose(&HermitianOperator::tls_hamiltonian(2.0), 1e-9).unwrap();
        let j = bohr_decompose(&sd, &HermitianOperator::pauli_vector(x, y, z), 0).unwrap();
        assert_eq!(j.frequencies, vec![-2.0, 0.0, 2.0]);
        let expect0 = CMat::from_row_slice(2, 2, &[c64(z, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-z, 0.0)]);
        let expect_up = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(x, -y), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(linalg::max_abs(&(j.op(0.0).unwrap() - expect0)) < 1e-15);
        assert!(linalg::max_abs(&(j.op(2.0).unwrap() - expect_up)) < 1e-15);
    }

    #[test]
    fn identity_coupling() {
        let sd = spectral_decompose(&random_hermitian(3, 5), 1e-9).unwrap();
        let j = bohr_decompose(&sd, &HermitianOperator::identity(3), 0).unwrap();
        assert_eq!(j.frequencies, vec![0.0]);
        assert!(linalg::max_abs(&(&j.ops[0] - CMat::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let sd = spectral_decompose(&HermitianOperator::tls_hamiltonian(1.0), 1e-9).unwrap();
        assert!(matches!(
            bohr_decompose(&sd, &HermitianOperator::identity(3), 0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn assemble_tls_offdiagonal_form() {
        let (x, y, z) = (0.6, 0.2, -0.5);
        let sd = spectral_decompose(&HermitianOperator::tls_hamiltonian(1.0), 1e-9).unwrap();
        let j = bohr_decompose(&sd, &HermitianOperator::pauli_vector(x, y, z), 0).unwrap();
        let (u1, u2) = (0.37, -0.11);
        let mut t = UpsilonTable::new(CorrectionKind::MeanForce);
        t.insert(0, 0, 0.0, -1.0, c64(u1, 0.0));
        t.insert(0, 0, -1.0, 0.0, c64(u1, 0.0));
        t.insert(0, 0, 1.0, 0.0, c64(u2, 0.0));
        t.insert(0, 0, 0.0, 1.0, c64(u2, 0.0));
        let h = assemble_correction(&t, &[j]).unwrap();
        // Direct block algebra: H₀₁ = (x − iy) z (Υ(ω₀,0) − Υ(0,−ω₀)).
        let expected01 = c64(x, -y) * z * (u2 - u1);
        assert!((h.matrix()[(0, 1)] - expected01).norm() < 1e-14);
        assert!((h.matrix()[(1, 0)] - expected01.conj()).norm() < 1e-14);
    }

    #[test]
    fn assemble_zero_table_and_missing_entry() {
        let sd = spectral_decompose(&HermitianOperator::tls_hamiltonian(1.0), 1e-9).unwrap();
        let j = bohr_decompose(&sd, &HermitianOperator::pauli_vector(1.0, 0.0, 0.0), 0).unwrap();
        let t = UpsilonTable::new(CorrectionKind::SteadyState);
        assert!(linalg::max_abs(assemble_correction(&t, &[j.clone()]).unwrap().matrix()) == 0.0);
        let mut bad = UpsilonTable::new(CorrectionKind::SteadyState);
        bad.insert(0, 0, 0.0, 0.0, c64(1.0, 0.0));
        assert!(matches!(assemble_correction(&bad, &[j]), Err(Error::Validation(_))));
    }

    #[test]
    fn gauge_shift_is_identity_for_tls() {
        let sd = spectral_decompose(&HermitianOperator::tls_hamiltonian(1.0), 1e-9).unwrap();
        let j = bohr_decompose(&sd, &HermitianOperator::pauli_vector(0.5, 0.1, 0.7), 0).unwrap();
        let mut a = UpsilonTable::new(CorrectionKind::SteadyState);
        let mut b = UpsilonTable::new(CorrectionKind::SteadyState);
        let c = 0.9;
        for (w, v) in [(0.0, 0.2), (1.0, -0.4), (-1.0, 0.3)] {
            a.insert(0, 0, w, w, c64(v, 0.0));
            b.insert(0, 0, w, w, c64(v + c, 0.0));
        }
        let diff = assemble_correction(&b, &[j.clone()]).unwrap().into_matrix()
            - assemble_correction(&a, &[j]).unwrap().into_matrix();
        // Σ_ω A(ω)†A(ω) = (x²+y²+z²)·1 for a Pauli-vector coupling.
        let r2 = 0.5f64 * 0.5 + 0.1 * 0.1 + 0.7 * 0.7;
        assert!(linalg::max_abs(&(diff - CMat::identity(2, 2).scale(c * r2))) < 1e-14);
    }

    proptest! {
        #[test]
        fn jump_invariants_random(seed in 0u64..500, n in 2usize..5) {
            let h = random_hermitian(n, seed);
            let a = random_hermitian(n, seed.wrapping_add(1000));
            let sd = spectral_decompose(&h, DEFAULT_DEGENERACY_TOL).unwrap();
            let j = bohr_decompose(&sd, &a, 0).unwrap();
            let an = linalg::frobenius(a.matrix());
            prop_assert!(linalg::frobenius(&(j.sum() - a.matrix())) <= 1e-10 * an.max(1.0));
            for (w, op) in j.frequencies.iter().zip(&j.ops) {
                let partner = j.op(-*w).expect("negative partner exists");
                prop_assert!(linalg::max_abs(&(partner - op.adjoint())) <= 1e-12);
                let comm = linalg::commutator(op, h.matrix()) - op.scale(*w);
                prop_assert!(linalg::frobenius(&comm) <= 1e-9 * an);
            }
        }

        #[test]
        fn assembly_is_linear(c in -3.0f64..3.0, seed in 0u64..100) {
            let sd = spectral_decompose(&random_hermitian(3, seed), 1e-9).unwrap();
            let j = bohr_decompose(&sd, &random_hermitian(3, seed + 7), 0).unwrap();
            let mut t = UpsilonTable::new(CorrectionKind::Dynamical);
            for (k, w) in j.frequencies.iter().enumerate() {
                for (l, wp) in j.frequencies.iter().enumerate() {
                    t.insert(0, 0, *w, *wp, c64((k + 2 * l) as f64 * 0.1, 0.0));
                }
            }
            let h1 = assemble_correction(&t, &[j.clone()]).unwrap().into_matrix().scale(c);
            let h2 = assemble_correction(&t.scaled(c64(c, 0.0)), &[j]).unwrap().into_matrix();
            prop_assert!(linalg::max_abs(&(h1 - h2)) <= 1e-12);
        }
    }
}
