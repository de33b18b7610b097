// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra helpers.
//!
//! Vectorization is column stacking: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Shorthand constructor for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Column-stacked vectorization.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`] for a square matrix.
pub fn unvectorize(v: &CVec) -> Result<CMat> {
    let n = v.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::Validation(format!(
            "vector of length {n} is not a vectorized square matrix"
        )));
    }
    Ok(CMat::from_column_slice(d, d, v.as_slice()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// Subtract `tr(m)/d · 1`.
pub fn traceless(m: &CMat) -> CMat {
    let d = m.nrows();
    let t = m.trace() / d as f64;
    m - CMat::identity(d, d) * t
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
///
/// Columns of the returned matrix are the eigenvectors.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        let eig = nalgebra::SymmetricEigen::try_new(re, f64::EPSILON, 100_000)
            .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
        let vecs = eig.eigenvectors.map(|x| c64(x, 0.0));
        return Ok(sort_eig(eig.eigenvalues.as_slice(), &vecs));
    }
    let eig = nalgebra::SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    Ok(sort_eig(eig.eigenvalues.as_slice(), &eig.eigenvectors))
}

fn sort_eig(vals: &[f64], vecs: &CMat) -> (Vec<f64>, CMat) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
    let mut out = CMat::zeros(vecs.nrows(), vecs.ncols());
    for (k, &i) in idx.iter().enumerate() {
        out.set_column(k, &vecs.column(i));
    }
    (sorted, out)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    Ok(eigh(m)?.0)
}

/// Apply a real function to a Hermitian matrix through its spectrum.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let fk = f(vals[k]);
        for r in 0..n {
            scaled[(r, k)] *= fk;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Normalized Gibbs state `e^{-βH}/Z` of a Hermitian matrix.
pub fn gibbs_state(h: &CMat, beta: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(h)?;
    let e0 = vals.first().copied().unwrap_or(0.0);
    let w: Vec<f64> = vals.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        for r in 0..n {
            scaled[(r, k)] *= w[k] / z;
        }
    }
    Ok(hermitian_part(&(scaled * vecs.adjoint())))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Validation("expm requires a square matrix".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numeric("expm argument contains non-finite entries".into()));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::Numeric(format!("expm scaling exponent {s} too large")));
    }
    let x = a.scale(0.5f64.powi(s));
    let id = CMat::identity(n, n);
    let b = &PADE13;
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let u_inner = &x6 * (x6.scale(b[13]) + x4.scale(b[11]) + x2.scale(b[9]))
        + x6.scale(b[7])
        + x4.scale(b[5])
        + x2.scale(b[3])
        + id.scale(b[1]);
    let u = &x * u_inner;
    let v = &x6 * (x6.scale(b[12]) + x4.scale(b[10]) + x2.scale(b[8]))
        + x6.scale(b[6])
        + x4.scale(b[4])
        + x2.scale(b[2])
        + id.scale(b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numeric("singular Padé denominator in expm".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("expm overflow".into()));
    }
    Ok(r)
}

/// Returns `(e^X, L)` where `L = ∫₀¹ e^{sX} Y e^{(1-s)X} ds` is the Fréchet derivative
/// of the exponential at `X` in direction `Y`.
pub fn expm_frechet(x: &CMat, y: &CMat) -> Result<(CMat, CMat)> {
    let n = x.nrows();
    let mut big = CMat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(x);
    big.view_mut((0, n), (n, n)).copy_from(y);
    big.view_mut((n, n), (n, n)).copy_from(x);
    let e = expm(&big)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    ))
}

/// Orthonormal basis of the numerical null space, using singular values below
/// `rel_tol · σ_max`.
pub fn null_space(m: &CMat, rel_tol: f64) -> Result<Vec<CVec>> {
    let n = m.ncols();
    let svd = nalgebra::SVD::try_new(m.clone(), false, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD did not return right singular vectors".into()))?;
    let sv = svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let thr = rel_tol * smax.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for k in 0..sv.len() {
        if sv[k] <= thr {
            out.push(v_t.row(k).adjoint());
        }
    }
    // Rank-deficient wide inputs would leave extra null directions unreported.
    if sv.len() < n {
        return Err(Error::Validation("null_space expects a square matrix".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMat {
        let mut state = seed;
        CMat::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            c64(a, b)
        })
    }

    #[test]
    fn vectorization_round_trip_and_sandwich() {
        let a = random_matrix(2, 1);
        let b = random_matrix(2, 2);
        let x = random_matrix(2, 3);
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-14);
        assert_eq!(unvectorize(&vectorize(&x)).unwrap(), x);
    }

    #[test]
    fn expm_matches_eigen_route_for_hermitian() {
        let h = hermitian_part(&random_matrix(4, 7)).scale(3.0);
        let ih = h.map(|z| z * c64(0.0, -1.0));
        let e = expm(&ih).unwrap();
        let (vals, vecs) = eigh(&h).unwrap();
        let d = CMat::from_diagonal(&CVec::from_iterator(
            4,
            vals.iter().map(|v| c64(0.0, -v).exp()),
        ));
        let reference = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(e - reference)) < 1e-12);
    }

    #[test]
    fn expm_of_large_norm_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c64(-40.0, 0.0), c64(3.0, 1.0)]));
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)].re - (-40.0f64).exp()).abs() < 1e-25);
        let z = c64(3.0, 1.0).exp();
        assert!((e[(1, 1)] - z).norm() < 1e-12 * z.norm());
    }

    #[test]
    fn frechet_derivative_commuting_case() {
        let x = CMat::from_diagonal(&CVec::from_vec(vec![c64(0.3, 0.0), c64(-0.2, 0.0)]));
        let (e, l) = expm_frechet(&x, &x).unwrap();
        // d/ds e^{X + sX} at s = 0 equals X e^X when X commutes with itself.
        assert!(max_abs(&(l - &x * &e)) < 1e-14);
    }

    #[test]
    fn null_space_of_projector_complement() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)]));
        let ns = null_space(&m, 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        assert!((ns[0][1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gibbs_state_is_normalized() {
        let h = hermitian_part(&random_matrix(3, 11));
        let g = gibbs_state(&h, 2.0).unwrap();
        assert!((g.trace() - c64(1.0, 0.0)).norm() < 1e-14);
        assert!(eigvalsh(&g).unwrap()[0] > 0.0);
    }
}
