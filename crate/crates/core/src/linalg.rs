//! Small complex linear-algebra helpers on top of nalgebra.
//!
//! Vectorization convention (used everywhere): column-stacking, so that
//! vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ). The superoperator of O·ρ·P is (Pᵀ ⊗ O).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Column-stacking vectorization of a square matrix.
pub fn vectorize(m: &CMat) -> CVec {
    let (r, cdim) = m.shape();
    let mut v = CVec::zeros(r * cdim);
    for j in 0..cdim {
        for i in 0..r {
            v[j * r + i] = m[(i, j)];
        }
    }
    v
}

/// Inverse of [`vectorize`] for an n×n matrix.
pub fn unvectorize(v: &CVec, n: usize) -> CMat {
    assert_eq!(v.len(), n * n);
    CMat::from_fn(n, n, |i, j| v[j * n + i])
}

/// Superoperator for ρ ↦ A ρ B with column-stacking: Bᵀ ⊗ A.
pub fn sandwich_superop(a: &CMat, b: &CMat) -> CMat {
    b.transpose().kronecker(a)
}

/// Superoperator for left multiplication ρ ↦ A ρ.
pub fn left_superop(a: &CMat, n: usize) -> CMat {
    CMat::identity(n, n).kronecker(a)
}

/// Superoperator for right multiplication ρ ↦ ρ B.
pub fn right_superop(b: &CMat, n: usize) -> CMat {
    b.transpose().kronecker(&CMat::identity(n, n))
}

/// Matrix exponential (Padé scaling-and-squaring via nalgebra).
pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Largest elementwise absolute difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest elementwise deviation from hermiticity, ‖M − M†‖_max.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &dagger(m))
}

/// Trace of a square matrix.
pub fn trace(m: &CMat) -> C64 {
    let n = m.nrows();
    (0..n).map(|i| m[(i, i)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_mat(n: usize, seed: u64) -> CMat {
        // deterministic pseudo-random fill, no rng dependency needed here
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn vectorize_roundtrip() {
        let m = rand_mat(4, 7);
        assert_eq!(unvectorize(&vectorize(&m), 4), m);
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let a = rand_mat(4, 1);
        let b = rand_mat(4, 2);
        let rho = rand_mat(4, 3);
        let direct = &a * &rho * &b;
        let via_superop = unvectorize(&(sandwich_superop(&a, &b) * vectorize(&rho)), 4);
        assert!(max_abs_diff(&direct, &via_superop) < 1e-12);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMat::zeros(4, 4);
        assert!(max_abs_diff(&expm(&z), &CMat::identity(4, 4)) < 1e-14);
    }

    #[test]
    fn expm_additivity_for_commuting() {
        let m = rand_mat(4, 11) * c(0.1, 0.0);
        let e1 = expm(&m) * expm(&m);
        let e2 = expm(&(&m * c(2.0, 0.0)));
        assert!(max_abs_diff(&e1, &e2) < 1e-11);
    }
}
