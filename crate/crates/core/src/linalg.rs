//! Small dense helpers shared by the sector solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn diagonal(values: &[f64]) -> CMatrix {
    let d = values.len();
    CMatrix::from_fn(d, d, |i, j| if i == j { c(values[i]) } else { Complex64::new(0.0, 0.0) })
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus restricted to the leading `k x k` block.
pub fn max_abs_leading(m: &CMatrix, k: usize) -> f64 {
    let k = k.min(m.nrows()).min(m.ncols());
    let mut acc = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            acc = acc.max(m[(i, j)].norm());
        }
    }
    acc
}

/// Maximum absolute row sum, an upper bound on the spectral norm.
pub fn norm_inf(m: &CMatrix) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn expectation(op: &CMatrix, psi: &CVector) -> Complex64 {
    psi.dotc(&(op * psi))
}

pub fn basis_vector(d: usize, v: usize) -> CVector {
    let mut e = CVector::zeros(d);
    e[v] = c(1.0);
    e
}
