//! Symmetric tridiagonal eigensolver: implicit-shift QL with Wilkinson shifts
//! and accumulated rotations, plus the diagonal phase rotation that reduces a
//! Hermitian tridiagonal matrix to a real symmetric one.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Eigenpairs sorted ascending; `vectors` holds them as columns.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Diagonalizes the real symmetric tridiagonal matrix with diagonal `diag`
/// and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn symmetric_tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<TridiagEigen> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1), "off-diagonal length");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);
    let max_iter = 50 * n.max(1);
    let mut iterations = 0usize;

    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NoConvergence { iterations });
            }

            // Wilkinson shift from the leading 2x2 block
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &z.column(k));
    }

    let norm = diag.iter().map(|x| x.abs()).chain(off.iter().map(|x| 2.0 * x.abs())).fold(0.0, f64::max);
    reorthogonalize_clusters(&values, &mut vectors, 1e-12 * norm.max(f64::MIN_POSITIVE));
    Ok(TridiagEigen { values, vectors })
}

/// Modified Gram-Schmidt inside each run of eigenvalues closer than `tol`.
fn reorthogonalize_clusters(values: &[f64], vectors: &mut DMatrix<f64>, tol: f64) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < tol {
            end += 1;
        }
        if end - start > 1 {
            for k in start..end {
                for j in start..k {
                    let proj = vectors.column(j).dot(&vectors.column(k));
                    let cj = vectors.column(j).clone_owned();
                    let mut ck = vectors.column_mut(k);
                    ck.axpy(-proj, &cj, 1.0);
                }
                let nrm = vectors.column(k).norm();
                vectors.column_mut(k).unscale_mut(nrm);
            }
        }
        start = end;
    }
}

/// Eigenpairs of a Hermitian tridiagonal matrix in its original gauge.
#[derive(Debug, Clone)]
pub struct HermitianTridiagEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    /// Diagonal phases `u_v` with `H = U H_real U^dagger`.
    pub gauge: Vec<Complex64>,
}

/// The phases `u_v` mapping `sub[v] = H[v+1][v]` onto `|sub[v]|`.
pub fn realifying_gauge(sub: &[Complex64]) -> Vec<Complex64> {
    let mut gauge = Vec::with_capacity(sub.len() + 1);
    gauge.push(Complex64::new(1.0, 0.0));
    for (v, z) in sub.iter().enumerate() {
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        gauge.push(gauge[v] * phase);
    }
    gauge
}

/// Diagonalizes the Hermitian tridiagonal matrix with real diagonal `diag`
/// and subdiagonal `sub` (`sub[v] = H[v+1][v]`).
pub fn hermitian_tridiagonal_eigen(diag: &[f64], sub: &[Complex64]) -> Result<HermitianTridiagEigen> {
    let gauge = realifying_gauge(sub);
    let off: Vec<f64> = sub.iter().map(|z| z.norm()).collect();
    let real = symmetric_tridiagonal_eigen(diag, &off)?;
    let n = diag.len();
    let vectors = CMatrix::from_fn(n, n, |v, f| gauge[v] * real.vectors[(v, f)]);
    Ok(HermitianTridiagEigen { values: real.values, vectors, gauge })
}
