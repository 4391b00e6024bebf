//! Exact spectral and evolution solvers on sector blocks.

use num_complex::Complex64;

use crate::algebra::{to_f64, ModelParams, Sector, SectorOperators, StructurePolynomial};
use crate::error::{Error, Result};
use crate::linalg::{commutator, expectation, max_abs, max_abs_leading, norm_inf, CMatrix, CVector};
use crate::tridiag::hermitian_tridiagonal_eigen;

/// Eigenpairs of one sector block. Column `f` of `eigenvectors` holds the
/// amplitudes `Q_v(E_f)` in the sector's `|v>` basis.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub sector: Sector,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    /// Diagonal phases that made the block real symmetric.
    pub gauge: Vec<Complex64>,
    /// `norm_inf(H)`, the scale for residual tolerances.
    pub h_norm: f64,
}

pub fn diagonalize_sector(ops: &SectorOperators) -> Result<SpectralResult> {
    let d = ops.dim;
    let diag: Vec<f64> = (0..d).map(|v| ops.h[(v, v)].re).collect();
    let sub: Vec<Complex64> = (0..d.saturating_sub(1)).map(|v| ops.h[(v + 1, v)]).collect();
    let eig = hermitian_tridiagonal_eigen(&diag, &sub)?;
    Ok(SpectralResult {
        sector: ops.sector.clone(),
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        gauge: eig.gauge,
        h_norm: norm_inf(&ops.h),
    })
}

impl SpectralResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max_f |H q_f - E_f q_f|`.
    pub fn eigen_residual(&self, h: &CMatrix) -> f64 {
        (0..self.dim())
            .map(|f| {
                let q = self.eigenvectors.column(f);
                (h * q - q * Complex64::new(self.eigenvalues[f], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |Q^dagger Q - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(d, d)))
    }

    /// `U(t) = Q exp(-i E t) Q^dagger`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for f in 0..d {
            let phase = Complex64::from_polar(1.0, -self.eigenvalues[f] * t);
            scaled.column_mut(f).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Largest violation of the three-term recurrence
/// `(a(l0+v) + C - E) Q_v + g sqrt(Psi(l0+v)) Q_{v-1} + conj(g) sqrt(Psi(l0+v+1)) Q_{v+1} = 0`,
/// rebuilt from the sector labels and model parameters.
pub fn recurrence_residual(res: &SpectralResult, sector: &Sector, params: &ModelParams) -> f64 {
    let d = res.dim();
    let poly = StructurePolynomial::for_sector(sector, params);
    let a = params.a();
    let g = params.g;
    let weight: Vec<f64> = (0..=d).map(|v| poly.at_level(v as i64).max(0.0).sqrt()).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for f in 0..d {
        let q = res.eigenvectors.column(f);
        let e = res.eigenvalues[f];
        for v in 0..d {
            let diag = a * to_f64(sector.l0 + v as i64) + sector.c - e;
            let below = if v > 0 { g * weight[v] * q[v - 1] } else { zero };
            let above = if v + 1 < d { g.conj() * weight[v + 1] * q[v + 1] } else { zero };
            worst = worst.max((q[v] * diag + below + above).norm());
        }
    }
    worst
}

/// States and observables along a time grid.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    pub v0: Vec<f64>,
    pub vplus: Vec<Complex64>,
    pub energy: Vec<f64>,
    /// `|<psi0|psi(t)>|^2`
    pub survival: Vec<f64>,
    /// `|psi_v(t)|^2` per time.
    pub populations: Vec<Vec<f64>>,
}

pub fn evolve(ops: &SectorOperators, res: &SpectralResult, psi0: &CVector, times: &[f64]) -> Result<EvolutionResult> {
    let d = res.dim();
    if psi0.len() != d || ops.dim != d {
        return Err(Error::DimMismatch { expected: d, found: psi0.len() });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    // amplitudes in the eigenbasis
    let coeffs = res.eigenvectors.adjoint() * psi0;
    let mut out = EvolutionResult {
        times: times.to_vec(),
        states: Vec::with_capacity(times.len()),
        v0: Vec::with_capacity(times.len()),
        vplus: Vec::with_capacity(times.len()),
        energy: Vec::with_capacity(times.len()),
        survival: Vec::with_capacity(times.len()),
        populations: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let psi = if t == 0.0 {
            psi0.clone()
        } else {
            let phased = CVector::from_fn(d, |f, _| coeffs[f] * Complex64::from_polar(1.0, -res.eigenvalues[f] * t));
            &res.eigenvectors * phased
        };
        out.v0.push(expectation(&ops.v0, &psi).re);
        out.vplus.push(expectation(&ops.vplus, &psi));
        out.energy.push(expectation(&ops.h, &psi).re);
        out.survival.push(psi0.dotc(&psi).norm_sqr());
        out.populations.push(psi.iter().map(|z| z.norm_sqr()).collect());
        out.states.push(psi);
    }
    Ok(out)
}

/// Residuals of the operator equations of motion
/// `[V0,H] = g V+ - g* V-`, `[V+,H] = -a V+ - g* psi(V0)`, `[V-,H] = a V- + g psi(V0)`.
pub fn heisenberg_residuals(ops: &SectorOperators, params: &ModelParams) -> (f64, f64, f64) {
    let k = ops.interior();
    let g = params.g;
    let a = Complex64::new(params.a(), 0.0);
    let psi = ops.psi_small_matrix(params);
    let r0 = commutator(&ops.v0, &ops.h) - (&ops.vplus * g - &ops.vminus * g.conj());
    let rp = commutator(&ops.vplus, &ops.h) + &ops.vplus * a + &psi * g.conj();
    let rm = commutator(&ops.vminus, &ops.h) - &ops.vminus * a - &psi * g;
    (max_abs_leading(&r0, k), max_abs_leading(&rp, k), max_abs_leading(&rm, k))
}
