//! Brute-force ladder operators on a truncated Fock space.
//!
//! Everything here is assembled from `a_i`, `a_i+` alone and serves as the
//! independent reference for the sector matrices of [`crate::algebra`].
//! The single-mode part covers the `n`-photon cluster `V+ = (a+)^n`: its
//! multilinear commutator relation and the canonical boson `W+` built on a
//! fixed `kappa` chain.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{falling_factorial, sector_of_fock, ModelParams, Sector, SectorOperators, StructurePolynomial};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Largest basis accepted by [`build_fock`].
pub const FOCK_CAP: usize = 200_000;

/// Default one-mode cutoff (max `n1`).
pub const DEFAULT_ONE_MODE_CUTOFF: u32 = 40;
/// Default two-mode cutoff (max `n0 + n1`).
pub const DEFAULT_TWO_MODE_CUTOFF: u32 = 24;

/// Column-major sparse matrix; column `j` lists its `(row, value)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, cols: vec![Vec::new(); dim] }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let cols = values.iter().enumerate().filter(|(_, v)| **v != 0.0).fold(
            vec![Vec::new(); values.len()],
            |mut cols, (j, &v)| {
                cols[j].push((j, c(v)));
                cols
            },
        );
        Self { dim: values.len(), cols }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[(usize, Complex64)] {
        &self.cols[j]
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        self.cols[col].push((row, value));
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col].iter().filter(|(r, _)| *r == row).map(|(_, v)| *v).sum()
    }

    pub fn max_entries_per_column(&self) -> usize {
        self.cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Product `self * rhs` by column substitution.
    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut touched = Vec::new();
        let mut out = SparseMatrix::zeros(self.dim);
        for (j, col) in rhs.cols.iter().enumerate() {
            for &(k, b) in col {
                for &(i, a) in &self.cols[k] {
                    if scratch[i] == Complex64::new(0.0, 0.0) {
                        touched.push(i);
                    }
                    scratch[i] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &i in &touched {
                if scratch[i] != Complex64::new(0.0, 0.0) {
                    out.cols[j].push((i, scratch[i]));
                }
                scratch[i] = Complex64::new(0.0, 0.0);
            }
            touched.clear();
        }
        out
    }

    pub fn pow(&self, k: u32) -> SparseMatrix {
        (0..k).fold(SparseMatrix::identity(self.dim), |acc, _| self.mul(&acc))
    }

    pub fn scale(&self, s: Complex64) -> SparseMatrix {
        let cols = self.cols.iter().map(|col| col.iter().map(|&(i, v)| (i, v * s)).collect()).collect();
        SparseMatrix { dim: self.dim, cols }
    }

    pub fn add(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.combine(rhs, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.combine(rhs, Complex64::new(-1.0, 0.0))
    }

    fn combine(&self, rhs: &SparseMatrix, factor: Complex64) -> SparseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut out = SparseMatrix::zeros(self.dim);
        for j in 0..self.dim {
            let mut entries: Vec<(usize, Complex64)> = self.cols[j].clone();
            for &(i, v) in &rhs.cols[j] {
                match entries.iter_mut().find(|(r, _)| *r == i) {
                    Some(e) => e.1 += factor * v,
                    None => entries.push((i, factor * v)),
                }
            }
            entries.retain(|(_, v)| *v != Complex64::new(0.0, 0.0));
            entries.sort_by_key(|(r, _)| *r);
            out.cols[j] = entries;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> SparseMatrix {
        let mut out = SparseMatrix::zeros(self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                out.cols[i].push((j, v.conj()));
            }
        }
        for col in &mut out.cols {
            col.sort_by_key(|(r, _)| *r);
        }
        out
    }

    pub fn commutator(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    /// Largest `|entry|` over entries whose row and column pass `mask`.
    pub fn max_abs_masked(&self, mask: &[bool]) -> f64 {
        let mut acc = 0.0f64;
        for (j, col) in self.cols.iter().enumerate() {
            if !mask[j] {
                continue;
            }
            for &(i, v) in col {
                if mask[i] {
                    acc = acc.max(v.norm());
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_masked(&vec![true; self.dim])
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] += v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modes {
    /// Mode 1 only; mode 0 is frozen at `n0 = 0`.
    One,
    Two,
}

/// Truncated number basis with ladder matrices for each mode.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub cutoff: u32,
    pub modes: Modes,
    pub basis: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), usize>,
    /// Annihilators `a_0, a_1`.
    pub a: [SparseMatrix; 2],
    /// Creators `a_0+, a_1+`, built independently of `a`.
    pub adag: [SparseMatrix; 2],
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, n0: i64, n1: i64) -> Option<usize> {
        if n0 < 0 || n1 < 0 {
            return None;
        }
        self.index.get(&(n0 as u32, n1 as u32)).copied()
    }

    pub fn number(&self, mode: usize) -> SparseMatrix {
        self.adag[mode].mul(&self.a[mode])
    }

    /// States within `width` quanta of the cutoff are excluded.
    pub fn interior_mask(&self, width: u32) -> Vec<bool> {
        self.basis.iter().map(|&(n0, n1)| n0 + n1 + width <= self.cutoff).collect()
    }

    fn total(&self, n0: u32, n1: u32) -> u32 {
        n0 + n1
    }
}

/// Builds the basis `n0 + n1 <= cutoff` (two modes) or `n1 <= cutoff` (one mode).
pub fn build_fock(cutoff: u32, modes: Modes) -> Result<FockSpace> {
    let size = match modes {
        Modes::One => cutoff as usize + 1,
        Modes::Two => (cutoff as usize + 1) * (cutoff as usize + 2) / 2,
    };
    if size > FOCK_CAP {
        return Err(Error::CapExceeded { size, cap: FOCK_CAP });
    }
    let mut basis = Vec::with_capacity(size);
    match modes {
        Modes::One => basis.extend((0..=cutoff).map(|n1| (0, n1))),
        Modes::Two => {
            for total in 0..=cutoff {
                for n0 in (0..=total).rev() {
                    basis.push((n0, total - n0));
                }
            }
        }
    }
    let index: HashMap<(u32, u32), usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut space = FockSpace {
        cutoff,
        modes,
        basis,
        index,
        a: [SparseMatrix::zeros(size), SparseMatrix::zeros(size)],
        adag: [SparseMatrix::zeros(size), SparseMatrix::zeros(size)],
    };
    let active: &[usize] = match modes {
        Modes::One => &[1],
        Modes::Two => &[0, 1],
    };
    for j in 0..size {
        let (n0, n1) = space.basis[j];
        for &mode in active {
            let occ = if mode == 0 { n0 } else { n1 };
            let shift = |d: i64| if mode == 0 { (n0 as i64 + d, n1 as i64) } else { (n0 as i64, n1 as i64 + d) };
            if occ > 0 {
                let (r0, r1) = shift(-1);
                let i = space.index_of(r0, r1).expect("lowered state in basis");
                space.a[mode].push(i, j, c((occ as f64).sqrt()));
            }
            if space.total(n0, n1) < cutoff {
                let (r0, r1) = shift(1);
                let i = space.index_of(r0, r1).expect("raised state in basis");
                space.adag[mode].push(i, j, c((occ as f64 + 1.0).sqrt()));
            }
        }
    }
    Ok(space)
}

/// Cluster generators and the model Hamiltonian on a Fock space.
#[derive(Debug, Clone)]
pub struct ClusterOps {
    pub params: ModelParams,
    /// `V+ = (a1+)^n (a0)^m`
    pub vplus: SparseMatrix,
    /// `V = (a0+)^m (a1)^n`, assembled from creators and annihilators directly.
    pub v: SparseMatrix,
    pub v0: SparseMatrix,
    pub r1: SparseMatrix,
    pub h: SparseMatrix,
    /// States whose images under `V`, `V+` and their products stay inside the cutoff.
    pub interior: Vec<bool>,
}

pub fn build_cluster_ops(fock: &FockSpace, params: &ModelParams) -> Result<ClusterOps> {
    let (m, n) = (params.m(), params.n());
    if fock.modes == Modes::One && m != 0 {
        return Err(Error::InvalidParams("one-mode Fock space needs m = 0".into()));
    }
    let vplus = fock.adag[1].pow(n).mul(&fock.a[0].pow(m));
    let v = fock.adag[0].pow(m).mul(&fock.a[1].pow(n));
    let n0 = fock.number(0);
    let n1 = fock.number(1);
    let p = (m + n) as f64;
    let v0 = n1.sub(&n0).scale(c(1.0 / p));
    let r1 = n1.scale(c(m as f64 / p)).add(&n0.scale(c(n as f64 / p)));
    let h = n0
        .scale(c(params.omega0))
        .add(&n1.scale(c(params.omega1)))
        .add(&vplus.scale(params.g))
        .add(&v.scale(params.g.conj()));
    Ok(ClusterOps { params: *params, vplus, v, v0, r1, h, interior: fock.interior_mask(m + n) })
}

/// Projects the cluster operators onto the ordered chain basis of `sector`.
pub fn oracle_sector_ops(cluster: &ClusterOps, fock: &FockSpace, sector: &Sector) -> Result<SectorOperators> {
    let params = &cluster.params;
    let d = sector.levels();
    let mut rows = Vec::with_capacity(d);
    for v in 0..d {
        let (n0, n1) = sector.chain_state(params, v);
        let idx = fock.index_of(n0, n1).ok_or(Error::OutOfCutoff { n0, n1, cutoff: fock.cutoff })?;
        rows.push(idx);
    }
    let project = |op: &SparseMatrix| CMatrix::from_fn(d, d, |i, j| op.get(rows[i], rows[j]));
    Ok(SectorOperators {
        sector: sector.clone(),
        dim: d,
        truncated: sector.is_truncated(),
        v0: project(&cluster.v0),
        vplus: project(&cluster.vplus),
        vminus: project(&cluster.v),
        h: project(&cluster.h),
    })
}

fn sector_label(params: &ModelParams, n0: u32, n1: u32) -> (u32, u32) {
    sector_of_fock(params, n0, n1, None).map(|(s, _)| s.label()).expect("valid occupation")
}

/// Largest `|<i|H|j>|` between Fock states of different sectors.
pub fn sector_leakage(cluster: &ClusterOps, fock: &FockSpace) -> f64 {
    let mut acc = 0.0f64;
    for (j, &(a0, a1)) in fock.basis.iter().enumerate() {
        let lj = sector_label(&cluster.params, a0, a1);
        for &(i, v) in cluster.h.column(j) {
            let (b0, b1) = fock.basis[i];
            if sector_label(&cluster.params, b0, b1) != lj {
                acc = acc.max(v.norm());
            }
        }
    }
    acc
}

/// Identity residuals evaluated on the full Fock space (interior states only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockIdentityResiduals {
    /// `[V, V+] - psi(V0)` with `psi` taken per state from its sector.
    pub bracket: f64,
    /// `V+ V - Psi(V0)`.
    pub casimir: f64,
    /// `[H, R1]`.
    pub invariance: f64,
    /// `V - adjoint(V+)`, over the whole space.
    pub adjointness: f64,
    /// Largest `|psi|`/`|Psi|` value seen, for relative tolerances.
    pub scale: f64,
}

pub fn fock_identity_residuals(cluster: &ClusterOps, fock: &FockSpace) -> FockIdentityResiduals {
    let params = &cluster.params;
    let mut small = Vec::with_capacity(fock.dim());
    let mut big = Vec::with_capacity(fock.dim());
    for &(n0, n1) in &fock.basis {
        let (sector, v) = sector_of_fock(params, n0, n1, None).expect("valid occupation");
        let poly = StructurePolynomial::for_sector(&sector, params);
        small.push(poly.small_at_level(v as i64));
        big.push(poly.at_level(v as i64));
    }
    let scale = small.iter().chain(big.iter()).fold(1.0f64, |a, x| a.max(x.abs()));
    let bracket = cluster.v.commutator(&cluster.vplus).sub(&SparseMatrix::diagonal(&small));
    let casimir = cluster.vplus.mul(&cluster.v).sub(&SparseMatrix::diagonal(&big));
    let invariance = cluster.h.commutator(&cluster.r1);
    FockIdentityResiduals {
        bracket: bracket.max_abs_masked(&cluster.interior),
        casimir: casimir.max_abs_masked(&cluster.interior),
        invariance: invariance.max_abs_masked(&cluster.interior),
        adjointness: cluster.v.sub(&cluster.vplus.adjoint()).max_abs(),
        scale,
    }
}

/// One-mode operator with entries `coeff * sqrt(max(i,j)! / min(i,j)!)`.
///
/// Every ladder word maps `|j>` to `|i>` with a coefficient of that form and an
/// integer prefactor, so products and commutators stay exact.
#[derive(Debug, Clone, PartialEq)]
struct ScaledLadderOp {
    cols: Vec<Vec<(usize, i128)>>,
}

impl ScaledLadderOp {
    fn lowering(dim: usize) -> Self {
        let cols = (0..dim).map(|j| if j > 0 { vec![(j - 1, 1)] } else { Vec::new() }).collect();
        Self { cols }
    }

    fn raising(dim: usize) -> Self {
        let cols = (0..dim).map(|j| if j + 1 < dim { vec![(j + 1, 1)] } else { Vec::new() }).collect();
        Self { cols }
    }

    fn identity(dim: usize) -> Self {
        Self { cols: (0..dim).map(|j| vec![(j, 1)]).collect() }
    }

    /// Product of the edge labels shared by the paths `j -> k` and `k -> i`.
    fn overlap(j: usize, k: usize, i: usize) -> Result<i128> {
        let (lo, hi) = if j < k && i < k {
            (j.max(i), k)
        } else if j > k && i > k {
            (k, j.min(i))
        } else {
            return Ok(1);
        };
        ((lo + 1)..=hi).try_fold(1i128, |acc, e| acc.checked_mul(e as i128).ok_or(Error::Overflow))
    }

    fn mul(&self, rhs: &Self) -> Result<Self> {
        let dim = self.cols.len();
        let mut cols = Vec::with_capacity(dim);
        for (j, col) in rhs.cols.iter().enumerate() {
            let mut acc: Vec<(usize, i128)> = Vec::new();
            for &(k, b) in col {
                for &(i, a) in &self.cols[k] {
                    let term = a
                        .checked_mul(b)
                        .and_then(|x| x.checked_mul(Self::overlap(j, k, i).ok()?))
                        .ok_or(Error::Overflow)?;
                    match acc.iter_mut().find(|(r, _)| *r == i) {
                        Some(e) => e.1 = e.1.checked_add(term).ok_or(Error::Overflow)?,
                        None => acc.push((i, term)),
                    }
                }
            }
            acc.retain(|(_, v)| *v != 0);
            cols.push(acc);
        }
        Ok(Self { cols })
    }

    fn pow(&self, k: u32) -> Result<Self> {
        (0..k).try_fold(Self::identity(self.cols.len()), |acc, _| self.mul(&acc))
    }

    fn sub(&self, rhs: &Self) -> Result<Self> {
        let mut cols = self.cols.clone();
        for (j, col) in rhs.cols.iter().enumerate() {
            for &(i, v) in col {
                match cols[j].iter_mut().find(|(r, _)| *r == i) {
                    Some(e) => e.1 = e.1.checked_sub(v).ok_or(Error::Overflow)?,
                    None => cols[j].push((i, -v)),
                }
            }
            cols[j].retain(|(_, v)| *v != 0);
        }
        Ok(Self { cols })
    }

    fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.mul(rhs)?.sub(&rhs.mul(self)?)
    }

    fn max_abs_masked(&self, limit: usize) -> f64 {
        let mut acc = 0.0f64;
        for (j, col) in self.cols.iter().enumerate().take(limit + 1) {
            for &(i, v) in col {
                if i <= limit {
                    acc = acc.max(v.unsigned_abs() as f64 * sqrt_factorial_ratio(i.max(j), i.min(j)));
                }
            }
        }
        acc
    }
}

fn sqrt_factorial_ratio(hi: usize, lo: usize) -> f64 {
    (0.5 * ((lo + 1)..=hi).map(|k| (k as f64).ln()).sum::<f64>()).exp()
}

/// Max entry of `V+ = (a+)^n` on a one-mode space.
pub fn cluster_max_entry(fock: &FockSpace, n: u32) -> f64 {
    fock.adag[1].pow(n).max_abs()
}

/// Max entry of the nested commutator `ad_V^depth V+` over states with
/// `n1 <= cutoff - n(n+2)`, for `V = (a)^n`.
pub fn para_commutator_norm(fock: &FockSpace, n: u32, depth: u32) -> Result<f64> {
    if fock.modes != Modes::One {
        return Err(Error::InvalidParams("parastatistics check runs on a one-mode space".into()));
    }
    let width = n * (n + 2);
    let required = width + 2 * n;
    if fock.cutoff < required {
        return Err(Error::CutoffTooSmall { cutoff: fock.cutoff, required });
    }
    let dim = fock.dim();
    let v = ScaledLadderOp::lowering(dim).pow(n)?;
    let vplus = ScaledLadderOp::raising(dim).pow(n)?;
    let nested = (0..depth).try_fold(vplus, |x, _| v.commutator(&x))?;
    Ok(nested.max_abs_masked((fock.cutoff - width) as usize))
}

/// `ad_V^{n+1} V+` on the interior; vanishes identically for the cluster.
pub fn para_relation_residual(fock: &FockSpace, n: u32) -> Result<f64> {
    para_commutator_norm(fock, n, n + 1)
}

/// Canonical boson `W+` on the chain `{|kappa + v n>}`, as a matrix mapping
/// level `v` to `v + 1`.
pub fn build_w(fock: &FockSpace, n: u32, kappa: u32) -> Result<DMatrix<f64>> {
    if fock.modes != Modes::One {
        return Err(Error::InvalidParams("W map is built on a one-mode space".into()));
    }
    if kappa >= n {
        return Err(Error::InvalidParams(format!("kappa {kappa} must be below n = {n}")));
    }
    if kappa > fock.cutoff {
        return Err(Error::CutoffTooSmall { cutoff: fock.cutoff, required: kappa });
    }
    let d = ((fock.cutoff - kappa) / n + 1) as usize;
    let vplus = fock.adag[1].pow(n);
    let chain: Vec<usize> =
        (0..d).map(|v| fock.index_of(0, (kappa + v as u32 * n) as i64).expect("chain state in basis")).collect();
    let mut w = DMatrix::zeros(d, d);
    for v in 0..d.saturating_sub(1) {
        let e11 = (kappa + v as u32 * n) as f64;
        let denom = falling_factorial(e11 + n as f64, n);
        assert!(denom > 0.0, "falling factorial vanished on a chain state");
        let dressing = ((v as f64 + 1.0) / denom).sqrt();
        w[(v + 1, v)] = vplus.get(chain[v + 1], chain[v]).re * dressing;
    }
    Ok(w)
}

/// `max |[W, W+] - I|` excluding the top chain state.
pub fn canonical_residual(w_plus: &DMatrix<f64>) -> f64 {
    let w = w_plus.transpose();
    let comm = &w * w_plus - w_plus * &w - DMatrix::<f64>::identity(w.nrows(), w.ncols());
    let k = w.nrows().saturating_sub(1);
    comm.view((0, 0), (k, k)).iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Diagonal of `N_W = W+ W` on the chain.
pub fn number_w(w_plus: &DMatrix<f64>) -> Vec<f64> {
    let nw = w_plus * w_plus.transpose();
    (0..nw.nrows()).map(|i| nw[(i, i)]).collect()
}

/// Cluster number `N_V = (E11 - kappa) / n` on the chain, with `E11 = a1+ a1`
/// read off the Fock number operator.
pub fn number_v(fock: &FockSpace, n: u32, kappa: u32) -> Vec<f64> {
    let e11 = fock.number(1);
    let d = ((fock.cutoff - kappa) / n + 1) as usize;
    (0..d)
        .map(|v| {
            let idx = fock.index_of(0, (kappa + v as u32 * n) as i64).expect("chain state in basis");
            (e11.get(idx, idx).re - kappa as f64) / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_sector_ops, enumerate_sectors, psi_scale};
    use crate::linalg::max_abs;

    fn params(m: u32, n: u32) -> ModelParams {
        ModelParams::new(m, n, 0.9, 1.3, Complex64::new(0.4, -0.25)).unwrap()
    }

    #[test]
    fn small_basis() {
        let f = build_fock(1, Modes::Two).unwrap();
        assert_eq!(f.basis, vec![(0, 0), (1, 0), (0, 1)]);
        let vac = f.index_of(0, 0).unwrap();
        let one = f.index_of(0, 1).unwrap();
        assert_eq!(f.adag[1].column(vac), &[(one, c(1.0))]);
        assert_eq!(build_fock(7, Modes::Two).unwrap().dim(), 36);
        assert_eq!(build_fock(7, Modes::One).unwrap().dim(), 8);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(build_fock(700, Modes::Two), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn canonical_commutators_on_interior() {
        let f = build_fock(10, Modes::Two).unwrap();
        let mask = f.interior_mask(1);
        for mode in 0..2 {
            let comm = f.a[mode].commutator(&f.adag[mode]).sub(&SparseMatrix::identity(f.dim()));
            // sqrt(k+1)^2 - sqrt(k)^2 rounds at the ulp level
            assert!(comm.max_abs_masked(&mask) < 1e-14 * f.cutoff as f64);
            assert_eq!(f.adag[mode].sub(&f.a[mode].adjoint()).max_abs(), 0.0);
            assert!(f.a[mode].max_entries_per_column() <= 1);
        }
        let cross = f.a[0].commutator(&f.adag[1]);
        assert_eq!(cross.max_abs_masked(&mask), 0.0);
        let n1 = f.number(1);
        for (j, &(_, k)) in f.basis.iter().enumerate() {
            assert!((n1.get(j, j).re - k as f64).abs() <= 4.0 * f64::EPSILON * k as f64);
        }
    }

    #[test]
    fn cluster_raising_example() {
        let p = params(1, 2);
        let f = build_fock(8, Modes::Two).unwrap();
        let cl = build_cluster_ops(&f, &p).unwrap();
        let from = f.index_of(2, 1).unwrap();
        let to = f.index_of(1, 3).unwrap();
        assert!((cl.vplus.get(to, from).re - 12f64.sqrt()).abs() < 1e-13);
        assert_eq!(cl.vplus.column(from).len(), 1);
        let vac_like = f.index_of(0, 3).unwrap();
        assert!(cl.vplus.column(vac_like).is_empty());
    }

    #[test]
    fn hamiltonian_diagonal_on_lowest_vectors() {
        let p = params(1, 2);
        let f = build_fock(8, Modes::Two).unwrap();
        let cl = build_cluster_ops(&f, &p).unwrap();
        for (s, kappa) in [(3u32, 1u32), (0, 0), (5, 0)] {
            let i = f.index_of(s as i64, kappa as i64).unwrap();
            let expect = p.omega0 * s as f64 + p.omega1 * kappa as f64;
            assert!((cl.h.get(i, i).re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_matches_algebra() {
        for (m, n) in [(1, 1), (1, 2), (2, 3), (2, 1)] {
            let p = params(m, n);
            let f = build_fock(14, Modes::Two).unwrap();
            let cl = build_cluster_ops(&f, &p).unwrap();
            for sec in enumerate_sectors(&p, 14, None).unwrap() {
                let oracle = match oracle_sector_ops(&cl, &f, &sec) {
                    Ok(o) => o,
                    Err(Error::OutOfCutoff { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                let alg = build_sector_ops(&sec, &p, None).unwrap();
                let scale = psi_scale(&sec, &p, alg.dim);
                for (x, y) in [(&alg.v0, &oracle.v0), (&alg.vplus, &oracle.vplus), (&alg.vminus, &oracle.vminus), (&alg.h, &oracle.h)] {
                    assert!(max_abs(&(x - y)) < 1e-10 * scale, "m={m} n={n} {sec}");
                }
            }
        }
    }

    #[test]
    fn out_of_cutoff_is_reported() {
        let p = params(1, 2);
        let f = build_fock(4, Modes::Two).unwrap();
        let cl = build_cluster_ops(&f, &p).unwrap();
        let sec = Sector::new(&p, 0, 4, None).unwrap();
        assert!(matches!(oracle_sector_ops(&cl, &f, &sec), Err(Error::OutOfCutoff { .. })));
    }

    #[test]
    fn hamiltonian_is_block_diagonal() {
        for (m, n) in [(1, 1), (1, 2), (2, 3), (0, 2)] {
            let p = params(m, n);
            let f = build_fock(12, Modes::Two).unwrap();
            let cl = build_cluster_ops(&f, &p).unwrap();
            assert_eq!(sector_leakage(&cl, &f), 0.0);
            let res = fock_identity_residuals(&cl, &f);
            assert!(res.bracket < 1e-10 * res.scale, "m={m} n={n}: {res:?}");
            assert!(res.casimir < 1e-10 * res.scale);
            assert!(res.invariance < 1e-12);
            assert!(res.adjointness < 1e-13 * res.scale);
        }
    }

    #[test]
    fn one_mode_rejects_compact_cluster() {
        let f = build_fock(10, Modes::One).unwrap();
        assert!(build_cluster_ops(&f, &params(1, 2)).is_err());
        assert!(build_cluster_ops(&f, &params(0, 2)).is_ok());
    }

    #[test]
    fn boson_para_relation_trivial() {
        let f = build_fock(12, Modes::One).unwrap();
        assert_eq!(para_relation_residual(&f, 1).unwrap(), 0.0);
        assert!(para_commutator_norm(&f, 1, 1).unwrap() > 0.5);
    }

    #[test]
    fn scaled_ladder_products_match_float_products() {
        let f = build_fock(12, Modes::One).unwrap();
        let dim = f.dim();
        let exact = ScaledLadderOp::lowering(dim)
            .pow(2)
            .unwrap()
            .mul(&ScaledLadderOp::raising(dim).pow(3).unwrap())
            .unwrap();
        let float = f.a[1].pow(2).mul(&f.adag[1].pow(3));
        for j in 0..dim {
            for i in 0..dim {
                let ex: f64 = exact.cols[j]
                    .iter()
                    .filter(|(r, _)| *r == i)
                    .map(|(_, v)| *v as f64 * sqrt_factorial_ratio(i.max(j), i.min(j)))
                    .sum();
                assert!((ex - float.get(i, j).re).abs() < 1e-9 * (1.0 + ex.abs()));
            }
        }
    }

    #[test]
    fn para_cutoff_too_small() {
        let f = build_fock(10, Modes::One).unwrap();
        assert!(matches!(para_relation_residual(&f, 2), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn w_map_two_photon() {
        let f = build_fock(40, Modes::One).unwrap();
        let w = build_w(&f, 2, 0).unwrap();
        for v in 0..w.nrows() - 1 {
            assert!((w[(v + 1, v)] - (v as f64 + 1.0).sqrt()).abs() < 1e-10);
        }
        assert!(canonical_residual(&w) < 1e-9);
        let nw = number_w(&w);
        let nv = number_v(&f, 2, 0);
        for (x, y) in nw.iter().zip(&nv) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
