//! Sector representations of the polynomial algebra built directly from the
//! structure polynomial, without reference to the two-mode Fock space.
//!
//! A model `H = w0 a0+a0 + w1 a1+a1 + g (a1+)^n (a0)^m + h.c.` splits into
//! chains `|s - v m, kappa + v n>` labelled by `(kappa, s)`. On a chain the
//! generators act as `V0 = l0 + v`, `V+ V- = Psi(V0)`, and the Hamiltonian is
//! the tridiagonal `a V0 + g V+ + conj(g) V- + C`.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::linalg::{c, commutator, diagonal, max_abs, max_abs_leading, CMatrix};

/// Truncation used for noncompact sectors when the caller gives none.
pub const DEFAULT_V_MAX: usize = 256;

/// Hard cap on the number of levels of a single sector block.
pub const DIM_CAP: usize = 4096;

const LOG_SWITCH: f64 = 1e280;

/// Physical model parameters. `a` and `C` are always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    m: u32,
    n: u32,
    pub omega0: f64,
    pub omega1: f64,
    pub g: Complex64,
}

impl ModelParams {
    pub fn new(m: u32, n: u32, omega0: f64, omega1: f64, g: Complex64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if !(omega0.is_finite() && omega1.is_finite() && g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::InvalidParams("frequencies and coupling must be finite".into()));
        }
        Ok(Self { m, n, omega0, omega1, g })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Degree of the structure polynomial.
    pub fn p(&self) -> u32 {
        self.m + self.n
    }

    /// Detuning `a = n w1 - m w0`.
    pub fn a(&self) -> f64 {
        self.n as f64 * self.omega1 - self.m as f64 * self.omega0
    }

    pub fn is_compact(&self) -> bool {
        self.m != 0
    }

    pub fn with_g(self, g: Complex64) -> Self {
        Self { g, ..self }
    }
}

/// Number of levels of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Finite(usize),
    /// Noncompact chain cut after `v_max`, holding `v_max + 1` levels.
    Truncated(usize),
}

impl Dimension {
    pub fn levels(&self) -> usize {
        match *self {
            Dimension::Finite(d) | Dimension::Truncated(d) => d,
        }
    }
}

/// One invariant chain `L([l_i])` generated from the lowest vector `|s, kappa>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub kappa: u32,
    pub s: u32,
    pub l0: Ratio<i64>,
    pub l1: Ratio<i64>,
    pub dim: Dimension,
    pub compact: bool,
    /// `C = l1 (w0 + w1)`.
    pub c: f64,
}

impl Sector {
    /// Builds the sector with lowest vector `|n0 = s, n1 = kappa>`.
    /// `v_max` only affects noncompact (`m = 0`) sectors.
    pub fn new(params: &ModelParams, kappa: u32, s: u32, v_max: Option<usize>) -> Result<Self> {
        let (m, n) = (params.m as i64, params.n as i64);
        if kappa as i64 >= n {
            return Err(Error::InvalidParams(format!("kappa {kappa} must be below n = {n}")));
        }
        let p = m + n;
        let l0 = Ratio::new(kappa as i64 - s as i64, p);
        let l1 = Ratio::new(m * kappa as i64 + n * s as i64, p);
        let compact = params.is_compact();
        let dim = if compact {
            Dimension::Finite(s as usize / params.m as usize + 1)
        } else {
            Dimension::Truncated(v_max.unwrap_or(DEFAULT_V_MAX) + 1)
        };
        Ok(Self { kappa, s, l0, l1, dim, compact, c: to_f64(l1) * (params.omega0 + params.omega1) })
    }

    pub fn levels(&self) -> usize {
        self.dim.levels()
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.dim, Dimension::Truncated(_))
    }

    /// Fock occupation `(n0, n1)` of the `v`-th chain state.
    pub fn chain_state(&self, params: &ModelParams, v: usize) -> (i64, i64) {
        let v = v as i64;
        (self.s as i64 - v * params.m as i64, self.kappa as i64 + v * params.n as i64)
    }

    pub fn label(&self) -> (u32, u32) {
        (self.kappa, self.s)
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(kappa={}, s={})", self.kappa, self.s)
    }
}

pub fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `ln |x|` together with the sign of `x`; used when products leave the f64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    pub sign: f64,
}

impl SignedLog {
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    fn mul(self, other: SignedLog) -> SignedLog {
        SignedLog { ln_abs: self.ln_abs + other.ln_abs, sign: self.sign * other.sign }
    }
}

/// Falling factorial `x (x-1) ... (x-b+1)`; `b = 0` gives 1.
pub fn falling_factorial(x: f64, b: u32) -> f64 {
    let mut acc = 1.0;
    for k in 0..b {
        acc *= x - k as f64;
        if acc.abs() > LOG_SWITCH {
            return ln_falling_factorial(x, b).value();
        }
    }
    acc
}

pub fn ln_falling_factorial(x: f64, b: u32) -> SignedLog {
    let mut out = SignedLog { ln_abs: 0.0, sign: 1.0 };
    for k in 0..b {
        let f = x - k as f64;
        if f == 0.0 {
            return SignedLog { ln_abs: f64::NEG_INFINITY, sign: 0.0 };
        }
        out.ln_abs += f.abs().ln();
        if f < 0.0 {
            out.sign = -out.sign;
        }
    }
    out
}

fn product_of_falling(x1: f64, b1: u32, x2: f64, b2: u32) -> f64 {
    let f1 = falling_factorial(x1, b1);
    let f2 = falling_factorial(x2, b2);
    let prod = f1 * f2;
    if prod.is_finite() && f1.abs() <= LOG_SWITCH && f2.abs() <= LOG_SWITCH && prod.abs() <= LOG_SWITCH {
        prod
    } else {
        ln_falling_factorial(x1, b1).mul(ln_falling_factorial(x2, b2)).value()
    }
}

/// Evaluation rule `Psi(x) = (n x + l1)^(n) (l1 - m x + m)^(m)` for one sector.
///
/// `leading_scale` multiplies every value; it is 1 except in sensitivity probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructurePolynomial {
    pub m: u32,
    pub n: u32,
    pub l1: Ratio<i64>,
    pub l0: Ratio<i64>,
    pub leading_scale: f64,
}

impl StructurePolynomial {
    pub fn for_sector(sector: &Sector, params: &ModelParams) -> Self {
        Self { m: params.m, n: params.n, l1: sector.l1, l0: sector.l0, leading_scale: 1.0 }
    }

    /// Same rule with every value scaled by `1 + eps`.
    pub fn perturbed(self, eps: f64) -> Self {
        Self { leading_scale: self.leading_scale * (1.0 + eps), ..self }
    }

    pub fn degree(&self) -> u32 {
        self.m + self.n
    }

    pub fn eval(&self, x: f64) -> f64 {
        let l1 = to_f64(self.l1);
        let (m, n) = (self.m as f64, self.n as f64);
        self.leading_scale * product_of_falling(n * x + l1, self.n, l1 - m * x + m, self.m)
    }

    /// `Psi` at an exact rational argument; the factor arguments are formed
    /// exactly and rounded once.
    pub fn eval_exact(&self, x: Ratio<i64>) -> f64 {
        let (m, n) = (self.m as i64, self.n as i64);
        let first = x * n + self.l1;
        let second = self.l1 - x * m + m;
        self.leading_scale * product_of_falling(to_f64(first), self.n, to_f64(second), self.m)
    }

    /// `Psi(l0 + v)`; zero at `v = 0` exactly.
    pub fn at_level(&self, v: i64) -> f64 {
        self.eval_exact(self.l0 + v)
    }

    /// `psi(x) = Psi(x + 1) - Psi(x)`.
    pub fn small(&self, x: f64) -> f64 {
        self.eval(x + 1.0) - self.eval(x)
    }

    pub fn small_at_level(&self, v: i64) -> f64 {
        self.at_level(v + 1) - self.at_level(v)
    }
}

/// `Psi(x)` for the sector's structure polynomial.
pub fn psi_big(sector: &Sector, params: &ModelParams, x: f64) -> f64 {
    StructurePolynomial::for_sector(sector, params).eval(x)
}

/// `psi(x) = Psi(x+1) - Psi(x)`, the right-hand side of `[V-, V+]`.
pub fn psi_small(sector: &Sector, params: &ModelParams, x: f64) -> f64 {
    StructurePolynomial::for_sector(sector, params).small(x)
}

/// All sectors whose chain has at least one state with `n0 + n1 <= nmax`,
/// sorted by `(kappa, s)`.
///
/// For `m <= n` the lowest vector carries the fewest quanta of its chain, so
/// this is exactly the set with `s + kappa <= nmax`.
pub fn enumerate_sectors(params: &ModelParams, nmax: u32, v_max: Option<usize>) -> Result<Vec<Sector>> {
    let (m, n) = (params.m, params.n);
    let mut out = Vec::new();
    for kappa in 0..n.min(nmax + 1) {
        let s_limit = if m > n {
            // chain quanta decrease along v; the top state has the fewest
            m as u64 * ((nmax as u64) / n as u64 + 1) + m as u64
        } else {
            (nmax - kappa) as u64
        };
        for s in 0..=s_limit as u32 {
            if min_chain_quanta(params, kappa, s) <= nmax as u64 {
                out.push(Sector::new(params, kappa, s, v_max)?);
            }
        }
    }
    Ok(out)
}

fn min_chain_quanta(params: &ModelParams, kappa: u32, s: u32) -> u64 {
    let (m, n) = (params.m as u64, params.n as u64);
    let (s, kappa) = (s as u64, kappa as u64);
    if m > n {
        let top = s / m;
        s - top * m + kappa + top * n
    } else {
        s + kappa
    }
}

/// Locates the chain and level holding the Fock state `|n0, n1>`.
pub fn sector_of_fock(params: &ModelParams, n0: u32, n1: u32, v_max: Option<usize>) -> Result<(Sector, usize)> {
    let kappa = n1 % params.n;
    let v = (n1 - kappa) / params.n;
    let s = n0 as u64 + v as u64 * params.m as u64;
    let s = u32::try_from(s).map_err(|_| Error::InvalidParams("occupation too large".into()))?;
    let sector = Sector::new(params, kappa, s, v_max)?;
    Ok((sector, v as usize))
}

/// Matrix representation of `V0, V+, V-, H` on one sector basis.
#[derive(Debug, Clone)]
pub struct SectorOperators {
    pub sector: Sector,
    pub dim: usize,
    pub truncated: bool,
    pub v0: CMatrix,
    pub vplus: CMatrix,
    pub vminus: CMatrix,
    pub h: CMatrix,
}

/// Builds the sector matrices from the structure polynomial.
///
/// For noncompact sectors `v_max` overrides the truncation stored in the sector.
pub fn build_sector_ops(sector: &Sector, params: &ModelParams, v_max: Option<usize>) -> Result<SectorOperators> {
    build_sector_ops_with(sector, params, v_max, StructurePolynomial::for_sector(sector, params))
}

pub fn build_sector_ops_with(
    sector: &Sector,
    params: &ModelParams,
    v_max: Option<usize>,
    poly: StructurePolynomial,
) -> Result<SectorOperators> {
    let mut sector = sector.clone();
    if let (Dimension::Truncated(_), Some(vm)) = (sector.dim, v_max) {
        sector.dim = Dimension::Truncated(vm + 1);
    }
    let d = sector.levels();
    if d > DIM_CAP {
        return Err(Error::DimCapExceeded { dim: d, cap: DIM_CAP });
    }

    let mut ladder = Vec::with_capacity(d.saturating_sub(1));
    let scale = (1..d).map(|v| poly.at_level(v as i64).abs()).fold(1.0, f64::max);
    for v in 1..d {
        let psi = poly.at_level(v as i64);
        if psi < -1e-12 * scale {
            return Err(Error::NegativePsi { level: v, value: psi });
        }
        ladder.push(psi.max(0.0).sqrt());
    }

    let l0 = to_f64(sector.l0);
    let levels: Vec<f64> = (0..d).map(|v| to_f64(sector.l0 + v as i64)).collect();
    let v0 = diagonal(&levels);
    let mut vplus = CMatrix::zeros(d, d);
    for (v, &w) in ladder.iter().enumerate() {
        vplus[(v + 1, v)] = c(w);
    }
    let vminus = vplus.adjoint();

    let a = params.a();
    let mut h = CMatrix::zeros(d, d);
    for v in 0..d {
        h[(v, v)] = c(a * (l0 + v as f64) + sector.c);
    }
    for (v, &w) in ladder.iter().enumerate() {
        h[(v + 1, v)] = params.g * w;
        h[(v, v + 1)] = params.g.conj() * w;
    }

    Ok(SectorOperators { truncated: sector.is_truncated(), sector, dim: d, v0, vplus, vminus, h })
}

impl SectorOperators {
    /// Rows and columns on which closed-algebra identities must hold: all of
    /// them for compact sectors, all but the last for truncated ones.
    pub fn interior(&self) -> usize {
        if self.truncated {
            self.dim.saturating_sub(1)
        } else {
            self.dim
        }
    }

    /// `psi(V0)` as a diagonal matrix.
    pub fn psi_small_matrix(&self, params: &ModelParams) -> CMatrix {
        let poly = StructurePolynomial::for_sector(&self.sector, params);
        let vals: Vec<f64> = (0..self.dim).map(|v| poly.small_at_level(v as i64)).collect();
        diagonal(&vals)
    }

    pub fn psi_big_matrix(&self, params: &ModelParams) -> CMatrix {
        let poly = StructurePolynomial::for_sector(&self.sector, params);
        let vals: Vec<f64> = (0..self.dim).map(|v| poly.at_level(v as i64)).collect();
        diagonal(&vals)
    }
}

/// `max_v |Psi(l0 + v)|` over the block, floored at 1 so empty ladders
/// (one-level sectors) get an absolute tolerance.
pub fn psi_scale(sector: &Sector, params: &ModelParams, levels: usize) -> f64 {
    let poly = StructurePolynomial::for_sector(sector, params);
    (0..=levels as i64).map(|v| poly.at_level(v).abs()).fold(1.0, f64::max)
}

/// `max |Psi(V0) - V+ V-|`.
pub fn casimir_residual(ops: &SectorOperators, sector: &Sector, params: &ModelParams) -> f64 {
    debug_assert_eq!(ops.sector.label(), sector.label());
    let diff = ops.psi_big_matrix(params) - &ops.vplus * &ops.vminus;
    max_abs_leading(&diff, ops.interior())
}

/// Residuals of the defining commutation relations on one sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationResiduals {
    /// `[V0, V+] - V+`
    pub raise: f64,
    /// `[V0, V-] + V-`
    pub lower: f64,
    /// `[V-, V+] - psi(V0)`
    pub bracket: f64,
}

impl CommutationResiduals {
    pub fn max(&self) -> f64 {
        self.raise.max(self.lower).max(self.bracket)
    }
}

pub fn commutation_residuals(ops: &SectorOperators, params: &ModelParams) -> CommutationResiduals {
    let k = ops.interior();
    let raise = commutator(&ops.v0, &ops.vplus) - &ops.vplus;
    let lower = commutator(&ops.v0, &ops.vminus) + &ops.vminus;
    let bracket = commutator(&ops.vminus, &ops.vplus) - ops.psi_small_matrix(params);
    CommutationResiduals {
        raise: max_abs(&raise),
        lower: max_abs(&lower),
        bracket: max_abs_leading(&bracket, k),
    }
}
