//! Quasiclassical analysis on one sector.
//!
//! The generalized Holstein-Primakoff map writes `V0 = Y0 + l0 +- J`,
//! `V+ = Y+ sqrt(Phi(Y0))` with `Y` an auxiliary su(2) (upper sign, compact
//! sectors) or su(1,1) (lower sign, noncompact sectors) triple. Coherent
//! states `exp(xi Y+ - conj(xi) Y-)|v>` then give the energy functionals,
//! their stationary points and the Bloch-type flow on `y = <Y>`.
//!
//! Coherent-state parameters `(r, theta)` enter through `xi = -r e^{i theta}`.
//! With that orientation `<Y+> = -(J -+ v) s(2r) e^{-i theta}`, which is the
//! sign carried by the closed-form mean-field functional.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::algebra::{build_sector_ops, to_f64, ModelParams, Sector, SectorOperators, StructurePolynomial};
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, c, expectation, CMatrix, CVector};
use crate::tridiag::hermitian_tridiagonal_eigen;

/// Clamp window for rounding noise in `Phi` near its roots.
pub const PHI_EPS: f64 = 1e-12;
/// Grid size of the stationarity sign scan.
pub const SCAN_POINTS: usize = 400;
/// Step of the central difference for `d sqrt(Phi) / dy0`.
pub const SQRT_PHI_STEP: f64 = 1e-6;
/// Half-width of the window in which stationary points are polished on `H^cq`.
pub const POLISH_WINDOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpVariant {
    /// Compact sectors, auxiliary su(2), upper signs.
    Su2,
    /// Noncompact sectors, auxiliary su(1,1), lower signs.
    Su11,
}

impl HpVariant {
    /// `+1` for the upper (su(2)) signs, `-1` for the lower ones.
    pub fn sign(self) -> f64 {
        match self {
            HpVariant::Su2 => 1.0,
            HpVariant::Su11 => -1.0,
        }
    }

    /// Default variant for a sector.
    pub fn for_sector(sector: &Sector) -> Self {
        if sector.compact {
            HpVariant::Su2
        } else {
            HpVariant::Su11
        }
    }

    /// Canonical range of `r` for the stationarity scan.
    pub fn r_max(self) -> f64 {
        match self {
            HpVariant::Su2 => FRAC_PI_2,
            HpVariant::Su11 => 5.0,
        }
    }

    /// `c(x)` = cos / cosh.
    pub fn cfun(self, x: f64) -> f64 {
        match self {
            HpVariant::Su2 => x.cos(),
            HpVariant::Su11 => x.cosh(),
        }
    }

    /// `s(x)` = sin / sinh.
    pub fn sfun(self, x: f64) -> f64 {
        match self {
            HpVariant::Su2 => x.sin(),
            HpVariant::Su11 => x.sinh(),
        }
    }

    fn dcfun(self, x: f64) -> f64 {
        match self {
            HpVariant::Su2 => -x.sin(),
            HpVariant::Su11 => x.sinh(),
        }
    }

    fn dsfun(self, x: f64) -> f64 {
        match self {
            HpVariant::Su2 => x.cos(),
            HpVariant::Su11 => x.cosh(),
        }
    }
}

/// `alpha + beta u`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LinearFactor {
    alpha: f64,
    beta: f64,
}

impl LinearFactor {
    fn at(&self, u: f64) -> f64 {
        self.alpha + self.beta * u
    }
}

/// `Phi(u) = Psi^p(u + l0 +- J + 1) / Psi^2(u + 1)` held as a ratio of
/// linear factors, with common roots cancelled.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFunction {
    scale: f64,
    num: Vec<LinearFactor>,
    den: Vec<LinearFactor>,
}

impl PhiFunction {
    fn new(poly: &StructurePolynomial, variant: HpVariant, j: f64) -> Self {
        let sigma = variant.sign();
        let (m, n) = (poly.m as f64, poly.n as f64);
        let l1 = to_f64(poly.l1);
        let shift = to_f64(poly.l0) + sigma * j + 1.0;
        let mut num: Vec<LinearFactor> =
            (0..poly.n).map(|k| LinearFactor { alpha: n * shift + l1 - k as f64, beta: n }).collect();
        num.extend((0..poly.m).map(|k| LinearFactor { alpha: l1 - m * shift + m - k as f64, beta: -m }));
        let den = vec![LinearFactor { alpha: j + sigma, beta: sigma }, LinearFactor { alpha: sigma * j, beta: -1.0 }];

        let mut out = PhiFunction { scale: poly.leading_scale, num, den: Vec::new() };
        for d in den {
            // roots sit on a lattice of spacing >= 1/max(m, n), so a loose match is safe
            let root_d = -d.alpha / d.beta;
            let hit = out
                .num
                .iter()
                .position(|f| f.beta != 0.0 && (-f.alpha / f.beta - root_d).abs() <= 1e-9 * (1.0 + root_d.abs()));
            match hit {
                Some(i) => {
                    let f = out.num.remove(i);
                    out.scale *= f.beta / d.beta;
                }
                None => out.den.push(d),
            }
        }
        out
    }

    pub fn eval(&self, u: f64) -> f64 {
        let num: f64 = self.num.iter().map(|f| f.at(u)).product();
        let den: f64 = self.den.iter().map(|f| f.at(u)).product();
        self.scale * num / den
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let prod = |fs: &[LinearFactor]| fs.iter().map(|f| f.at(u)).product::<f64>();
        let dprod = |fs: &[LinearFactor]| {
            (0..fs.len())
                .map(|i| fs[i].beta * fs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, f)| f.at(u)).product::<f64>())
                .sum::<f64>()
        };
        let (n, d) = (prod(&self.num), prod(&self.den));
        let (dn, dd) = (dprod(&self.num), dprod(&self.den));
        self.scale * (dn * d - n * dd) / (d * d)
    }

    /// `sqrt(Phi(u))`, clamping rounding noise in `(-PHI_EPS, 0)`.
    pub fn sqrt(&self, u: f64) -> Result<f64> {
        let phi = self.eval(u);
        if phi >= 0.0 {
            Ok(phi.sqrt())
        } else if phi > -PHI_EPS {
            Ok(0.0)
        } else {
            Err(Error::PhiNegative { arg: u, value: phi })
        }
    }
}

/// Holstein-Primakoff data on one sector.
#[derive(Debug, Clone)]
pub struct HpContext {
    pub sector: Sector,
    pub params: ModelParams,
    pub variant: HpVariant,
    pub j: f64,
    /// `Y0` eigenvalue per level `f`.
    pub y0: Vec<f64>,
    /// `<f+1|Y+|f> = sqrt(Psi^2(Y0(f) + 1))`.
    pub y_ladder: Vec<f64>,
    /// `Phi` per level; zero on the su(2) top level.
    pub phi: Vec<f64>,
    /// `C~ = C + a (l0 +- J)`.
    pub c_tilde: f64,
    pub phi_fn: PhiFunction,
    /// Sector matrices from the algebra module; `H` is the normative Hamiltonian.
    pub ops: SectorOperators,
}

/// `Psi^2(y) = (J +- y)(+-J + 1 - y)`.
fn psi_sl2(variant: HpVariant, j: f64, y: f64) -> f64 {
    let sigma = variant.sign();
    (j + sigma * y) * (sigma * j + 1.0 - y)
}

/// Default `J` for the noncompact map.
pub const SU11_DEFAULT_J: f64 = 0.5;

pub fn build_hp(sector: &Sector, params: &ModelParams, variant: HpVariant, j: Option<f64>) -> Result<HpContext> {
    let d = sector.levels();
    let j = match variant {
        HpVariant::Su2 => {
            if !sector.compact {
                return Err(Error::InvalidMap("su(2) map needs a compact sector".into()));
            }
            let natural = (d as f64 - 1.0) / 2.0;
            if let Some(given) = j {
                if (given - natural).abs() > 1e-12 {
                    return Err(Error::InvalidMap(format!("su(2) map on {d} levels fixes J = {natural}")));
                }
            }
            natural
        }
        HpVariant::Su11 => {
            if sector.compact {
                return Err(Error::InvalidMap("su(1,1) map needs a noncompact sector".into()));
            }
            let j = j.unwrap_or(SU11_DEFAULT_J);
            if !(j > 0.0 && j.is_finite()) {
                return Err(Error::InvalidMap(format!("su(1,1) map needs J > 0, got {j}")));
            }
            j
        }
    };
    let sigma = variant.sign();
    let poly = StructurePolynomial::for_sector(sector, params);
    let y0: Vec<f64> = (0..d).map(|f| f as f64 - sigma * j).collect();
    let y_ladder: Vec<f64> = (0..d.saturating_sub(1)).map(|f| psi_sl2(variant, j, y0[f] + 1.0).max(0.0).sqrt()).collect();

    let mut phi = Vec::with_capacity(d);
    for f in 0..d {
        let denom = psi_sl2(variant, j, y0[f] + 1.0);
        let value = if variant == HpVariant::Su2 && f + 1 == d { 0.0 } else { poly.at_level(f as i64 + 1) / denom };
        if f + 1 < d && value < 0.0 {
            return Err(Error::NegativePhi { level: f, value });
        }
        phi.push(value);
    }

    let ops = build_sector_ops(sector, params, None)?;
    let c_tilde = sector.c + params.a() * (to_f64(sector.l0) + sigma * j);
    Ok(HpContext {
        sector: sector.clone(),
        params: *params,
        variant,
        j,
        y0,
        y_ladder,
        phi,
        c_tilde,
        phi_fn: PhiFunction::new(&poly, variant, j),
        ops,
    })
}

impl HpContext {
    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn yplus(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (f, &w) in self.y_ladder.iter().enumerate() {
            m[(f + 1, f)] = c(w);
        }
        m
    }

    pub fn y0_matrix(&self) -> CMatrix {
        crate::linalg::diagonal(&self.y0)
    }

    /// `Y+ sqrt(Phi(Y0))`, to be compared with the algebra's `V+`.
    pub fn reconstructed_vplus(&self) -> CMatrix {
        let sqrt_phi: Vec<f64> = self.phi.iter().map(|p| p.max(0.0).sqrt()).collect();
        self.yplus() * crate::linalg::diagonal(&sqrt_phi)
    }

    /// `<Y0>` on the representation's lowest level, `-+J`.
    pub fn lowest_weight(&self) -> f64 {
        -self.variant.sign() * self.j
    }
}

/// Coherent-state parameters; the generator is `xi = -r e^{i theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcsParams {
    pub r: f64,
    pub theta: f64,
}

impl GcsParams {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn xi(&self) -> Complex64 {
        -Complex64::from_polar(self.r, self.theta)
    }
}

/// `exp(xi Y+ - conj(xi) Y-) |v>` via the eigendecomposition of the
/// Hermitian generator `i (xi Y+ - conj(xi) Y-)`.
pub fn gcs_state(hp: &HpContext, v: usize, xi: Complex64) -> Result<CVector> {
    let d = hp.dim();
    if v >= d {
        return Err(Error::DimMismatch { expected: d, found: v });
    }
    if xi == Complex64::new(0.0, 0.0) {
        return Ok(basis_vector(d, v));
    }
    let i = Complex64::new(0.0, 1.0);
    let sub: Vec<Complex64> = hp.y_ladder.iter().map(|&w| i * xi * w).collect();
    let eig = hermitian_tridiagonal_eigen(&vec![0.0; d], &sub)?;
    // exp(G) = W exp(-i Lambda) W^dagger with G = -i K
    let mut state = CVector::zeros(d);
    for f in 0..d {
        let weight = eig.vectors[(v, f)].conj() * Complex64::from_polar(1.0, -eig.values[f]);
        state.axpy(weight, &eig.vectors.column(f), Complex64::new(1.0, 0.0));
    }
    if hp.variant == HpVariant::Su11 {
        let tail_len = d.div_ceil(10);
        let mass: f64 = state.iter().skip(d - tail_len).map(|z| z.norm_sqr()).sum();
        if mass > 1e-8 {
            return Err(Error::TruncationTail { mass });
        }
    }
    Ok(state)
}

/// `(Re<Y+>, Im<Y+>, <Y0>)` in a state.
pub fn bloch_vector(hp: &HpContext, state: &CVector) -> [f64; 3] {
    let yp = expectation(&hp.yplus(), state);
    let y0 = expectation(&hp.y0_matrix(), state).re;
    [yp.re, yp.im, y0]
}

/// Closed-form image of `|v; xi>` on the classical phase space.
pub fn orbit_point(hp: &HpContext, v: usize, gp: GcsParams) -> [f64; 3] {
    let sigma = hp.variant.sign();
    let v = v as f64;
    let two_r = 2.0 * gp.r;
    let transverse = -(hp.j - sigma * v) * hp.variant.sfun(two_r);
    let t = Complex64::from_polar(transverse, -gp.theta);
    [t.re, t.im, (v - sigma * hp.j) * hp.variant.cfun(two_r)]
}

/// Direct coherent-state expectation of the sector Hamiltonian and the
/// explicit sum with `|S_fv S_{f+1,v}|` weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqEnergy {
    pub value: f64,
    pub explicit_sum: f64,
    /// `|value - explicit_sum|`.
    pub diagnostic: f64,
}

pub fn energy_cq(hp: &HpContext, v: usize, gp: GcsParams) -> Result<CqEnergy> {
    let state = gcs_state(hp, v, gp.xi())?;
    let value = expectation(&hp.ops.h, &state).re;

    let sigma = hp.variant.sign();
    let poly = StructurePolynomial::for_sector(&hp.sector, &hp.params);
    let coupling = 2.0 * (hp.params.g * Complex64::from_polar(1.0, -gp.theta)).re;
    let sum: f64 = (0..hp.dim().saturating_sub(1))
        .map(|f| state[f].norm() * state[f + 1].norm() * poly.at_level(f as i64 + 1).max(0.0).sqrt())
        .sum();
    let explicit_sum = hp.c_tilde + hp.params.a() * (v as f64 - sigma * hp.j) * hp.variant.cfun(2.0 * gp.r) - coupling * sum;
    Ok(CqEnergy { value, explicit_sum, diagnostic: (value - explicit_sum).abs() })
}

/// Coefficients of `H^cmf(r) = C~ + A c(2r) + B s(2r) sqrt(Phi(K c(2r)))` at fixed `theta`.
fn cmf_coefficients(hp: &HpContext, v: usize, theta: f64) -> (f64, f64, f64) {
    let sigma = hp.variant.sign();
    let v = v as f64;
    let k = v - sigma * hp.j;
    let coupling = 2.0 * (hp.params.g * Complex64::from_polar(1.0, -theta)).re;
    (hp.params.a() * k, -coupling * (hp.j - sigma * v), k)
}

/// Mean-field functional: the Hamiltonian evaluated at `<Y>`.
pub fn energy_cmf(hp: &HpContext, v: usize, gp: GcsParams) -> Result<f64> {
    let (a_coef, b_coef, k) = cmf_coefficients(hp, v, gp.theta);
    let two_r = 2.0 * gp.r;
    let root = hp.phi_fn.sqrt(k * hp.variant.cfun(two_r))?;
    Ok(hp.c_tilde + a_coef * hp.variant.cfun(two_r) + b_coef * hp.variant.sfun(two_r) * root)
}

/// `d H^cmf / dr`, or `None` where the mean-field factor is out of its domain.
fn cmf_slope(hp: &HpContext, v: usize, theta: f64, r: f64) -> Option<f64> {
    let (a_coef, b_coef, k) = cmf_coefficients(hp, v, theta);
    let var = hp.variant;
    let x = 2.0 * r;
    let u = k * var.cfun(x);
    let root = hp.phi_fn.sqrt(u).ok()?;
    let mut slope = 2.0 * a_coef * var.dcfun(x) + 2.0 * b_coef * var.dsfun(x) * root;
    if b_coef != 0.0 && k != 0.0 {
        if root <= 0.0 {
            return None;
        }
        let droot = hp.phi_fn.derivative(u) / (2.0 * root);
        slope += 2.0 * b_coef * var.sfun(x) * droot * k * var.dcfun(x);
    }
    slope.is_finite().then_some(slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryKind {
    Minimum,
    Maximum,
    Saddle,
}

impl StationaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StationaryKind::Minimum => "min",
            StationaryKind::Maximum => "max",
            StationaryKind::Saddle => "saddle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    pub r0: f64,
    pub theta0: f64,
    pub e_cmf: f64,
    pub kind: StationaryKind,
    /// `r` after polishing on `H^cq`, when the coherent state is representable.
    pub r_cq: Option<f64>,
    pub e_cq: Option<f64>,
}

fn bisect(f: impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let mut sign_lo = flo.signum();
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        match f(mid) {
            Some(fm) if fm == 0.0 => return mid,
            Some(fm) if fm.signum() == sign_lo => {
                lo = mid;
                sign_lo = fm.signum();
            }
            Some(_) => hi = mid,
            None => break,
        }
    }
    0.5 * (lo + hi)
}

fn golden_section(f: impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, maximize: bool) -> Option<(f64, f64)> {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64| f(x).map(|y| sign * y);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (g(x1)?, g(x2)?);
    while hi - lo > 1e-10 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = g(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = g(x2)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Some((x, sign * g(x)?))
}

/// Stationary points of `H^cmf` for level `v`.
///
/// `theta0` is fixed analytically at `arg g` and `arg g + pi`; for each, the
/// slope in `r` is sign-scanned on a grid over `(0, r_max]` and every bracket
/// refined by bisection. A functional constant in `r` yields no points.
pub fn stationary_points(hp: &HpContext, v: usize) -> Result<Vec<StationaryPoint>> {
    stationary_points_in(hp, v, hp.variant.r_max(), SCAN_POINTS)
}

/// As [`stationary_points`] with an explicit scan range and grid size.
pub fn stationary_points_in(hp: &HpContext, v: usize, r_max: f64, grid: usize) -> Result<Vec<StationaryPoint>> {
    if !(r_max > 0.0 && r_max.is_finite()) || grid < 2 {
        return Err(Error::InvalidParams(format!("scan needs r_max > 0 and grid >= 2, got {r_max}, {grid}")));
    }
    if v >= hp.dim() {
        return Err(Error::DimMismatch { expected: hp.dim(), found: v });
    }
    let arg = hp.params.g.arg();
    let mut out = Vec::new();
    for theta0 in [arg, arg + PI] {
        let (a_coef, b_coef, _) = cmf_coefficients(hp, v, theta0);
        let grid: Vec<f64> = (1..=grid).map(|i| r_max * i as f64 / grid as f64).collect();
        let slopes: Vec<Option<f64>> = grid.iter().map(|&r| cmf_slope(hp, v, theta0, r)).collect();
        let flat_tol = 1e-14 * (1.0 + hp.c_tilde.abs() + a_coef.abs() + b_coef.abs());
        if slopes.iter().all(|s| s.is_none_or(|x| x.abs() <= flat_tol)) {
            continue;
        }
        let slope = |r: f64| cmf_slope(hp, v, theta0, r);
        let mut roots: Vec<f64> = Vec::new();
        for i in 0..grid.len() {
            let Some(fi) = slopes[i] else { continue };
            if fi == 0.0 {
                roots.push(grid[i]);
                continue;
            }
            if let Some(Some(fj)) = slopes.get(i + 1) {
                if *fj != 0.0 && fi.signum() != fj.signum() {
                    roots.push(bisect(slope, grid[i], grid[i + 1], fi));
                }
            }
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

        for r0 in roots {
            let gp = GcsParams::new(r0, theta0);
            let e_cmf = energy_cmf(hp, v, gp)?;
            let h = 1e-4;
            let at = |r: f64, t: f64| energy_cmf(hp, v, GcsParams::new(r, t)).ok();
            let kind = match (at(r0 + h, theta0), at(r0 - h, theta0), at(r0, theta0 + h), at(r0, theta0 - h)) {
                (Some(rp), Some(rm), Some(tp), Some(tm)) => {
                    let h_rr = (rp - 2.0 * e_cmf + rm) / (h * h);
                    let h_tt = (tp - 2.0 * e_cmf + tm) / (h * h);
                    classify(h_rr, h_tt)
                }
                _ => StationaryKind::Saddle,
            };
            let maximize = match kind {
                StationaryKind::Minimum => false,
                StationaryKind::Maximum => true,
                StationaryKind::Saddle => {
                    let rp = at(r0 + h, theta0).unwrap_or(e_cmf);
                    let rm = at(r0 - h, theta0).unwrap_or(e_cmf);
                    rp + rm - 2.0 * e_cmf < 0.0
                }
            };
            let cq = |r: f64| energy_cq(hp, v, GcsParams::new(r, theta0)).ok().map(|e| e.value);
            let lo = (r0 - POLISH_WINDOW).max(0.0);
            let hi = r0 + POLISH_WINDOW;
            let polished = golden_section(cq, lo, hi, maximize);
            out.push(StationaryPoint {
                r0,
                theta0,
                e_cmf,
                kind,
                r_cq: polished.map(|p| p.0),
                e_cq: polished.map(|p| p.1),
            });
        }
    }
    Ok(out)
}

fn classify(h_rr: f64, h_tt: f64) -> StationaryKind {
    if h_rr > 0.0 && h_tt > 0.0 {
        StationaryKind::Minimum
    } else if h_rr < 0.0 && h_tt < 0.0 {
        StationaryKind::Maximum
    } else {
        StationaryKind::Saddle
    }
}

/// Classical vector `y = (y1, y2, y0)` with the variant's metric sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub y: [f64; 3],
    pub sigma: f64,
}

impl BlochState {
    pub fn new(y: [f64; 3], variant: HpVariant) -> Self {
        Self { y, sigma: variant.sign() }
    }

    /// Image of the coherent state `|v; xi(r, theta)>`, taken from its expectations.
    pub fn from_gcs(hp: &HpContext, v: usize, gp: GcsParams) -> Result<Self> {
        let state = gcs_state(hp, v, gp.xi())?;
        Ok(Self::new(bloch_vector(hp, &state), hp.variant))
    }

    /// `C = +-y0^2 + y1^2 + y2^2`.
    pub fn casimir(&self) -> f64 {
        let [y1, y2, y0] = self.y;
        self.sigma * y0 * y0 + y1 * y1 + y2 * y2
    }
}

/// Mean-field Hamiltonian `C~ + a y0 + 2 Re[g (y1 + i y2)] sqrt(Phi(y0))`.
pub fn bloch_energy(state: &BlochState, hp: &HpContext) -> Result<f64> {
    let [y1, y2, y0] = state.y;
    let g = hp.params.g;
    let root = hp.phi_fn.sqrt(y0)?;
    Ok(hp.c_tilde + hp.params.a() * y0 + 2.0 * (g.re * y1 - g.im * y2) * root)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Gradient of the mean-field Hamiltonian; `d sqrt(Phi)/dy0` by central difference.
pub fn bloch_energy_gradient(state: &BlochState, hp: &HpContext) -> Result<[f64; 3]> {
    let [y1, y2, y0] = state.y;
    let g = hp.params.g;
    let root = hp.phi_fn.sqrt(y0)?;
    let h = SQRT_PHI_STEP;
    let droot = (hp.phi_fn.sqrt(y0 + h)? - hp.phi_fn.sqrt(y0 - h)?) / (2.0 * h);
    Ok([2.0 * g.re * root, -2.0 * g.im * root, hp.params.a() + 2.0 * (g.re * y1 - g.im * y2) * droot])
}

/// `dy/dt = (1/2) grad H x grad C`.
pub fn bloch_rhs(state: &BlochState, hp: &HpContext) -> Result<[f64; 3]> {
    let grad_h = bloch_energy_gradient(state, hp)?;
    let [y1, y2, y0] = state.y;
    let grad_c = [2.0 * y1, 2.0 * y2, 2.0 * state.sigma * y0];
    let x = cross(grad_h, grad_c);
    Ok([0.5 * x[0], 0.5 * x[1], 0.5 * x[2]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryStatus {
    Complete,
    /// The mean-field factor went negative; the trajectory stops at `t`.
    PhiNegative { t: f64 },
}

#[derive(Debug, Clone)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 3]>,
    pub casimir: Vec<f64>,
    pub energy: Vec<f64>,
    pub status: TrajectoryStatus,
}

impl BlochTrajectory {
    pub fn casimir_drift(&self) -> f64 {
        let c0 = self.casimir[0];
        self.casimir.iter().map(|c| (c - c0).abs()).fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }
}

/// Fixed-step classic RK4 on the Bloch equations over `[0, t_end]`.
pub fn integrate_bloch(start: &BlochState, hp: &HpContext, t_end: f64, dt: f64) -> Result<BlochTrajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParams(format!("need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut traj = BlochTrajectory {
        times: vec![0.0],
        states: vec![start.y],
        casimir: vec![start.casimir()],
        energy: vec![bloch_energy(start, hp)?],
        status: TrajectoryStatus::Complete,
    };
    let sigma = start.sigma;
    let at = |y: [f64; 3]| BlochState { y, sigma };
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let mut y = start.y;
    for step in 1..=steps {
        let advance = || -> Result<([f64; 3], f64)> {
            let k1 = bloch_rhs(&at(y), hp)?;
            let k2 = bloch_rhs(&at(add(y, k1, 0.5 * h)), hp)?;
            let k3 = bloch_rhs(&at(add(y, k2, 0.5 * h)), hp)?;
            let k4 = bloch_rhs(&at(add(y, k3, h)), hp)?;
            let next = [
                y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            ];
            let energy = bloch_energy(&at(next), hp)?;
            Ok((next, energy))
        };
        let t = step as f64 * h;
        match advance() {
            Ok((next, energy)) => {
                y = next;
                traj.times.push(t);
                traj.states.push(y);
                traj.casimir.push(at(y).casimir());
                traj.energy.push(energy);
            }
            Err(Error::PhiNegative { .. }) => {
                traj.status = TrajectoryStatus::PhiNegative { t };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use std::f64::consts::FRAC_PI_4;

    fn params(m: u32, n: u32, w0: f64, w1: f64, g: Complex64) -> ModelParams {
        ModelParams::new(m, n, w0, w1, g).unwrap()
    }

    fn worked() -> HpContext {
        let p = params(1, 1, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let sec = Sector::new(&p, 0, 2, None).unwrap();
        build_hp(&sec, &p, HpVariant::Su2, None).unwrap()
    }

    #[test]
    fn sl2_case_has_unit_phi() {
        let hp = worked();
        assert_eq!(hp.j, 1.0);
        for f in 0..2 {
            assert!((hp.phi[f] - 1.0).abs() < 1e-15);
        }
        assert_eq!(hp.phi[2], 0.0);
        for u in [-0.9, -0.3, 0.0, 0.5, 0.99, 1.0] {
            assert!((hp.phi_fn.eval(u) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn yplus_yminus_diagonal() {
        let p = params(1, 2, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let sec = Sector::new(&p, 1, 6, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        let yp = hp.yplus();
        let prod = &yp * yp.adjoint();
        for f in 0..hp.dim() {
            let expect = f as f64 * (2.0 * hp.j + 1.0 - f as f64);
            assert!((prod[(f, f)].re - expect).abs() < 1e-12);
        }
        assert!(max_abs(&(hp.reconstructed_vplus() - &hp.ops.vplus)) < 1e-10);
    }

    #[test]
    fn phi_function_matches_level_table() {
        for (m, n, kappa, s) in [(1, 2, 0, 7), (2, 3, 1, 9), (1, 1, 0, 5), (2, 1, 0, 6)] {
            let p = params(m, n, 1.0, 1.0, Complex64::new(0.5, 0.0));
            let sec = Sector::new(&p, kappa, s, None).unwrap();
            let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
            for f in 0..hp.dim() - 1 {
                let direct = hp.phi[f];
                assert!((hp.phi_fn.eval(hp.y0[f]) - direct).abs() < 1e-12 * direct.max(1.0), "m={m} n={n} f={f}");
            }
            // finite at the top level after root cancellation
            assert!(hp.phi_fn.eval(hp.j).is_finite());
        }
    }

    #[test]
    fn two_photon_su11_preset() {
        let p = params(0, 2, 1.0, 1.0, Complex64::new(0.1, 0.0));
        let sec = Sector::new(&p, 0, 0, Some(60)).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su11, Some(0.25)).unwrap();
        for f in 0..hp.dim() {
            assert!((hp.phi[f] - 4.0).abs() < 1e-12);
        }
        assert!((hp.phi_fn.eval(3.7) - 4.0).abs() < 1e-12);
        let yp = hp.yplus();
        let prod = &yp * yp.adjoint();
        for f in 0..hp.dim() {
            let expect = f as f64 * (f as f64 + 2.0 * hp.j - 1.0);
            assert!((prod[(f, f)].re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn variant_checks() {
        let p = params(1, 2, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let sec = Sector::new(&p, 0, 3, None).unwrap();
        assert!(build_hp(&sec, &p, HpVariant::Su11, None).is_err());
        assert!(build_hp(&sec, &p, HpVariant::Su2, Some(3.0)).is_err());
        let p0 = params(0, 2, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let sec0 = Sector::new(&p0, 0, 0, Some(20)).unwrap();
        assert!(build_hp(&sec0, &p0, HpVariant::Su2, None).is_err());
        assert!(build_hp(&sec0, &p0, HpVariant::Su11, Some(-1.0)).is_err());
    }

    #[test]
    fn gcs_identity_and_spin_half_rotation() {
        let p = params(1, 1, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let sec = Sector::new(&p, 0, 1, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        assert_eq!(gcs_state(&hp, 1, Complex64::new(0.0, 0.0)).unwrap(), basis_vector(2, 1));
        let r = 0.37;
        let st = gcs_state(&hp, 0, Complex64::new(r, 0.0)).unwrap();
        assert!((st[0] - c(r.cos())).norm() < 1e-14);
        assert!((st[1] - c(r.sin())).norm() < 1e-14);
    }

    #[test]
    fn gcs_lowest_weight_expectation() {
        let hp = worked();
        for (r, theta) in [(0.2, 0.0), (0.7, 1.3), (1.4, -2.0)] {
            let st = gcs_state(&hp, 0, GcsParams::new(r, theta).xi()).unwrap();
            assert!((st.norm() - 1.0).abs() < 1e-12);
            let y = bloch_vector(&hp, &st);
            assert!((y[2] + hp.j * (2.0 * r).cos()).abs() < 1e-12);
        }
        let p = params(0, 2, 1.0, 1.0, Complex64::new(0.1, 0.0));
        let sec = Sector::new(&p, 0, 0, Some(200)).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su11, Some(0.25)).unwrap();
        let r = 0.6;
        let st = gcs_state(&hp, 0, GcsParams::new(r, 0.4).xi()).unwrap();
        assert!((bloch_vector(&hp, &st)[2] - 0.25 * (2.0 * r).cosh()).abs() < 1e-10);
    }

    #[test]
    fn su11_truncation_tail_detected() {
        let p = params(0, 2, 1.0, 1.0, Complex64::new(0.1, 0.0));
        let sec = Sector::new(&p, 0, 0, Some(20)).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su11, Some(0.25)).unwrap();
        assert!(matches!(gcs_state(&hp, 0, Complex64::new(2.5, 0.0)), Err(Error::TruncationTail { .. })));
    }

    #[test]
    fn worked_energies() {
        let hp = worked();
        let gp = GcsParams::new(FRAC_PI_4, 0.0);
        let cq = energy_cq(&hp, 0, gp).unwrap();
        assert!((cq.value - 1.0).abs() < 1e-12);
        assert!(cq.diagnostic < 1e-12);
        assert!((energy_cmf(&hp, 0, gp).unwrap() - 1.0).abs() < 1e-12);
        for v in 0..3 {
            let e0 = energy_cq(&hp, v, GcsParams::new(0.0, 0.0)).unwrap().value;
            assert!((e0 - hp.ops.h[(v, v)].re).abs() < 1e-15);
            let mf = energy_cmf(&hp, v, GcsParams::new(0.0, 0.3)).unwrap();
            assert!((mf - (hp.c_tilde + hp.params.a() * (v as f64 - hp.j))).abs() < 1e-14);
        }
    }

    #[test]
    fn orbit_matches_expectations() {
        let p = params(1, 2, 0.9, 1.2, Complex64::new(0.4, 0.1));
        let sec = Sector::new(&p, 0, 6, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        for v in 0..hp.dim() {
            for (r, theta) in [(0.3, 0.2), (1.1, -1.7), (0.05, 3.0)] {
                let gp = GcsParams::new(r, theta);
                let numeric = BlochState::from_gcs(&hp, v, gp).unwrap().y;
                let closed = orbit_point(&hp, v, gp);
                for k in 0..3 {
                    assert!((numeric[k] - closed[k]).abs() < 1e-11, "v={v} r={r} k={k}");
                }
            }
        }
    }

    #[test]
    fn linear_case_functionals_agree_and_bound_spectrum() {
        let p = params(1, 1, 0.8, 1.3, Complex64::new(0.3, -0.2));
        let sec = Sector::new(&p, 0, 5, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        let spec = crate::spectra::diagonalize_sector(&hp.ops).unwrap();
        let (lo, hi) = (spec.eigenvalues[0], *spec.eigenvalues.last().unwrap());
        for v in 0..hp.dim() {
            for (r, theta) in [(0.2, 0.0), (0.9, 2.2), (1.4, -0.6)] {
                let gp = GcsParams::new(r, theta);
                let cq = energy_cq(&hp, v, gp).unwrap();
                let mf = energy_cmf(&hp, v, gp).unwrap();
                assert!((cq.value - mf).abs() < 1e-10 * (1.0 + mf.abs()));
                if v == 0 {
                    // moduli in the explicit sum only line up for the lowest weight
                    assert!(cq.diagnostic < 1e-10);
                }
                assert!(cq.value >= lo - 1e-10 && cq.value <= hi + 1e-10);
            }
        }
    }

    #[test]
    fn worked_stationary_point() {
        let hp = worked();
        let pts = stationary_points(&hp, 0).unwrap();
        let min = pts.iter().find(|p| p.kind == StationaryKind::Minimum).unwrap();
        assert!((min.r0 - FRAC_PI_4).abs() < 1e-10);
        assert_eq!(min.theta0, 0.0);
        assert!((min.e_cmf - 1.0).abs() < 1e-9);
        assert!((min.e_cq.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_functional_has_no_stationary_points() {
        let p = params(1, 1, 1.0, 1.0, Complex64::new(0.0, 0.0));
        let sec = Sector::new(&p, 0, 2, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        assert!(stationary_points(&hp, 0).unwrap().is_empty());
    }

    #[test]
    fn bloch_rhs_is_tangent_to_both_invariants() {
        let p = params(1, 2, 0.6, 1.1, Complex64::new(0.3, -0.4));
        let sec = Sector::new(&p, 1, 8, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        for y in [[0.3, -0.8, 1.1], [1.5, 0.2, -2.0], [-0.4, 0.9, 0.1]] {
            let st = BlochState::new(y, HpVariant::Su2);
            let rhs = bloch_rhs(&st, &hp).unwrap();
            let gc = [2.0 * y[0], 2.0 * y[1], 2.0 * y[2]];
            let gh = bloch_energy_gradient(&st, &hp).unwrap();
            let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            assert!(dot(gc, rhs).abs() < 1e-12);
            assert!(dot(gh, rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_case_is_precession() {
        // Phi = 1, a = 0, g real: y' = (2g, 0, 0) x y
        let hp = worked();
        let y = [0.2, -0.5, 0.7];
        let rhs = bloch_rhs(&BlochState::new(y, HpVariant::Su2), &hp).unwrap();
        let expect = cross([1.0, 0.0, 0.0], y);
        for k in 0..3 {
            assert!((rhs[k] - expect[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn pole_is_stationary_without_coupling() {
        let p = params(1, 1, 1.0, 1.3, Complex64::new(0.0, 0.0));
        let sec = Sector::new(&p, 0, 4, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        let start = BlochState::new([0.0, 0.0, -hp.j], HpVariant::Su2);
        let traj = integrate_bloch(&start, &hp, 2.0, 1e-2).unwrap();
        assert!(traj.states.iter().all(|y| *y == start.y));
    }

    #[test]
    fn phi_negative_truncates_trajectory() {
        let p = params(1, 2, 1.0, 1.0, Complex64::new(0.8, 0.0));
        let sec = Sector::new(&p, 0, 4, None).unwrap();
        let hp = build_hp(&sec, &p, HpVariant::Su2, None).unwrap();
        // far outside the sphere the mean-field argument leaves Phi's domain
        let u_bad = (-60..60).map(|k| k as f64 * 0.25).find(|&u| hp.phi_fn.eval(u) < -1.0).unwrap();
        let start = BlochState::new([0.0, 0.0, u_bad], HpVariant::Su2);
        assert!(matches!(bloch_rhs(&start, &hp), Err(Error::PhiNegative { .. })));
        assert!(integrate_bloch(&start, &hp, 1.0, 0.1).is_err());
    }
}
