//! Identity ledger: oracle equivalence, closed-algebra, parastatistics,
//! canonical-boson and Holstein-Primakoff checks over a fixed set of models.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::{
    build_sector_ops_with, casimir_residual, commutation_residuals, enumerate_sectors, psi_scale,
    ModelParams, Sector, StructurePolynomial,
};
use crate::error::{Error, Result};
use crate::fock::{
    build_cluster_ops, build_fock, build_w, canonical_residual, fock_identity_residuals, number_v, number_w,
    oracle_sector_ops, para_commutator_norm, para_relation_residual, sector_leakage, FockSpace, Modes,
    DEFAULT_ONE_MODE_CUTOFF, DEFAULT_TWO_MODE_CUTOFF,
};
use crate::linalg::{max_abs, norm_inf};
use crate::quasiclassical::{build_hp, HpVariant};
use crate::spectra::heisenberg_residuals;

/// Built-in `(m, n)` test set.
pub const TEST_SET: [(u32, u32); 6] = [(1, 1), (1, 2), (2, 1), (2, 3), (0, 2), (0, 3)];

/// Largest `s` whose sectors enter the per-sector checks on two-mode spaces.
pub const SECTOR_S_MAX: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    All,
    Algebra,
    Para,
    Boson,
    Hp,
}

impl Suite {
    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Algebra => "algebra",
            Suite::Para => "para",
            Suite::Boson => "boson",
            Suite::Hp => "hp",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "algebra" => Ok(Suite::Algebra),
            "para" => Ok(Suite::Para),
            "boson" => Ok(Suite::Boson),
            "hp" => Ok(Suite::Hp),
            other => Err(Error::InvalidParams(format!("unknown suite {other:?}"))),
        }
    }
}

/// Whether a check passes below or above its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: Bound,
    pub pass: bool,
}

impl Check {
    fn below(suite: Suite, name: String, value: f64, bound: f64) -> Self {
        Self { suite, name, value, bound, kind: Bound::Below, pass: value.is_finite() && value < bound }
    }

    fn above(suite: Suite, name: String, value: f64, bound: f64) -> Self {
        Self { suite, name, value, bound, kind: Bound::Above, pass: value.is_finite() && value > bound }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.kind {
            Bound::Below => "<",
            Bound::Above => ">",
        };
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<8} {:<40} {:.3e} {rel} {:.3e}", self.suite.as_str(), self.name, self.value, self.bound)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub two_mode_cutoff: u32,
    pub one_mode_cutoff: u32,
    /// Relative perturbation applied to the structure polynomial of the
    /// algebra-side matrices; nonzero values should make the ledger fail.
    pub psi_perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            two_mode_cutoff: DEFAULT_TWO_MODE_CUTOFF,
            one_mode_cutoff: DEFAULT_ONE_MODE_CUTOFF,
            psi_perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Coupling and frequencies used for every model of the test set.
pub fn test_params(m: u32, n: u32) -> ModelParams {
    ModelParams::new(m, n, 0.7, 1.3, Complex64::new(0.4, -0.3)).expect("valid test parameters")
}

pub fn run_verify(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut tasks: Vec<Box<dyn Fn() -> Result<Vec<Check>> + Send + Sync>> = Vec::new();
    if suite.includes(Suite::Algebra) {
        for (m, n) in TEST_SET {
            let opts = opts.clone();
            tasks.push(Box::new(move || algebra_checks(m, n, &opts)));
        }
    }
    if suite.includes(Suite::Para) {
        let cutoff = opts.one_mode_cutoff;
        tasks.push(Box::new(move || para_checks(cutoff)));
    }
    if suite.includes(Suite::Boson) {
        let cutoff = opts.one_mode_cutoff;
        tasks.push(Box::new(move || boson_checks(cutoff)));
    }
    if suite.includes(Suite::Hp) {
        for (m, n) in TEST_SET {
            let opts = opts.clone();
            tasks.push(Box::new(move || hp_checks(m, n, &opts)));
        }
    }
    let parts: Vec<Vec<Check>> = tasks.par_iter().map(|t| t()).collect::<Result<_>>()?;
    Ok(VerifyReport { checks: parts.into_iter().flatten().collect() })
}

fn fock_for(m: u32, opts: &VerifyOptions) -> Result<FockSpace> {
    if m == 0 {
        build_fock(opts.one_mode_cutoff, Modes::One)
    } else {
        build_fock(opts.two_mode_cutoff, Modes::Two)
    }
}

/// Sectors whose whole chain lies inside the Fock space; truncated sectors are
/// cut at the last chain state below the cutoff.
pub fn sectors_inside(params: &ModelParams, fock: &FockSpace) -> Result<Vec<Sector>> {
    let (m, n) = (params.m(), params.n());
    if m == 0 {
        return (0..n.min(fock.cutoff + 1))
            .map(|kappa| Sector::new(params, kappa, 0, Some(((fock.cutoff - kappa) / n) as usize)))
            .collect();
    }
    let all = enumerate_sectors(params, fock.cutoff, None)?;
    Ok(all
        .into_iter()
        .filter(|s| s.s <= SECTOR_S_MAX)
        .filter(|s| (0..s.levels()).all(|v| {
            let (n0, n1) = s.chain_state(params, v);
            fock.index_of(n0, n1).is_some()
        }))
        .collect())
}

fn algebra_checks(m: u32, n: u32, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let params = test_params(m, n);
    let fock = fock_for(m, opts)?;
    let cluster = build_cluster_ops(&fock, &params)?;
    let tag = format!("({m},{n})");
    let suite = Suite::Algebra;

    let (mut oracle, mut comm, mut casimir, mut heis) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for sector in sectors_inside(&params, &fock)? {
        let poly = StructurePolynomial::for_sector(&sector, &params).perturbed(opts.psi_perturbation);
        let ops = build_sector_ops_with(&sector, &params, None, poly)?;
        let reference = oracle_sector_ops(&cluster, &fock, &sector)?;
        let scale = psi_scale(&sector, &params, ops.dim).max(norm_inf(&reference.h));
        let diff = [
            max_abs(&(&ops.v0 - &reference.v0)),
            max_abs(&(&ops.vplus - &reference.vplus)),
            max_abs(&(&ops.vminus - &reference.vminus)),
            max_abs(&(&ops.h - &reference.h)),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        oracle = oracle.max(diff / scale);
        let psi = psi_scale(&sector, &params, ops.dim);
        comm = comm.max(commutation_residuals(&ops, &params).max() / psi);
        casimir = casimir.max(casimir_residual(&ops, &sector, &params) / psi);
        let (r0, rp, rm) = heisenberg_residuals(&ops, &params);
        heis = heis.max(r0.max(rp).max(rm) / norm_inf(&ops.h).max(1.0));
    }

    let fock_res = fock_identity_residuals(&cluster, &fock);
    let fock_worst = fock_res.bracket.max(fock_res.casimir).max(fock_res.invariance).max(fock_res.adjointness);

    let mut checks = vec![
        Check::below(suite, format!("{tag} oracle equivalence"), oracle, 1e-10),
        Check::below(suite, format!("{tag} commutation relations"), comm, 1e-9),
        Check::below(suite, format!("{tag} characteristic relation"), casimir, 1e-10),
        Check::below(suite, format!("{tag} heisenberg identities"), heis, 1e-9),
        Check::below(suite, format!("{tag} fock-space identities"), fock_worst / fock_res.scale, 1e-9),
        Check::below(suite, format!("{tag} sector leakage"), sector_leakage(&cluster, &fock), 1e-15),
    ];
    if m > 0 {
        checks.push(Check::below(suite, format!("{tag} partition mismatch"), partition_mismatch(&params, &fock)? as f64, 0.5));
    }
    Ok(checks)
}

/// Number of Fock states missed or hit twice by the enumerated chains.
pub fn partition_mismatch(params: &ModelParams, fock: &FockSpace) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut duplicates = 0usize;
    for sector in enumerate_sectors(params, fock.cutoff, None)? {
        for v in 0..sector.levels() {
            let (n0, n1) = sector.chain_state(params, v);
            if let Some(idx) = fock.index_of(n0, n1) {
                if !seen.insert(idx) {
                    duplicates += 1;
                }
            }
        }
    }
    Ok(duplicates + (fock.dim() - seen.len()))
}

fn para_checks(cutoff: u32) -> Result<Vec<Check>> {
    let fock = build_fock(cutoff, Modes::One)?;
    let mut checks = Vec::new();
    for n in [2u32, 3] {
        let residual = para_relation_residual(&fock, n)?;
        checks.push(Check::below(Suite::Para, format!("n={n} depth n+1 commutator"), residual, 1e-8));
        let depth_n = para_commutator_norm(&fock, n, n)?;
        checks.push(Check::above(Suite::Para, format!("n={n} depth n commutator"), depth_n, 1e-6));
    }
    Ok(checks)
}

fn boson_checks(cutoff: u32) -> Result<Vec<Check>> {
    let fock = build_fock(cutoff, Modes::One)?;
    let mut checks = Vec::new();
    let w = build_w(&fock, 2, 0)?;
    let ladder = (0..w.nrows() - 1).map(|v| (w[(v + 1, v)] - (v as f64 + 1.0).sqrt()).abs()).fold(0.0, f64::max);
    checks.push(Check::below(Suite::Boson, "n=2 kappa=0 W+ ladder".into(), ladder, 1e-10));
    for n in [2u32, 3] {
        for kappa in 0..n {
            let w = build_w(&fock, n, kappa)?;
            checks.push(Check::below(Suite::Boson, format!("n={n} kappa={kappa} [W,W+]-I"), canonical_residual(&w), 1e-9));
            let diff = number_w(&w).iter().zip(number_v(&fock, n, kappa)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            checks.push(Check::below(Suite::Boson, format!("n={n} kappa={kappa} N_W vs N_V"), diff, 1e-12));
        }
    }
    Ok(checks)
}

fn hp_checks(m: u32, n: u32, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let params = test_params(m, n);
    let fock = fock_for(m, opts)?;
    let tag = format!("({m},{n})");
    let variant = if m == 0 { HpVariant::Su11 } else { HpVariant::Su2 };
    let mut recon = 0.0f64;
    for sector in sectors_inside(&params, &fock)? {
        let poly = StructurePolynomial::for_sector(&sector, &params).perturbed(opts.psi_perturbation);
        let ops = build_sector_ops_with(&sector, &params, None, poly)?;
        let hp = build_hp(&sector, &params, variant, None)?;
        let scale = max_abs(&ops.vplus).max(1.0);
        recon = recon.max(max_abs(&(hp.reconstructed_vplus() - &ops.vplus)) / scale);
    }
    let mut checks = vec![Check::below(Suite::Hp, format!("{tag} Y+ sqrt(Phi(Y0)) = V+"), recon, 1e-10)];
    if (m, n) == (0, 2) {
        let sector = Sector::new(&params, 0, 0, Some(60))?;
        let hp = build_hp(&sector, &params, HpVariant::Su11, Some(0.25))?;
        let dev = hp.phi.iter().map(|p| (p - 4.0).abs()).fold(0.0, f64::max);
        checks.push(Check::below(Suite::Hp, "(0,2) J=1/4 constant Phi".into(), dev, 1e-12));
    }
    Ok(checks)
}
