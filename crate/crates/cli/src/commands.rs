//! Subcommand bodies. Each returns a table plus the exit status to report
//! after the table has been written.

use polylie::algebra::{build_sector_ops, enumerate_sectors};
use polylie::fock::{build_fock, Modes, FOCK_CAP};
use polylie::linalg::{basis_vector, CVector};
use polylie::quasiclassical::{
    build_hp, gcs_state, integrate_bloch, orbit_point, stationary_points_in, BlochState, GcsParams, HpContext,
    TrajectoryStatus,
};
use polylie::spectra::{diagonalize_sector, evolve, recurrence_residual};
use polylie::verify::{partition_mismatch, run_verify, Bound, Suite, VerifyOptions};
use polylie::{Error, Sector, SectorOperators};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{Cell, Table};

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SECTOR: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_INITIAL: i32 = 5;
pub const EXIT_DOMAIN: i32 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) | Error::InvalidMap(_) => EXIT_CONFIG,
            Error::DimCapExceeded { .. } | Error::CapExceeded { .. } => EXIT_CAP,
            Error::NotNormalized { .. } | Error::DimMismatch { .. } => EXIT_INITIAL,
            Error::PhiNegative { .. } | Error::NegativePhi { .. } | Error::TruncationTail { .. } => EXIT_DOMAIN,
            _ => EXIT_INTERNAL,
        };
        CliError::new(code, e.to_string())
    }
}

pub type CmdResult = Result<Outcome, CliError>;

pub struct Outcome {
    pub table: Table,
    pub exit: i32,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, exit: 0 }
    }
}

/// Sector address shared by the per-sector commands.
#[derive(Debug, Clone, Copy)]
pub struct SectorArgs {
    pub kappa: u32,
    pub s: Option<u32>,
    pub v: usize,
}

fn resolve_sector(cfg: &RunConfig, args: &SectorArgs) -> Result<(Sector, SectorOperators), CliError> {
    let params = cfg.params().map_err(|e| CliError::new(EXIT_CONFIG, e.0))?;
    let s = args.s.ok_or_else(|| CliError::new(EXIT_CONFIG, "missing --s"))?;
    if args.kappa >= params.n() {
        return Err(CliError::new(EXIT_SECTOR, format!("no sector with kappa = {} for n = {}", args.kappa, params.n())));
    }
    let sector = Sector::new(&params, args.kappa, s, Some(cfg.truncation.v_max))?;
    if sector.levels() > cfg.truncation.dim_cap {
        return Err(CliError::new(
            EXIT_CAP,
            format!("sector {sector} has {} levels, above dim_cap {}", sector.levels(), cfg.truncation.dim_cap),
        ));
    }
    let ops = build_sector_ops(&sector, &params, None)?;
    Ok((sector, ops))
}

fn resolve_hp(cfg: &RunConfig, sector: &Sector) -> Result<HpContext, CliError> {
    let params = cfg.params().map_err(|e| CliError::new(EXIT_CONFIG, e.0))?;
    Ok(build_hp(sector, &params, cfg.variant_for(sector), cfg.quasiclassical.j)?)
}

fn parse_pair(text: &str) -> Option<(f64, f64)> {
    let (a, b) = text.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn sectors(cfg: &RunConfig, nmax: u32) -> CmdResult {
    let params = cfg.params().map_err(|e| CliError::new(EXIT_CONFIG, e.0))?;
    let list = enumerate_sectors(&params, nmax, Some(cfg.truncation.v_max))?;
    let fock_dim = (nmax as usize + 1) * (nmax as usize + 2) / 2;
    if fock_dim > FOCK_CAP {
        return Err(CliError::new(EXIT_CAP, format!("Fock basis of {fock_dim} states exceeds {FOCK_CAP}")));
    }
    let fock = build_fock(nmax, Modes::Two)?;
    let inside: Vec<usize> = list
        .par_iter()
        .map(|s| {
            (0..s.levels())
                .filter(|&v| {
                    let (n0, n1) = s.chain_state(&params, v);
                    fock.index_of(n0, n1).is_some()
                })
                .count()
        })
        .collect();

    let mut table = Table::new(["kappa", "s", "l0", "l1", "dim", "compact", "chain_states_in_cutoff"]);
    for (s, count) in list.iter().zip(&inside) {
        table.push(vec![
            s.kappa.into(),
            s.s.into(),
            s.l0.to_string().into(),
            s.l1.to_string().into(),
            s.levels().into(),
            s.compact.into(),
            (*count).into(),
        ]);
    }
    let mismatch = partition_mismatch(&params, &fock)?;
    let total: usize = inside.iter().sum();
    let verdict = if mismatch == 0 { "EQUAL" } else { "MISMATCH" };
    table.note("partition", format!("{verdict} chain_states={total} fock_states={}", fock.dim()));
    Ok(Outcome::ok(table))
}

pub fn spectrum(cfg: &RunConfig, args: &SectorArgs) -> CmdResult {
    let (sector, ops) = resolve_sector(cfg, args)?;
    let params = cfg.params().map_err(|e| CliError::new(EXIT_CONFIG, e.0))?;
    let res = diagonalize_sector(&ops)?;
    let d = res.dim();
    let mut columns = vec!["f".to_string(), "energy".to_string()];
    for v in 0..d {
        columns.push(format!("q{v}_re"));
        columns.push(format!("q{v}_im"));
    }
    let mut table = Table::new(columns);
    for f in 0..d {
        let mut row: Vec<Cell> = vec![f.into(), res.eigenvalues[f].into()];
        for v in 0..d {
            let z = res.eigenvectors[(v, f)];
            row.push(z.re.into());
            row.push(z.im.into());
        }
        table.push(row);
    }
    table.note("sector", sector.to_string());
    table.note("eigen_residual", format!("{:e}", res.eigen_residual(&ops.h)));
    table.note("recurrence_residual", format!("{:e}", recurrence_residual(&res, &sector, &params)));
    let vectors: Vec<Vec<[f64; 2]>> =
        (0..d).map(|v| (0..d).map(|f| [res.eigenvectors[(v, f)].re, res.eigenvectors[(v, f)].im]).collect()).collect();
    table.extra.insert("eigenvalues".into(), json!(res.eigenvalues));
    table.extra.insert("eigenvectors".into(), json!(vectors));
    Ok(Outcome::ok(table))
}

/// Parses `lowest`, `basis:V` or `gcs:R,THETA` into a normalized sector state.
pub fn initial_state(cfg: &RunConfig, sector: &Sector, level: usize, spec: &str) -> Result<CVector, CliError> {
    let d = sector.levels();
    let bad = |msg: String| CliError::new(EXIT_INITIAL, msg);
    if spec == "lowest" {
        return Ok(basis_vector(d, 0));
    }
    if let Some(rest) = spec.strip_prefix("basis:") {
        let v: usize = rest.trim().parse().map_err(|_| bad(format!("bad basis level {rest:?}")))?;
        if v >= d {
            return Err(bad(format!("basis level {v} outside 0..{d}")));
        }
        return Ok(basis_vector(d, v));
    }
    if let Some(rest) = spec.strip_prefix("gcs:") {
        let (r, theta) = parse_pair(rest).ok_or_else(|| bad(format!("bad coherent-state parameters {rest:?}")))?;
        if level >= d {
            return Err(bad(format!("level {level} outside 0..{d}")));
        }
        let hp = resolve_hp(cfg, sector)?;
        return gcs_state(&hp, level, GcsParams::new(r, theta).xi()).map_err(|e| bad(e.to_string()));
    }
    Err(bad(format!("unknown initial state {spec:?}; expected lowest, basis:V or gcs:R,THETA")))
}

pub fn evolve_cmd(cfg: &RunConfig, args: &SectorArgs, initial: &str, steps: usize) -> CmdResult {
    let (sector, ops) = resolve_sector(cfg, args)?;
    let psi0 = initial_state(cfg, &sector, args.v, initial)?;
    let res = diagonalize_sector(&ops)?;
    let t_end = cfg.quasiclassical.t_end;
    let times: Vec<f64> = if t_end == 0.0 || steps == 0 {
        vec![0.0]
    } else {
        (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect()
    };
    let ev = evolve(&ops, &res, &psi0, &times)?;
    let mut table = Table::new(["t", "v0", "vplus_re", "vplus_im", "energy", "survival"]);
    for k in 0..times.len() {
        table.push(vec![
            times[k].into(),
            ev.v0[k].into(),
            ev.vplus[k].re.into(),
            ev.vplus[k].im.into(),
            ev.energy[k].into(),
            ev.survival[k].into(),
        ]);
    }
    table.note("sector", sector.to_string());
    table.note("initial", initial);
    Ok(Outcome::ok(table))
}

pub fn meanfield(cfg: &RunConfig, args: &SectorArgs) -> CmdResult {
    let (sector, _) = resolve_sector(cfg, args)?;
    let hp = resolve_hp(cfg, &sector)?;
    if args.v >= hp.dim() {
        return Err(CliError::new(EXIT_SECTOR, format!("level {} outside 0..{}", args.v, hp.dim())));
    }
    let q = &cfg.quasiclassical;
    let r_max = q.r_max.unwrap_or(hp.variant.r_max());
    let points = stationary_points_in(&hp, args.v, r_max, q.grid)?;
    let e_min = diagonalize_sector(&hp.ops)?.ground_energy();
    let mut table = Table::new(["r0", "theta0", "e_cmf", "r_cq", "e_cq", "kind", "e_min", "gap"]);
    for p in &points {
        let e_cq = p.e_cq.unwrap_or(f64::NAN);
        table.push(vec![
            p.r0.into(),
            p.theta0.into(),
            p.e_cmf.into(),
            p.r_cq.unwrap_or(f64::NAN).into(),
            e_cq.into(),
            p.kind.as_str().into(),
            e_min.into(),
            (e_cq - e_min).into(),
        ]);
    }
    table.note("sector", sector.to_string());
    table.note("level", args.v.to_string());
    table.note("J", hp.j.to_string());
    table.note("e_min", e_min.to_string());
    table.note("stationary_points", points.len().to_string());
    Ok(Outcome::ok(table))
}

/// Parses `pole`, `gcs:R,THETA` or `y:Y1,Y2,Y0` into a Bloch start state.
pub fn bloch_start(hp: &HpContext, level: usize, spec: &str) -> Result<BlochState, CliError> {
    let bad = |msg: String| CliError::new(EXIT_INITIAL, msg);
    if level >= hp.dim() {
        return Err(bad(format!("level {level} outside 0..{}", hp.dim())));
    }
    if spec == "pole" {
        return Ok(BlochState::new(orbit_point(hp, level, GcsParams::new(0.0, 0.0)), hp.variant));
    }
    if let Some(rest) = spec.strip_prefix("gcs:") {
        let (r, theta) = parse_pair(rest).ok_or_else(|| bad(format!("bad coherent-state parameters {rest:?}")))?;
        return BlochState::from_gcs(hp, level, GcsParams::new(r, theta)).map_err(|e| bad(e.to_string()));
    }
    if let Some(rest) = spec.strip_prefix("y:") {
        let parts: Vec<f64> = rest.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()
            .map_err(|_| bad(format!("bad Bloch vector {rest:?}")))?;
        if let [y1, y2, y0] = parts[..] {
            return Ok(BlochState::new([y1, y2, y0], hp.variant));
        }
        return Err(bad(format!("Bloch vector needs three components, got {}", parts.len())));
    }
    Err(bad(format!("unknown start {spec:?}; expected pole, gcs:R,THETA or y:Y1,Y2,Y0")))
}

pub fn bloch(cfg: &RunConfig, args: &SectorArgs, start: &str, every: usize) -> CmdResult {
    let (sector, _) = resolve_sector(cfg, args)?;
    let hp = resolve_hp(cfg, &sector)?;
    let state = bloch_start(&hp, args.v, start)?;
    let q = &cfg.quasiclassical;
    let traj = integrate_bloch(&state, &hp, q.t_end, q.dt).map_err(|e| match e {
        Error::PhiNegative { .. } => CliError::new(EXIT_INITIAL, format!("start state outside the mean-field domain: {e}")),
        other => other.into(),
    })?;
    let mut table = Table::new(["t", "y1", "y2", "y0", "casimir", "energy"]);
    let every = every.max(1);
    let last = traj.times.len() - 1;
    for k in (0..=last).filter(|&k| k % every == 0 || k == last) {
        let y = traj.states[k];
        table.push(vec![traj.times[k].into(), y[0].into(), y[1].into(), y[2].into(), traj.casimir[k].into(), traj.energy[k].into()]);
    }
    table.note("sector", sector.to_string());
    table.note("casimir_drift", format!("{:e}", traj.casimir_drift()));
    table.note("energy_drift", format!("{:e}", traj.energy_drift()));
    let exit = match traj.status {
        TrajectoryStatus::Complete => {
            table.note("status", "complete");
            0
        }
        TrajectoryStatus::PhiNegative { t } => {
            table.note("status", format!("truncated: mean-field factor negative at t={t}"));
            EXIT_DOMAIN
        }
    };
    Ok(Outcome { table, exit })
}

pub fn verify_cmd(suite: &str, perturbation: f64) -> CmdResult {
    let suite: Suite = suite.parse().map_err(|e: Error| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let opts = VerifyOptions { psi_perturbation: perturbation, ..VerifyOptions::default() };
    let report = run_verify(suite, &opts)?;
    let mut table = Table::new(["suite", "check", "value", "bound", "relation", "result"]);
    for c in &report.checks {
        let rel = match c.kind {
            Bound::Below => "<",
            Bound::Above => ">",
        };
        table.push(vec![
            c.suite.as_str().into(),
            c.name.clone().into(),
            c.value.into(),
            c.bound.into(),
            rel.into(),
            if c.pass { "PASS" } else { "FAIL" }.into(),
        ]);
    }
    let pass = report.all_pass();
    table.note("overall", if pass { "PASS" } else { "FAIL" });
    Ok(Outcome { table, exit: if pass { 0 } else { EXIT_INTERNAL } })
}
