mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, SectorArgs, EXIT_CONFIG};
use config::{Format, RunConfig, VariantChoice};

#[derive(Parser, Debug)]
#[command(name = "polylie", version, about = "Polynomial Lie algebra engine for multiphoton two-mode models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    m: Option<u32>,
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long = "g-re", global = true, allow_negative_numbers = true)]
    g_re: Option<f64>,
    #[arg(long = "g-im", global = true, allow_negative_numbers = true)]
    g_im: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    omega0: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    omega1: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    kappa: u32,
    #[arg(long, global = true)]
    s: Option<u32>,
    /// Level of the coherent state or mean-field functional.
    #[arg(long, global = true, default_value_t = 0)]
    v: usize,
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true, default_value_t = 200)]
    steps: usize,
    #[arg(long, global = true)]
    vmax: Option<usize>,
    #[arg(long = "j", global = true)]
    j: Option<f64>,
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantChoice>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List sectors reachable within a Fock cutoff and check the partition.
    Sectors {
        /// Cutoff on total quanta; defaults to `truncation.fock_total`.
        #[arg(long)]
        nmax: Option<u32>,
    },
    /// Eigenvalues and eigenvectors of one sector.
    Spectrum,
    /// Exact evolution of a sector state.
    Evolve {
        /// `lowest`, `basis:V` or `gcs:R,THETA` (level from --v).
        #[arg(long, default_value = "lowest")]
        initial: String,
    },
    /// Stationary points of the mean-field functional.
    Meanfield,
    /// Integrate the Bloch equations.
    Bloch {
        /// `pole`, `gcs:R,THETA` (level from --v) or `y:Y1,Y2,Y0`.
        #[arg(long, default_value = "pole", allow_hyphen_values = true)]
        start: String,
        /// Emit every k-th step.
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Run the identity ledger.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Relative perturbation of the structure polynomial (sensitivity probe).
        #[arg(long = "perturb-psi", hide = true, default_value_t = 0.0)]
        perturb_psi: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sectors { .. } => "sectors",
            Command::Spectrum => "spectrum",
            Command::Evolve { .. } => "evolve",
            Command::Meanfield => "meanfield",
            Command::Bloch { .. } => "bloch",
            Command::Verify { .. } => "verify",
        }
    }
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref()).map_err(|e| CliError::new(EXIT_CONFIG, e.0))?;
    let model = &mut cfg.model;
    if let Some(x) = common.m {
        model.m = x;
    }
    if let Some(x) = common.n {
        model.n = x;
    }
    if let Some(x) = common.g_re {
        model.g_re = x;
    }
    if let Some(x) = common.g_im {
        model.g_im = x;
    }
    if let Some(x) = common.omega0 {
        model.omega0 = x;
    }
    if let Some(x) = common.omega1 {
        model.omega1 = x;
    }
    if let Some(x) = common.vmax {
        cfg.truncation.v_max = x;
    }
    let q = &mut cfg.quasiclassical;
    if let Some(x) = common.t_end {
        q.t_end = x;
    }
    if let Some(x) = common.dt {
        q.dt = x;
    }
    if common.j.is_some() {
        q.j = common.j;
    }
    if let Some(x) = common.variant {
        q.variant = x;
    }
    if let Some(x) = common.format {
        cfg.output.format = x;
    }
    if common.out.is_some() {
        cfg.output.path = common.out.clone();
    }
    cfg.validate().map_err(|e| CliError::new(EXIT_CONFIG, e.0))?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("POLYLIE_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::new(EXIT_CONFIG, format!("POLYLIE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::new(commands::EXIT_INTERNAL, e.to_string()))
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let cfg = resolve_config(&cli.common)?;
    let c = &cli.common;
    let args = SectorArgs { kappa: c.kappa, s: c.s, v: c.v };
    let outcome = match &cli.command {
        Command::Sectors { nmax } => commands::sectors(&cfg, nmax.unwrap_or(cfg.truncation.fock_total))?,
        Command::Spectrum => commands::spectrum(&cfg, &args)?,
        Command::Evolve { initial } => commands::evolve_cmd(&cfg, &args, initial, c.steps)?,
        Command::Meanfield => commands::meanfield(&cfg, &args)?,
        Command::Bloch { start, every } => commands::bloch(&cfg, &args, start, *every)?,
        Command::Verify { suite, perturb_psi } => commands::verify_cmd(suite, *perturb_psi)?,
    };
    let text = output::render(&outcome.table, cli.command.name(), &cfg);
    output::emit(&text, &cfg).map_err(|e| CliError::new(commands::EXIT_INTERNAL, format!("writing output: {e}")))?;
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("polylie: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
