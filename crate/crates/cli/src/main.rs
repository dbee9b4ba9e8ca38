//! `solspace` — constraint analysis and covariant brackets for the built-in
//! lattice field theories.
//!
//! ```text
//! solspace analyze --config cfg.json [--out DIR] [--format json|csv] [--seed N] [--stable-output]
//! solspace bracket --config cfg.json ...
//! solspace evolve  --config cfg.json ...
//! solspace verify  --config cfg.json ...
//! ```
//!
//! Exit codes: 0 success, 1 validation error, 2 invariant failure,
//! 3 internal error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use solspace::engine::write_bracket_csv;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Invariant(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("serialization: {e}"))
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Invariant(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(
    name = "solspace",
    version = commands::VERSION,
    about = "Pre-symplectic constraint analysis and covariant Poisson brackets on lattice slices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Parser)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats (overrides the config; may repeat).
    #[arg(long, value_enum)]
    format: Vec<Format>,
    /// Seed for randomized checks (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Zero wall-clock timings for byte-stable reports.
    #[arg(long)]
    stable_output: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the slice system and run the constraint algorithm.
    Analyze(CommonArgs),
    /// Evaluate all pairwise brackets of the configured observables.
    Bracket(CommonArgs),
    /// Evolve a seeded Cauchy datum and dump the trajectory section.
    Evolve(CommonArgs),
    /// Run the deterministic invariant suite.
    Verify(CommonArgs),
}

fn load_config(args: &CommonArgs) -> Result<(RunConfig, String), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Validation(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    // Hash the configuration as authored; runtime overrides (--out, --seed,
    // --format) do not change its identity.
    let hash = cfg.hash();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    if !args.format.is_empty() {
        cfg.output.formats = args
            .format
            .iter()
            .map(|f| match f {
                Format::Json => "json".to_string(),
                Format::Csv => "csv".to_string(),
            })
            .collect();
    }
    Ok((cfg, hash))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (args, name) = match &cli.command {
        Command::Analyze(a) => (a, "analyze"),
        Command::Bracket(a) => (a, "bracket"),
        Command::Evolve(a) => (a, "evolve"),
        Command::Verify(a) => (a, "verify"),
    };
    let (cfg, config_hash) = load_config(args)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    let want_json = cfg.output.formats.iter().any(|f| f == "json");
    let want_csv = cfg.output.formats.iter().any(|f| f == "csv");

    let mut report = match name {
        "analyze" => commands::cmd_analyze(&cfg)?,
        "bracket" => commands::cmd_bracket(&cfg)?,
        "evolve" => commands::cmd_evolve(&cfg, &out_dir, want_json)?,
        "verify" => commands::cmd_verify(&cfg)?,
        _ => unreachable!(),
    };
    report.config_hash = config_hash;
    if args.stable_output {
        report.stabilize();
    }

    std::fs::create_dir_all(&out_dir)?;
    if want_json {
        std::fs::write(out_dir.join("report.json"), report.to_json())?;
    }
    if want_csv {
        if let Some(rows) = &report.brackets {
            let file = std::fs::File::create(out_dir.join("brackets.csv"))?;
            write_bracket_csv(rows, std::io::BufWriter::new(file))
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }

    // Human-readable summary on stdout.
    println!("{} [{}] config {}", name, commands::VERSION, report.config_hash);
    if let Some(chain) = &report.chain {
        println!(
            "  chain dims {:?} → {} ({}), ker Ω∞ = {}",
            chain.dims, chain.final_dim, chain.classification, chain.kernel_dim
        );
    }
    if let Some(proj) = &report.projector {
        println!(
            "  projector rank {} (idem {:.2e}, range {:.2e})",
            proj.rank, proj.idempotency_residual, proj.range_residual
        );
    }
    if let Some(rows) = &report.brackets {
        let errors = rows.iter().filter(|r| r.error.is_some()).count();
        println!("  brackets: {} pairs ({} error rows)", rows.len(), errors);
        for row in rows.iter().take(8) {
            match (&row.value, &row.error) {
                (Some(v), _) => println!("    [{}] {{{}, {}}} = {v:.12e}", row.pair_id, row.g_label, row.f_label),
                (None, Some(e)) => println!("    [{}] {{{}, {}}} error: {e}", row.pair_id, row.g_label, row.f_label),
                _ => {}
            }
        }
    }
    if let Some(inv) = &report.invariants {
        for r in inv {
            println!(
                "  [{}] {} (residual {:.3e}, threshold {:.1e})",
                if r.pass { "pass" } else { "FAIL" },
                r.name,
                r.residual,
                r.threshold
            );
        }
    }
    if let Some(t) = &report.trajectory {
        println!(
            "  trajectory: {} steps of dt = {}, energy drift {:.3e} → {}",
            t.n_steps,
            t.dt,
            t.energy_max_drift,
            t.section_binary.as_deref().unwrap_or("-")
        );
    }

    if !report.all_invariants_pass() {
        return Err(CliError::Invariant(
            "one or more invariants failed; see the report".into(),
        ));
    }
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    // The threaded LAPACK needs more stack than some default threads offer;
    // run the command on a thread with an explicit generous stack.
    let handle = std::thread::Builder::new()
        .name("solspace-main".into())
        .stack_size(64 * 1024 * 1024)
        .spawn(move || run(cli))
        .expect("spawn worker");
    let code = match handle.join() {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("{e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("internal error: worker panicked");
            3
        }
    };
    std::process::exit(code);
}
