use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqkd_cli::commands::{self, RunOptions};
use cvqkd_cli::config::RunConfig;
use cvqkd_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "Certified key rates for four-state CV-QKD with heterodyne detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Certificate cache directory [default: <out>/certificates].
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build all operators and check their identities.
    Operators,
    /// Certify asymptotic rates over the configured (D, ξ, α) grid.
    Asymptotic,
    /// Finite-size rates from cached certificates.
    Finite,
    /// Re-verify a certificate file.
    Verify { certificate: PathBuf },
    /// Monte Carlo check of the honest statistics and concentration radii.
    McCheck,
}

fn config(cli: &Cli) -> CliResult<RunConfig> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => RunConfig::from_toml(""),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let mut opts = RunOptions::new(&cli.out);
    if let Some(c) = &cli.cache {
        opts.cache = c.clone();
    }
    opts.workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    opts.seed = cli.seed;
    match &cli.command {
        Command::Operators => {
            let report = commands::operators(&config(cli)?)?;
            print!("{report}");
            if !report.pass() {
                return Err(CliError::Invariant("operator identity check failed".into()));
            }
        }
        Command::Asymptotic => {
            let cfg = config(cli)?;
            let rows = commands::asymptotic(&cfg, &opts)?;
            for r in &rows {
                println!(
                    "D={:>6} ξ={:<6} α={:<5} rate={:>12.5e} gap={:.3} ε′={:.1e} {}{}",
                    r.distance_km,
                    r.xi,
                    r.alpha,
                    r.rate,
                    r.gap,
                    r.eps_prime,
                    r.status,
                    if r.best == 1 { " *" } else { "" }
                );
            }
            println!("wrote {}", opts.out.join(&cfg.output.asymptotic_csv).display());
            let failed = rows.iter().filter(|r| !r.ok()).count();
            if failed > 0 {
                return Err(CliError::Solver(format!("{failed} of {} points failed", rows.len())));
            }
        }
        Command::Finite => {
            let cfg = config(cli)?;
            let rows = commands::finite(&cfg, &opts)?;
            for r in &rows {
                println!(
                    "D={:>6} ξ={:<6} n={:.0e} rate={:>12.5e} α={} a={} p_key={} p̃PE={} {}",
                    r.distance_km, r.xi, r.n, r.finite_rate, r.alpha, r.a, r.p_key, r.p_pe_cond, r.status
                );
            }
            println!("wrote {}", opts.out.join(&cfg.output.finite_csv).display());
            if rows.iter().any(|r| r.status != "ok") {
                return Err(CliError::Invariant("some rows violated a precondition".into()));
            }
        }
        Command::Verify { certificate } => {
            let cfg = match &cli.config {
                Some(p) => Some(RunConfig::load(p)?),
                None => None,
            };
            let report = commands::verify(certificate, cfg.as_ref())?;
            println!("{report}");
            if !report.certified {
                return Err(CliError::Invariant(format!("uncertified: slack λ_min = {:e}", report.lambda_min)));
            }
        }
        Command::McCheck => {
            let report = commands::mc_check(&config(cli)?, &opts)?;
            println!("{report}");
            if !report.pass() {
                return Err(CliError::Invariant("Monte Carlo deviation flagged".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
