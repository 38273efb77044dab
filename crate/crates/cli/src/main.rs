use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand, ValueEnum};
use pamlab::{run, CommandSpec, Config, ExperimentSpec};
use pamlab_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pamlab",
    version,
    about = "Random displacement lattice laboratory: spectral, variational, \
             coarse-graining and path-sampling experiments with reproducible artifacts"
)]
struct Cli {
    /// Config file: key-value sections, or a JSON run manifest to replay.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed ([run] seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory ([run] out).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads, 0 meaning every core ([run] threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Mesh width override ([run] mesh).
    #[arg(long, global = true)]
    mesh: Option<f64>,
    /// Quadrature and eigensolver tolerance ([run] tol).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Closed-form rates, exponents and constants for the configured model
    Constants,
    /// Principal Dirichlet eigenvalue under mesh refinement
    Eigen,
    /// Scaled eigenvalue-plus-cost minimization over the time grid
    Variational,
    /// Coarse-graining: density classification, volume trials, enumeration
    Meo {
        #[command(subcommand)]
        action: MeoCommand,
    },
    /// Path sampling: quenched and annealed masses, moment ratios
    Fk {
        #[command(subcommand)]
        action: FkCommand,
    },
    /// Fit the annealed log-mass power law over the time grid
    Exponent,
    /// Run the acceptance suite; failures are reported, not thrown
    Accept {
        #[arg(value_enum, default_value_t = SuiteArg::Fast)]
        suite: SuiteArg,
    },
    /// Print every setting with its default and documentation
    Defaults,
}

#[derive(Subcommand)]
enum MeoCommand {
    /// Density test for every unit cube of the t/r box
    Classify,
    /// Monte Carlo frequency of threshold-sized rarefied volumes
    Volume,
    /// Exhaustive animal/displacement pair counts at toy scale
    Enumerate,
}

#[derive(Subcommand)]
enum FkCommand {
    /// Path-average mass on one frozen environment over the time grid
    Quenched,
    /// Environment-averaged moments over the (t, p) grid
    Annealed,
    /// Normalized moment ratio with a bootstrap interval
    Ratio,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::defaults();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        cfg.merge_file(&text)?;
    }
    cfg.merge_env(std::env::vars())?;
    if let Some(seed) = cli.seed {
        cfg.set("run", "seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.set("run", "out", out)?;
    }
    if let Some(threads) = cli.threads {
        cfg.set("run", "threads", &threads.to_string())?;
    }
    if let Some(mesh) = cli.mesh {
        cfg.set("run", "mesh", &mesh.to_string())?;
    }
    if let Some(tol) = cli.tol {
        cfg.set("run", "tol", &tol.to_string())?;
    }
    Ok(cfg)
}

fn command_spec(command: &CliCommand) -> CommandSpec {
    match command {
        CliCommand::Constants => CommandSpec::Constants,
        CliCommand::Eigen => CommandSpec::Eigen,
        CliCommand::Variational => CommandSpec::Variational,
        CliCommand::Meo {
            action: MeoCommand::Classify,
        } => CommandSpec::MeoClassify,
        CliCommand::Meo {
            action: MeoCommand::Volume,
        } => CommandSpec::MeoVolume,
        CliCommand::Meo {
            action: MeoCommand::Enumerate,
        } => CommandSpec::MeoEnumerate,
        CliCommand::Fk {
            action: FkCommand::Quenched,
        } => CommandSpec::FkQuenched,
        CliCommand::Fk {
            action: FkCommand::Annealed,
        } => CommandSpec::FkAnnealed,
        CliCommand::Fk {
            action: FkCommand::Ratio,
        } => CommandSpec::FkRatio,
        CliCommand::Exponent => CommandSpec::Exponent,
        CliCommand::Accept {
            suite: SuiteArg::Fast,
        } => CommandSpec::Accept(false),
        CliCommand::Accept {
            suite: SuiteArg::Full,
        } => CommandSpec::Accept(true),
        CliCommand::Defaults => CommandSpec::Defaults,
    }
}

fn real_main(cli: Cli) -> Result<i32> {
    let config = resolve_config(&cli)?;
    let threads = config.usize("run", "threads")?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let spec = ExperimentSpec {
        command: command_spec(&cli.command),
        config,
    };
    let outcome = run(&spec)?;
    if let Some(err) = outcome.soft_error {
        eprintln!("warning: {err}");
        return Ok(err.exit_code());
    }
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            exit(err.exit_code());
        }
    }
}
