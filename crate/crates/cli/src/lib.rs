//! Command-line laboratory around `pamlab-core`: experiment dispatch,
//! layered configuration, content-addressed artifacts and the acceptance
//! gate.

pub mod accept;
pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use pamlab_core::{Error, Result};

pub use config::Config;
pub use report::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandSpec {
    Constants,
    Eigen,
    Variational,
    MeoClassify,
    MeoVolume,
    MeoEnumerate,
    FkQuenched,
    FkAnnealed,
    FkRatio,
    Exponent,
    /// true runs the full suite, false the fast one.
    Accept(bool),
    Defaults,
}

/// A fully resolved experiment: which command, and every setting it may
/// read. The manifest records both, which is the reproducibility
/// contract: replaying it yields byte-identical CSV bodies.
pub struct ExperimentSpec {
    pub command: CommandSpec,
    pub config: Config,
}

pub struct RunOutcome {
    /// None only for `defaults`, which writes to stdout.
    pub artifacts: Option<Artifacts>,
    /// A solver missed its tolerance; artifacts exist, exit is nonzero.
    pub soft_error: Option<Error>,
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    if spec.command == CommandSpec::Defaults {
        print!("{}", config::render_defaults());
        return Ok(RunOutcome {
            artifacts: None,
            soft_error: None,
        });
    }
    let cfg = &spec.config;
    let mut output = match spec.command {
        CommandSpec::Constants => commands::constants(cfg)?,
        CommandSpec::Eigen => commands::eigen(cfg)?,
        CommandSpec::Variational => commands::variational(cfg)?,
        CommandSpec::MeoClassify => commands::meo_classify(cfg)?,
        CommandSpec::MeoVolume => commands::meo_volume(cfg)?,
        CommandSpec::MeoEnumerate => commands::meo_enumerate(cfg)?,
        CommandSpec::FkQuenched => commands::fk_quenched(cfg)?,
        CommandSpec::FkAnnealed => commands::fk_annealed(cfg)?,
        CommandSpec::FkRatio => commands::fk_ratio(cfg)?,
        CommandSpec::Exponent => commands::exponent(cfg)?,
        CommandSpec::Accept(full) => accept::accept_command(cfg, full)?,
        CommandSpec::Defaults => unreachable!("handled above"),
    };
    let soft_error = output.soft_error.take();
    let out_dir = PathBuf::from(cfg.get("run", "out"));
    let artifacts = report::write_artifacts(&out_dir, cfg, &output)?;
    println!("{} -> {}", output.slug, artifacts.csv.display());
    for line in &output.summary {
        println!("  {line}");
    }
    Ok(RunOutcome {
        artifacts: Some(artifacts),
        soft_error,
    })
}
