mod commands;
mod config;
mod corpus;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use greenscape::{GroupingContext, Indicator};

use crate::config::ProjectConfig;

#[derive(Debug, Parser)]
#[command(name = "greenscape", version, about = "Street-level greenery metrics and perception analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Project config JSON.
    #[arg(long, global = true, default_value = "greenscape.json")]
    config: PathBuf,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also render SVG charts next to the CSV plot data.
    #[arg(long, global = true)]
    svg: bool,

    /// Restrict to one indicator (e.g. green, live_nearby).
    #[arg(long, global = true)]
    indicator: Option<Indicator>,

    /// Restrict to one grouping context, "<participant scope>,<image scope>".
    #[arg(long, global = true)]
    context: Option<GroupingContext>,

    /// Overrides paths.classes.
    #[arg(long, global = true)]
    classes: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "GREENSCAPE_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Per-image greenery metrics.
    Metrics,
    /// Q scores and TrueSkill ratings per context and indicator.
    Scores,
    /// Agreement between perceived and measured greenery.
    Agree,
    /// Metric differences between low and high perceived-greenery groups.
    Distrib,
    /// Perceived-greenery model: search, fit, evaluate, importance.
    Model,
    /// Spatial entropy across window sizes.
    Sweep,
}

/// Resolved settings shared by every subcommand.
pub struct Run {
    pub cfg: ProjectConfig,
    pub svg: bool,
    pub indicator: Option<Indicator>,
    pub context: Option<GroupingContext>,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let mut cfg = ProjectConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(classes) = cli.classes {
        // flag paths are relative to the working directory
        cfg.paths.classes = Some(std::path::absolute(classes)?);
    }
    cfg.validate()?;
    let run = Run {
        cfg,
        svg: cli.svg,
        indicator: cli.indicator,
        context: cli.context,
    };
    match cli.command {
        Command::Metrics => commands::metrics::run(&run),
        Command::Scores => commands::scores::run(&run),
        Command::Agree => commands::agree::run(&run),
        Command::Distrib => commands::distrib::run(&run),
        Command::Model => commands::model::run(&run),
        Command::Sweep => commands::sweep::run(&run),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
