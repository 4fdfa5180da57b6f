//! `tvbound`: moment-based lower bounds on total variation distance.
//!
//! Exit codes: 0 success, 2 solver failure, 3 configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{BoundOptions, EXIT_CONFIG};
use config::{Format, Levels, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "tvbound", version, about = "Lower bounds on total variation distance from moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relaxation at each level and report rho_n.
    Bound {
        #[command(flatten)]
        common: Common,
        /// Leave the wall_ms column empty so output is byte-stable.
        #[arg(long)]
        no_timing: bool,
        /// Write each level's conic program into this directory.
        #[arg(long, value_name = "DIR")]
        dump_program: Option<PathBuf>,
    },
    /// Exact total variation from the atomic or quadrature oracle.
    Exact {
        #[command(flatten)]
        common: Common,
    },
    /// Recover the atoms of the optimal (phi, psi) when they are flat.
    Extract {
        #[command(flatten)]
        common: Common,
    },
    /// Dump the moment sequences up to degree 2 * (last level).
    Moments {
        #[command(flatten)]
        common: Common,
    },
    /// Recover and independently verify the dual certificate at each level.
    Certify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Inclusive level range, e.g. 1..4.
    #[arg(long, value_name = "A..B")]
    levels: Option<Levels>,
    /// Solver tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for sampled empirical measures.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Solve in raw monomial coordinates.
    #[arg(long)]
    no_scale: bool,
    /// Report distances halved, on the [0, 1] scale.
    #[arg(long)]
    normalized: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, config::ConfigError> {
        let over = Overrides {
            levels: self.levels,
            tol: self.tol,
            format: self.format,
            seed: self.seed,
            no_scale: self.no_scale,
            normalized: self.normalized,
        };
        RunConfig::load(&self.config, &over)
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, commands::CommandError> {
    let (common, cmd) = match &cli.command {
        Command::Bound { common, .. }
        | Command::Exact { common }
        | Command::Extract { common }
        | Command::Moments { common }
        | Command::Certify { common } => (common, &cli.command),
    };
    let cfg = common.load()?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    match cmd {
        Command::Bound {
            no_timing,
            dump_program,
            ..
        } => commands::bound(
            &cfg,
            &BoundOptions {
                timing: !no_timing,
                dump_dir: dump_program.as_deref(),
            },
        ),
        Command::Exact { .. } => commands::exact(&cfg),
        Command::Extract { .. } => commands::extract(&cfg),
        Command::Moments { .. } => commands::moments(&cfg),
        Command::Certify { .. } => commands::certify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
