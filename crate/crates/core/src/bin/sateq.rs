use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use satisfaction_core::harness::{
    cmd_brd, cmd_channel_gen, cmd_enumerate, cmd_sesa, describe_report, ExperimentConfig, Mode, Overrides,
};
use satisfaction_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sateq",
    version,
    about = "Equilibria and satisfaction learning for QoS-constrained games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate NE, GNE, SE and ESE; write report.json and rate_map.csv.
    Enumerate(Common),
    /// Run independent satisfaction-search runs; write traces and summary.json.
    Sesa {
        #[command(flatten)]
        common: Common,
        /// Number of independent runs.
        #[arg(long)]
        runs: Option<u64>,
        /// Step limit per run.
        #[arg(long = "max-steps")]
        max_steps: Option<u64>,
    },
    /// Run best-response dynamics; write brd.json.
    Brd(Common),
    /// Sample an interference channel; write channel.json.
    ChannelGen(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed for `sesa`; channel seed for the other commands.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat an infeasible game (empty SE set) as an error.
    #[arg(long)]
    strict: bool,
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let (mode, common, runs, max_steps) = match &cli.command {
        Command::Enumerate(c) => (Mode::Enumerate, c, None, None),
        Command::Sesa {
            common,
            runs,
            max_steps,
        } => (Mode::Sesa, common, *runs, *max_steps),
        Command::Brd(c) => (Mode::Brd, c, None, None),
        Command::ChannelGen(c) => (Mode::ChannelGen, c, None, None),
    };
    let mut config = load_config(common.config.as_ref())?;
    config.apply(
        mode,
        &Overrides {
            seed: common.seed,
            out: common.out.clone(),
            runs,
            max_steps,
        },
    )?;

    let infeasible = match mode {
        Mode::Enumerate => {
            let out = cmd_enumerate(&config)?;
            describe_report(&mut std::io::stdout().lock(), &out.report).ok();
            println!(
                "wrote {} and {}",
                out.report_path.display(),
                out.rate_map_path.display()
            );
            out.infeasible
        }
        Mode::Sesa => {
            let out = cmd_sesa(&config)?;
            let s = &out.summary;
            println!(
                "{}/{} runs converged (frequency {:.4}); wrote {}",
                s.converged_runs,
                s.runs,
                s.convergence_frequency,
                out.summary_path.display()
            );
            out.infeasible
        }
        Mode::Brd => {
            let out = cmd_brd(&config)?;
            let r = &out.report;
            println!(
                "{} -> {} converged={} after {} rounds (SE: {}, GNE: {})",
                r.start, r.outcome.profile, r.outcome.converged, r.outcome.iterations, r.in_se, r.in_gne
            );
            false
        }
        Mode::ChannelGen => {
            let out = cmd_channel_gen(&config)?;
            println!("wrote {}", out.path.display());
            false
        }
    };

    if infeasible {
        eprintln!("warning: no profile satisfies every player (empty SE set)");
        if common.strict {
            return Ok(EXIT_INFEASIBLE);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_FAILURE
            })
        }
    }
}
