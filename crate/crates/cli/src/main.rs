//! `dops`: tables, point evaluations, weights and verification suites for the
//! d-orthogonal Meixner-type polynomials.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::output::Outcome;

#[derive(Debug, Parser)]
#[command(name = "dops", version, about = "d-orthogonal Meixner-type polynomials from su(1,1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficients of P̂_0..P̂_nmax and values of M_n on k = 0..kmax.
    Table(CommonArgs),
    /// P̂_n(x), M_n(x) and P_n(x) for n = 0..nmax.
    Eval {
        /// Evaluation point, "p/q" or decimal.
        #[arg(long, default_value = "1")]
        x: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Weights w_ik for i < d and k = 0..kmax.
    Weights(CommonArgs),
    /// Run a verification suite; without --r/--beta/--c the default grid is used.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Recurrence,
    Genfunc,
    Operator,
    Lowering,
    Biorth,
    Weights,
    Identities,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Order parameter; d = 2r - 1.
    #[arg(long)]
    r: Option<usize>,
    /// beta > 0, "p/q" or decimal.
    #[arg(long)]
    beta: Option<String>,
    /// c in (0, 1), "p/q" or decimal.
    #[arg(long)]
    c: Option<String>,
    #[arg(long, default_value_t = 9)]
    nmax: usize,
    #[arg(long, default_value_t = 20)]
    kmax: usize,
    /// Operator truncation size.
    #[arg(long = "N", default_value_t = 14)]
    n_trunc: usize,
    /// Working precision in bits (>= 64).
    #[arg(long, default_value_t = 256)]
    prec: u32,
    #[arg(long, default_value = "1e-25")]
    tol: String,
    /// Cap on k for the functional sums of the weights suite.
    #[arg(long, default_value_t = 8192)]
    kcap: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dops: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<ExitCode, output::CliError> {
    let (doc, common) = match command {
        Command::Table(common) => {
            let cfg = RunConfig::single(&common)?;
            (commands::table(&cfg)?, common)
        }
        Command::Eval { x, common } => {
            let cfg = RunConfig::single(&common)?;
            (commands::eval(&cfg, &x)?, common)
        }
        Command::Weights(common) => {
            let cfg = RunConfig::single(&common)?;
            (commands::weights(&cfg)?, common)
        }
        Command::Verify { suite, common } => {
            let cfg = RunConfig::grid(&common)?;
            (commands::verify(&cfg, suites(suite))?, common)
        }
    };
    let text = match common.format {
        Format::Json => doc.to_json(),
        Format::Csv => doc.to_csv()?,
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| output::CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(match doc.outcome {
        Outcome::Ok => ExitCode::SUCCESS,
        Outcome::Failed => ExitCode::from(1),
        Outcome::NonStabilized => ExitCode::from(3),
    })
}

fn suites(arg: SuiteArg) -> Vec<dops_core::Suite> {
    use dops_core::Suite;
    match arg {
        SuiteArg::Recurrence => vec![Suite::Recurrence],
        SuiteArg::Genfunc => vec![Suite::Genfunc],
        SuiteArg::Operator => vec![Suite::Operator],
        SuiteArg::Lowering => vec![Suite::Lowering],
        SuiteArg::Biorth => vec![Suite::Biorth],
        SuiteArg::Weights => vec![Suite::Weights],
        SuiteArg::Identities => vec![Suite::Identities],
        SuiteArg::All => Suite::ALL.to_vec(),
    }
}
