// Negated float comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Common, EvolvePreset, Session};
use error::CliResult;

/// Two interacting particles on a ring with telegraph-noise hopping.
///
/// Configuration keys (file or --set): n_sites, u, statistics, g0, gamma,
/// realizations, seed, tau_max, intervals, separation, j, k, epsilon,
/// tolerance. All quantities are in units of the hopping J.
#[derive(Parser)]
#[command(name = "pairwalk", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Noise realizations per ensemble; overrides the file.
    #[arg(long, global = true)]
    realizations: Option<usize>,

    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Exit with status 3 if any run reaches the sites opposite the start.
    #[arg(long, global = true)]
    strict_guard: bool,

    /// Override one configuration key, e.g. --set n_sites=40. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Two-particle band structure E(K) with bound/scattering labels.
    Bands {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 14.0])]
        u_values: Vec<f64>,
    },
    /// Weights of a localized pair on the noiseless eigenstates.
    Projections {
        #[arg(long, value_delimiter = ',', default_values_t = [6.0, 14.0, 40.0])]
        u_values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 3])]
        separations: Vec<usize>,
    },
    /// Noise-averaged variance and occupations, for the configured run or a preset.
    Evolve {
        #[arg(long, value_enum)]
        preset: Option<EvolvePreset>,
    },
    /// Variance curves over a list of switching rates at U = 0.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = commands::GAMMA_SWEEP)]
        gammas: Vec<f64>,
    },
    /// Variance gain over the noiseless run at tau_max (default 12.5).
    Gain {
        #[arg(long, value_delimiter = ',', default_values_t = commands::GAIN_U)]
        u_values: Vec<f64>,
        /// Points of the logarithmic gamma grid.
        #[arg(long, default_value_t = 12)]
        gamma_points: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma_min: f64,
        #[arg(long, default_value_t = 200.0)]
        gamma_max: f64,
    },
    /// Telegraph autocorrelation estimate against g0² exp(−2γ lag); uses
    /// `realizations` trajectories.
    AutocorrCheck {
        #[arg(long, default_value_t = 1.0)]
        max_lag: f64,
        #[arg(long, default_value_t = 20)]
        lag_points: usize,
    },
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let c = cli.common;
    let common = Common {
        config: c.config,
        seed: c.seed,
        realizations: c.realizations,
        out_dir: c.out_dir,
        strict_guard: c.strict_guard,
        set: c
            .set
            .iter()
            .map(|s| config::parse_assignment(s))
            .collect::<CliResult<_>>()?,
        arguments: std::env::args().skip(1).collect(),
    };
    let session = match cli.command {
        Command::Bands { ref u_values } => {
            let mut s = Session::open("bands", Some("bands"), &[], common)?;
            commands::bands(&mut s, u_values)?;
            s
        }
        Command::Projections {
            ref u_values,
            ref separations,
        } => {
            let mut s = Session::open("projections", Some("projections"), &[], common)?;
            commands::projections(&mut s, u_values, separations)?;
            s
        }
        Command::Evolve { preset: None } => {
            let mut s = Session::open("evolve", None, &[], common)?;
            commands::evolve_plain(&mut s)?;
            s
        }
        Command::Evolve { preset: Some(p) } => {
            let mut s = Session::open("evolve", Some(p.name()), p.template(), common)?;
            commands::evolve_preset(&mut s, p)?;
            s
        }
        Command::Sweep { ref gammas } => {
            let mut s = Session::open("sweep", Some("gamma-sweep"), &[("u", "0")], common)?;
            commands::gamma_sweep(&mut s, gammas)?;
            s
        }
        Command::Gain {
            ref u_values,
            gamma_points,
            gamma_min,
            gamma_max,
        } => {
            if !(gamma_min > 0.0 && gamma_max >= gamma_min) || gamma_points == 0 {
                return Err(error::CliError::Config {
                    key: "gamma-min/gamma-max".into(),
                    message: "need 0 < gamma_min <= gamma_max and at least one point".into(),
                });
            }
            let mut s = Session::open("gain", Some("gain-sweep"), &commands::GAIN_TEMPLATE, common)?;
            let grid = commands::log_grid(gamma_min, gamma_max, gamma_points);
            commands::gain(&mut s, u_values, &grid)?;
            s
        }
        Command::AutocorrCheck { max_lag, lag_points } => {
            let mut s = Session::open("autocorr-check", Some("autocorr-check"), &[], common)?;
            commands::autocorr(&mut s, max_lag, lag_points)?;
            s
        }
    };
    session.finish()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
