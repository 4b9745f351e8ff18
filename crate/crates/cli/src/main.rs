use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use skillsim_core::SimError;

mod commands;

/// Simulates the economics of human, machine and human-machine skill policies.
#[derive(Debug, Parser)]
#[command(name = "skillsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Lhs,
    Maximin,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate scenario configs from a design space.
    Design {
        /// Space file (JSON). Defaults to the built-in space and example base scenario.
        space: Option<PathBuf>,
        /// Number of numeric design points; each is crossed with every (interaction, curve) pair.
        #[arg(long, default_value_t = skillsim_core::design::DEFAULT_N_NUMERIC)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::Maximin)]
        method: Method,
        /// Maximin candidate pool size [default: 20 * n].
        #[arg(long)]
        pool: Option<usize>,
        /// Overrides the base scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run scenarios and write one runs CSV per config.
    Simulate {
        #[arg(long, conflicts_with = "configs", required_unless_present = "configs")]
        config: Option<PathBuf>,
        /// Directory of config JSON files.
        #[arg(long)]
        configs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads [default: number of CPUs].
        #[arg(long, env = "SKILLSIM_THREADS")]
        parallel: Option<usize>,
        /// Append the underlying theta_h, theta_m draws to every row.
        #[arg(long)]
        record_draws: bool,
    },
    /// Summarize runs CSVs per simulation and across simulations.
    Analyze {
        #[arg(long)]
        runs: PathBuf,
        /// Breakdowns below the whole set: any of policy, difficulty, a.
        #[arg(long, default_value = "policy,difficulty,a")]
        group: String,
        #[arg(long, default_value = "mu,sigma,rho,iqr,sk")]
        stats: String,
        #[arg(long, default_value = "theta,y,v,err,u")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Human-machine gain table from a summary CSV.
    Hmg {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, default_value = "mu")]
        omega: String,
        #[arg(long, default_value = "u")]
        metric: String,
        /// Ascending delta_HM bin edges, e.g. 0.1,0.5,0.9.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        delta_bins: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cost of prediction errors and total skill cost.
    Costs {
        #[arg(long, allow_negative_numbers = true)]
        avg_price: f64,
        #[arg(long, allow_negative_numbers = true)]
        n_sales: f64,
        #[arg(long, allow_negative_numbers = true)]
        cost_fraction: f64,
        #[arg(long, allow_negative_numbers = true)]
        mape: f64,
        /// One-off development cost.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        dev: f64,
        /// Operating cost per period.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        ops: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        periods: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design {
            space,
            n,
            method,
            pool,
            seed,
            out,
        } => {
            let method = match method {
                Method::Lhs => skillsim_core::DesignMethod::Lhs,
                Method::Maximin => pool.map_or_else(
                    || skillsim_core::DesignMethod::maximin_default(n),
                    |pool| skillsim_core::DesignMethod::Maximin { pool },
                ),
            };
            commands::design(space.as_deref(), n, method, seed, &out)
        }
        Command::Simulate {
            config,
            configs,
            out,
            parallel,
            record_draws,
        } => {
            let parallel = parallel.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            commands::simulate(config.as_deref(), configs.as_deref(), &out, parallel, record_draws)
        }
        Command::Analyze {
            runs,
            group,
            stats,
            metrics,
            out,
        } => commands::analyze(&runs, &group, &stats, &metrics, &out),
        Command::Hmg {
            summary,
            omega,
            metric,
            delta_bins,
            out,
        } => commands::hmg(&summary, &omega, &metric, delta_bins.as_deref(), &out),
        Command::Costs {
            avg_price,
            n_sales,
            cost_fraction,
            mape,
            dev,
            ops,
            periods,
        } => commands::costs(avg_price, n_sales, cost_fraction, mape, dev, ops, periods),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// 2 for validation and usage failures, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> ExitCode {
    let validation = e
        .chain()
        .find_map(|c| c.downcast_ref::<SimError>())
        .is_some_and(SimError::is_validation);
    ExitCode::from(if validation {
        commands::EXIT_VALIDATION
    } else {
        commands::EXIT_IO
    })
}
