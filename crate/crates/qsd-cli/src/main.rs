mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};

/// Estimate quasi-stationary distributions of finite absorbing Markov
/// chains: exact solvers, five simulation schemes, and CLT diagnostics.
#[derive(Parser)]
#[command(name = "qsd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the exact QSD of a chain file or preset.
    Exact {
        /// Chain matrix file, or a preset name (paper-3state, paper-10state).
        chain: String,
        /// Residual tolerance for the eigenpair.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Compute the stability margin and CLT covariances.
    Theory {
        chain: String,
        #[arg(long, default_value_t = 4.17)]
        gamma_star: f64,
        /// Covariance variant: algI, algII, or algII_beta.
        #[arg(long, default_value = "algI")]
        variant: String,
        /// Growth exponent for the algII variants.
        #[arg(long, default_value_t = 0.5)]
        zeta: f64,
        /// Emit the report even when gamma_star is at or below 1/L.
        #[arg(long)]
        force: bool,
    },
    /// Execute one configured run and write trace, estimate, and manifest.
    Run {
        /// Run configuration (TOML), or a manifest (JSON) with --from-manifest.
        config: String,
        /// Treat `config` as a previously written manifest.
        #[arg(long)]
        from_manifest: bool,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        stride: Option<u64>,
    },
    /// Run all five schemes from one configuration and aggregate traces.
    Compare {
        config: String,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        stride: Option<u64>,
    },
    /// Run a built-in benchmark experiment (one | two).
    Experiment {
        id: String,
        #[arg(long, default_value_t = 50)]
        reps: u32,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
        #[arg(long, default_value = "qsd-experiment")]
        out: String,
    },
    /// Validate a scheme's CLT against the theoretical covariance.
    Clt {
        config: String,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            commands::exit_code(&err)
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> qsd::Result<()> {
    match cli.command {
        Command::Exact { chain, tol } => commands::cmd_exact(&chain, tol),
        Command::Theory {
            chain,
            gamma_star,
            variant,
            zeta,
            force,
        } => commands::cmd_theory(&chain, gamma_star, &variant, zeta, force),
        Command::Run {
            config,
            from_manifest,
            out,
            seed,
            stride,
        } => commands::cmd_run(&config, from_manifest, out.as_deref(), seed, stride),
        Command::Compare {
            config,
            out,
            seed,
            reps,
            parallelism,
            stride,
        } => commands::cmd_compare(&config, out.as_deref(), seed, reps, parallelism, stride),
        Command::Experiment {
            id,
            reps,
            seed,
            parallelism,
            out,
        } => commands::cmd_experiment(&id, reps, seed, parallelism, &out),
        Command::Clt {
            config,
            out,
            seed,
            reps,
            parallelism,
        } => commands::cmd_clt(&config, out.as_deref(), seed, reps, parallelism),
    }
}
