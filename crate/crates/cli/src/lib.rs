//! Command-line layer for the flocking simulator: configuration schema,
//! subcommands and output formats. The `flock` binary is a thin wrapper.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{ConfigFile, Scenario};

pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const NOT_APPLICABLE: i32 = 4;
    pub const ABORTED: i32 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "flock", version, about = "Swarm flocking simulator with virtual-leader feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command that builds a run configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overlay a published motion regime (1-9) onto the configuration.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=9))]
    pub regime: Option<u8>,
    /// Replace the leader trajectory and initial spread with a preset.
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_agents: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedModeArg {
    Shared,
    PerPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WobblerMode {
    Construct,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Linear,
    Power,
    Exponential,
    Logarithmic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its series and summary.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        dump_config: bool,
        /// Also write every agent's state at every sample.
        #[arg(long)]
        states: bool,
    },
    /// Evaluate a grid of control parameters.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `lo:hi:n` for α′.
        #[arg(long, default_value = "0:5:26")]
        alpha: String,
        /// `lo:hi:n` for r₀′.
        #[arg(long, default_value = "0:20:26")]
        r0: String,
        /// `lo:hi:n` for β′.
        #[arg(long, default_value = "0:5:26")]
        beta: String,
        /// `lo:hi:n` for v₀′.
        #[arg(long, default_value = "0:2:26")]
        v0: String,
        /// Worker threads.
        #[arg(long, env = "FLOCK_WORKERS")]
        parallel: Option<usize>,
        #[arg(long, value_enum, default_value = "shared")]
        seed_mode: SeedModeArg,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Pick the lowest-drain row of a sweep table subject to deviation caps.
    Optimize {
        /// Sweep table (sweep.csv or checkpoint.csv).
        table: PathBuf,
        #[arg(long)]
        qmax: f64,
        #[arg(long)]
        vmax: f64,
    },
    /// Re-run a configuration and compare it with the analytic bounds.
    VerifyBounds {
        #[command(flatten)]
        run: RunArgs,
        /// Directory written by `simulate`; its config.toml is re-run.
        #[arg(long, conflicts_with = "config")]
        run_dir: Option<PathBuf>,
        /// Leading fraction of the run treated as transient.
        #[arg(long, default_value_t = 0.5)]
        transient: f64,
        /// Relative slack on the bounds.
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Build a closed-form wobbler or check that wobblers are ruled out.
    Wobbler {
        #[arg(long, value_enum)]
        mode: WobblerMode,
        /// Position gain α′ (construct) or gain of h (check).
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Initial positions relative to the leader, `x,y,z;x,y,z;...`.
        #[arg(long, default_value = "0,0,0")]
        positions: String,
        /// Shared initial velocity `x,y,z`.
        #[arg(long, default_value = "0,0,0")]
        w0: String,
        /// Quasi-equilibrium force `x,y,z`.
        #[arg(long, default_value = "0,0,0")]
        f0: String,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        /// Trajectory CSV (construct mode).
        #[arg(long, default_value = "wobbler.csv")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "power")]
        kind: KindArg,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Activation threshold of h.
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Grid start; defaults to threshold + 0.01.
        #[arg(long)]
        s_lo: Option<f64>,
        /// Grid end; defaults to threshold + 100.
        #[arg(long)]
        s_hi: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        grid_n: usize,
        /// Velocity threshold for the admissibility check.
        #[arg(long)]
        v0: Option<f64>,
        /// Ball radius for the admissibility check.
        #[arg(long)]
        radius: Option<f64>,
    },
}

/// Parse arguments, run the command, and return the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            commands::exit_code_for(&err)
        }
    }
}
