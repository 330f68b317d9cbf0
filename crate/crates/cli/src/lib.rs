//! CLI pipeline over the core toolkit: design, simulate, verify-kernels,
//! and report subcommands, plus the scenario/artifact schemas.

pub mod artifacts;
pub mod commands;
pub mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "heatstep",
    about = "Saturated boundary control of a delayed ODE-heat cascade: kernels, certificates, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute backstepping kernels and an LMI certificate.
    Design {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Override the scenario's grid step.
        #[arg(long)]
        dx: Option<f64>,
        /// Override the scenario's time step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the optimizer seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate the saturated closed loop (requires design artifacts).
    Simulate {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check kernel residuals, round trips, and the dual representations.
    VerifyKernels {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a consolidated report of the artifacts in an output directory.
    Report {
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Design { scenario, out, dx, dt, seed } => {
            commands::cmd_design(&scenario, &out, &commands::Overrides { dx, dt, seed })
        }
        Command::Simulate { scenario, out, dx, dt, seed } => {
            commands::cmd_simulate(&scenario, &out, &commands::Overrides { dx, dt, seed })
        }
        Command::VerifyKernels { scenario, out, dx, dt, seed } => {
            commands::cmd_verify(&scenario, &out, &commands::Overrides { dx, dt, seed })
        }
        Command::Report { out } => commands::cmd_report(&out),
    }
}
