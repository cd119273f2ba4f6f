//! Scenario-driven command line for the channel-flow solver and its
//! verification harness.

use anyhow::Result;
use channelflow_cli::{runner, scenario::Scenario};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "channelflow", about = "steady channel flows with Navier slip: solve and verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (defaults to ./out/<scenario-name>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Thread count (accepted for compatibility; this build runs sequentially)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario and report solver data and flux exactness
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve and run the scenario's verification checklist
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the scenario across a parameter list
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// phi | t | mesh
        #[arg(long)]
        param: String,
        /// comma-separated increasing values
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Functional-inequality lab over the shipped profile family
    Inequalities {
        #[arg(long, default_value_t = 42)]
        seed_lab: u64,
    },
    /// Carrier certification over the shipped profiles
    CarrierCheck {
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("ConfigInvalid: threads must be at least 1");
        return ExitCode::from(2);
    }
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(config: &PathBuf, seed: Option<u64>) -> Result<Scenario> {
    let mut sc = Scenario::load(config)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    Ok(sc)
}

fn out_dir(cli_out: &Option<PathBuf>, name: &str) -> PathBuf {
    cli_out.clone().unwrap_or_else(|| PathBuf::from("out").join(name))
}

fn dispatch(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Solve { config } => {
            let mut sc = load(config, cli.seed)?;
            sc.checks = vec!["flux".into()];
            let dir = out_dir(&cli.out, &sc.name);
            let out = runner::run(&sc, &dir)?;
            println!("report: {}", out.out_dir.join("report.json").display());
            Ok(out.exit)
        }
        Command::Verify { config } => {
            let sc = load(config, cli.seed)?;
            let dir = out_dir(&cli.out, &sc.name);
            let out = runner::run(&sc, &dir)?;
            for (check, verdict) in &out.report.verdicts {
                println!("{check}: {verdict:?}");
            }
            println!("report: {}", out.out_dir.join("report.json").display());
            Ok(out.exit)
        }
        Command::Sweep { config, param, values } => {
            let sc = load(config, cli.seed)?;
            let dir = out_dir(&cli.out, &format!("{}_sweep_{param}", sc.name));
            runner::sweep(&sc, param, values, &dir)
        }
        Command::Inequalities { seed_lab } => {
            let dir = out_dir(&cli.out, "inequalities");
            runner::inequalities(cli.seed.unwrap_or(*seed_lab), &dir)
        }
        Command::CarrierCheck { phi, eps } => {
            let dir = out_dir(&cli.out, "carrier_check");
            runner::carrier_check(*phi, *eps, &dir)
        }
    }
}
