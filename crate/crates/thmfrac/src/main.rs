use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use thmfrac::app::{run_demo, run_scenario_file, RunOptions};
use thmfrac::verify;

#[derive(Parser)]
#[command(
    name = "thmfrac",
    version,
    about = "Coupled thermo-hydro-mechanical simulator for fractured porous media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the grid resolution with an N×N lattice.
    #[arg(long)]
    resolution: Option<usize>,
    /// Output directory (overrides the scenario's [output] section).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Multiply every phase's nominal time step.
    #[arg(long)]
    dt_scale: Option<f64>,
    /// Newton iteration cap per time step.
    #[arg(long)]
    max_newton: Option<usize>,
}

impl CommonOpts {
    fn into_run_options(self) -> RunOptions {
        RunOptions {
            resolution: self.resolution,
            out_dir: self.out_dir,
            dt_scale: self.dt_scale,
            max_newton: self.max_newton,
            verbose: true,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run the bundled four-phase demonstration scenario.
    Demo {
        #[command(flatten)]
        opts: CommonOpts,
        /// Run twice and fail unless the diagnostics are bitwise identical.
        #[arg(long)]
        seed_check: bool,
    },
    /// Run the built-in verification suites and print one line each.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { scenario, opts } => {
            match run_scenario_file(&scenario, &opts.into_run_options()) {
                Ok(summary) => {
                    println!(
                        "completed {} steps; outputs in {}",
                        summary.records.len(),
                        summary.out_dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Demo { opts, seed_check } => {
            let mut run_opts = opts.into_run_options();
            if !seed_check {
                return finish(run_demo(&run_opts));
            }
            // determinism check: two fresh runs must agree byte for byte
            let base = run_opts
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("demo_out"));
            let mut csvs = Vec::new();
            for pass in ["a", "b"] {
                run_opts.out_dir = Some(base.join(pass));
                match run_demo(&run_opts) {
                    Ok(summary) => match std::fs::read(&summary.csv_path) {
                        Ok(bytes) => csvs.push(bytes),
                        Err(e) => {
                            eprintln!("error: {}: {e}", summary.csv_path.display());
                            return ExitCode::from(2);
                        }
                    },
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(e.exit_code() as u8);
                    }
                }
            }
            if csvs[0] == csvs[1] {
                println!("seed check passed: identical diagnostics across two runs");
                ExitCode::SUCCESS
            } else {
                eprintln!("seed check FAILED: diagnostics differ between runs");
                ExitCode::FAILURE
            }
        }
        Command::Verify => {
            let results = verify::run_all();
            let mut ok = true;
            for r in &results {
                println!("{}", r.line());
                ok &= r.passed;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn finish(result: Result<thmfrac::app::RunSummary, thmfrac::app::AppError>) -> ExitCode {
    match result {
        Ok(summary) => {
            println!(
                "completed {} steps; outputs in {}",
                summary.records.len(),
                summary.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
