//! `gte`: scenario-driven front end to the geotransport library.
//!
//! Exit codes: `0` when every assertion passes, `1` when one fails or the
//! computation errors, `2` on a malformed scenario.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geotransport::scenario::{self, Command, LoadedScenario, Overrides, Report, ScenarioError};

#[derive(Parser)]
#[command(
    name = "gte",
    version,
    about = "Transport of currents along flows of time-dependent fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Trajectory table of sample points.
    Flow(Run),
    /// Trajectory of the transported initial current.
    Transport(Run),
    /// Weak residuals across time-grid refinements.
    Residual(Run),
    /// Lipschitz approximation of an absolutely continuous function.
    Approx(Run),
    /// Maximal function table and weak (1,1) check.
    Maximal(Run),
    /// Built-in demonstrations.
    Demo {
        which: Demo,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    Nonuniqueness,
}

#[derive(Args)]
struct Run {
    /// Scenario JSON file.
    scenario: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Refinement levels (residual, approx) or log2 grid size (demo).
    #[arg(long)]
    refine: Option<usize>,
    /// Flow integrator tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Number of test forms.
    #[arg(long = "dict-size")]
    dict_size: Option<usize>,
    /// Seed of the test-form dictionary.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the JSON and CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            refine: self.refine,
            tolerance: self.tolerance,
            dict_size: self.dict_size,
            seed: self.seed,
        }
    }
}

fn execute(cli: Cli) -> Result<(Report, Option<PathBuf>), ScenarioError> {
    let (command, run) = match cli.command {
        Sub::Demo {
            which: Demo::Nonuniqueness,
            flags,
        } => return Ok((scenario::run_demo(&flags.overrides())?, flags.out)),
        Sub::Flow(r) => (Command::Flow, r),
        Sub::Transport(r) => (Command::Transport, r),
        Sub::Residual(r) => (Command::Residual, r),
        Sub::Approx(r) => (Command::Approx, r),
        Sub::Maximal(r) => (Command::Maximal, r),
    };
    let loaded = LoadedScenario::from_path(&run.scenario)?;
    let report = loaded.run(command, &run.flags.overrides())?;
    Ok((report, run.flags.out.or_else(|| loaded.output_dir())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, out) = match execute(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    print!("{}", report.json_text());
    if let Some(dir) = out {
        if let Err(e) = report.write(&dir) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let mut failed = false;
    for a in report.failures() {
        eprintln!("assertion failed: {}: {}", a.name, a.detail);
        failed = true;
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
