use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use pareto_consensus::scenario::{builtin_text, Overrides};
use pareto_consensus_cli::{
    cmd_run, cmd_sweep, cmd_verify, cmd_verify_bounds, fixtures_list, fixtures_priorities_csv,
    load_scenario,
};

/// Prioritized multi-agent consensus optimization.
#[derive(Parser)]
#[command(name = "pareto-consensus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or `builtin:NAME` (see `fixtures list`).
    #[arg(long)]
    scenario: String,
    /// Seed for random topologies.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: Some(self.threads),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Also write the one-row summary table here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// One run per initial priority setting; writes the front.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        priorities: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit mixing matrices, limits and bounds; nonzero exit on any FAIL.
    VerifyMatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Observed gap against the performance bound and its asymptote.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Built-in scenarios and objectives.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    List,
    /// Print a built-in scenario file.
    Show { name: String },
    /// Write the twenty two-agent priority settings as CSV.
    ExportPriorities {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            common,
            out,
            summary,
        } => {
            let s = load_scenario(&common.scenario, common.overrides())?;
            let o = cmd_run(&s, &out, summary.as_deref())?;
            let last = o.trajectory.rows.last().map_or(f64::NAN, |r| r[1]);
            println!(
                "{}: {} rounds in {:.2}s, final gap {last:.6e}, f(x*) = {:.6}",
                s.name, o.result.k_max, o.result.wallclock, o.fstar
            );
        }
        Command::Sweep {
            common,
            priorities,
            out,
        } => {
            let s = load_scenario(&common.scenario, common.overrides())?;
            let t = cmd_sweep(&s, &priorities, &out)?;
            println!("{}: {} front points written to {}", s.name, t.rows.len(), out.display());
        }
        Command::VerifyMatrix {
            common,
            inject_fault,
        } => {
            let s = load_scenario(&common.scenario, common.overrides())?;
            let report = cmd_verify(&s, inject_fault)?;
            print!("{}", report.render());
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::VerifyBounds { common, out } => {
            let s = load_scenario(&common.scenario, common.overrides())?;
            let t = cmd_verify_bounds(&s, &out)?;
            let violations = t.rows.iter().filter(|r| r[1] > r[2]).count();
            println!("{}: {} samples, {violations} above the bound", s.name, t.rows.len());
            if violations > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Fixtures { command } => match command {
            FixturesCommand::List => print!("{}", fixtures_list()),
            FixturesCommand::Show { name } => print!("{}", builtin_text(&name)?),
            FixturesCommand::ExportPriorities { out } => {
                std::fs::write(&out, fixtures_priorities_csv()?)?;
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}
