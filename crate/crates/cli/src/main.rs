//! `holab <command> --scenario <name|path> [options]`
//!
//! Exit status: 0 when every check passes, 2 when a check fails, 1 on
//! error (bad input, unreadable scenario, numerical breakdown).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use holab::curvature::SignConvention;
use holab::report::{emit_plots, write_report, RunReport};
use holab::run::{configure_threads_from_env, run_command, Command, Params, DEFAULT_SEED, DEFAULT_STEPS, DEFAULT_TOL};
use holab::scenario::{builtin_names, load_scenario};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Transport,
    Holonomy,
    Axioms,
    Curvature,
    Plaques,
    Asverify,
    Reduce,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Transport => Command::Transport,
            Cmd::Holonomy => Command::Holonomy,
            Cmd::Axioms => Command::Axioms,
            Cmd::Curvature => Command::Curvature,
            Cmd::Plaques => Command::Plaques,
            Cmd::Asverify => Command::Asverify,
            Cmd::Reduce => Command::Reduce,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sign {
    Oracle,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Holonomy and curvature checks for connections on trivialized bundles.
#[derive(Debug, Parser)]
#[command(name = "holab", version, after_help = after_help())]
struct Cli {
    command: Cmd,
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Random loops, or axiom cases for `axioms` (default 100, axioms 20).
    #[arg(long)]
    loops: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sign of the commutator term in the local curvature.
    #[arg(long, value_enum, default_value = "oracle")]
    sign_convention: Sign,
    /// Directory for the JSON report, CSV tables and SVG plots.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn after_help() -> String {
    format!(
        "Built-in scenarios: {}\nHOLAB_THREADS caps the worker threads.\nExit status: 0 pass, 2 check failure, 1 error.",
        builtin_names().join(", ")
    )
}

fn print_stdout(report: &RunReport, format: Format) -> holab::Result<()> {
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => out.write_all(report.to_json()?.as_bytes())?,
        Format::Csv => {
            for t in &report.tables {
                writeln!(out, "# {}", t.name)?;
                out.write_all(t.to_csv().as_bytes())?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> holab::Result<bool> {
    configure_threads_from_env()?;
    let scenario = load_scenario(&cli.scenario)?;
    let params = Params {
        steps: cli.steps,
        tol: cli.tol,
        loops: cli.loops,
        seed: cli.seed,
        sign_convention: match cli.sign_convention {
            Sign::Oracle => SignConvention::Oracle,
            Sign::Paper => SignConvention::Paper,
        },
    };
    let mut report = run_command(cli.command.into(), &scenario, &params)?;
    match &cli.out {
        Some(dir) => {
            let (plots, warnings) = emit_plots(&report, dir)?;
            report.warnings.extend(warnings);
            let mut files = write_report(&report, dir, cli.format == Format::Csv)?;
            files.extend(plots);
            for f in files {
                println!("{}", f.display());
            }
        }
        None => print_stdout(&report, cli.format)?,
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in report.failed_checks() {
        eprintln!("FAIL {}: {:e} (needs {})", c.name, c.value, c.condition);
    }
    eprintln!(
        "{} {} on {}: {} of {} checks passed in {:.2} s",
        if report.passed { "PASS" } else { "FAIL" },
        report.command,
        report.scenario,
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len(),
        report.timing
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the input-error status; 2 is reserved for failed checks.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
