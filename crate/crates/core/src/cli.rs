//! Command-line driver: `encode`, `query`, `replay` and `solve`.
//!
//! Exit status is 0 on success, 1 when a run or check fails, and 2 for usage
//! and input errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::arbiter::QueryResult;
use crate::argumentation::{parse_af, AttackGraph};
use crate::buffer::{Clock, LogicalClock, SystemClock};
use crate::scenario::{
    check_expected, ordered, render_checks, render_query_table, run_scenario, write_encoding_artifacts,
    write_query_artifacts, write_report, ScenarioFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rashomon",
    version,
    about = "Multi-perspective memory with argumentation-based retrieval"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Semantics {
    Grounded,
    Preferred,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the encoding cycle and write per-perspective graphs and the selectivity report.
    Encode {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic time starting at the Unix epoch.
        #[arg(long)]
        logical_clock: bool,
    },
    /// Encode, then run one query and write its artifacts.
    Query {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        logical_clock: bool,
    },
    /// Run the full scenario and compare against its `expected` section.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        logical_clock: bool,
    },
    /// Print the extensions of an AF file, one per line.
    Solve {
        af: PathBuf,
        #[arg(long, value_enum, default_value = "grounded")]
        semantics: Semantics,
    },
}

fn clock(logical: bool) -> Arc<dyn Clock> {
    if logical {
        Arc::new(LogicalClock::default())
    } else {
        Arc::new(SystemClock)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn load(path: &Path) -> anyhow::Result<ScenarioFile> {
    Ok(ScenarioFile::load(path)?)
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Encode {
            scenario,
            out: dir,
            logical_clock,
        } => {
            let scenario = load(&scenario)?;
            let clock = clock(logical_clock);
            let run = run_scenario(&scenario, Arc::clone(&clock), Some(&[]))?;
            write_encoding_artifacts(&dir, &run)?;
            write_report(&dir, &scenario, &run, None, &clock.now().to_rfc3339())?;
            write!(out, "{}", run.report.render())?;
            if run.report.failures > 0 {
                writeln!(err, "{} observation/perspective pairs failed", run.report.failures)?;
                return Ok(EXIT_FAILURE);
            }
            Ok(EXIT_OK)
        }
        Command::Query {
            scenario,
            query,
            out: dir,
            logical_clock,
        } => {
            let scenario = load(&scenario)?;
            if scenario.query(&query).is_none() {
                writeln!(err, "error: unknown query `{query}`")?;
                return Ok(EXIT_USAGE);
            }
            let clock = clock(logical_clock);
            let run = run_scenario(&scenario, Arc::clone(&clock), Some(&[query.as_str()]))?;
            write_encoding_artifacts(&dir, &run)?;
            write_query_artifacts(&dir, &run)?;
            write_report(&dir, &scenario, &run, None, &clock.now().to_rfc3339())?;
            match &run.results[0] {
                QueryResult::Resolved(o) => {
                    writeln!(
                        out,
                        "mode: {}, grounded: {{{}}}",
                        o.mode,
                        ordered(&o.graph, &o.grounded).join(", ")
                    )?;
                    for ext in &o.preferred {
                        writeln!(out, "preferred: {{{}}}", ordered(&o.graph, ext).join(", "))?;
                    }
                }
                QueryResult::NoProposals { .. } => writeln!(out, "mode: none, no perspective proposed")?,
            }
            Ok(EXIT_OK)
        }
        Command::Replay {
            scenario: path,
            out: dir,
            logical_clock,
        } => {
            let scenario = load(&path)?;
            let Some(expected) = scenario.expected.clone() else {
                writeln!(
                    err,
                    "error: {} has no `expected` section to replay against",
                    path.display()
                )?;
                return Ok(EXIT_USAGE);
            };
            let clock = clock(logical_clock);
            let run = run_scenario(&scenario, Arc::clone(&clock), None)?;
            let checks = check_expected(&expected, &run);
            if let Some(dir) = &dir {
                write_encoding_artifacts(dir, &run)?;
                write_query_artifacts(dir, &run)?;
                write_report(dir, &scenario, &run, Some(&checks), &clock.now().to_rfc3339())?;
            }
            write!(
                out,
                "{}\n{}\n{}",
                run.report.render(),
                render_query_table(&run.results),
                render_checks(&checks)
            )?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                Ok(EXIT_OK)
            } else {
                writeln!(err, "replay failed: {}", failed.join(", "))?;
                Ok(EXIT_FAILURE)
            }
        }
        Command::Solve { af, semantics } => {
            let text =
                std::fs::read_to_string(&af).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", af.display()))?;
            let graph = match parse_af(&text) {
                Ok(g) => g,
                Err(e) => {
                    writeln!(err, "error: {}: {e}", af.display())?;
                    return Ok(EXIT_FAILURE);
                }
            };
            for line in solve(&graph, semantics) {
                writeln!(out, "{line}")?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Extensions as space-separated member lists in declaration order.
pub fn solve(graph: &AttackGraph, semantics: Semantics) -> Vec<String> {
    let extensions = match semantics {
        Semantics::Grounded => vec![graph.grounded_extension()],
        Semantics::Preferred => graph.preferred_extensions(),
    };
    extensions.iter().map(|e| ordered(graph, e).join(" ")).collect()
}
