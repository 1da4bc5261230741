use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tpsmc_core::kernel::Rational;

use crate::commands::{self, TraceOptions, VerifyOptions};
use crate::diagnostics::{CliError, Exit};
use crate::manifest::{Manifest, SmcOverrides};

/// Statistical model checking of state charts and channel systems.
#[derive(Debug, Parser)]
#[command(name = "tpsmc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and compile the models and properties of a manifest
    Validate {
        manifest: PathBuf,
        /// Machine-readable diagnostics
        #[arg(long)]
        json: bool,
    },
    /// Write simulated runs as JSON lines, one file per run
    Trace {
        manifest: PathBuf,
        /// Seed (default: $SMC_SEED, then the manifest, then 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Number of runs
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Steps per run
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Estimate the probability of every property
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub manifest: PathBuf,
    /// Half-width of the confidence interval, below 1/2
    #[arg(long)]
    pub epsilon: Option<Rational>,
    /// One minus the confidence level
    #[arg(long)]
    pub delta: Option<Rational>,
    /// Seed (default: $SMC_SEED, then the manifest, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    pub workers: Option<usize>,
    /// Stop after this many runs even if the sample bound is not met
    #[arg(long)]
    pub max_samples: Option<u64>,
    /// Steps per run
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Print the report as JSON
    #[arg(long)]
    pub json: bool,
    /// Also write the report JSON to this file
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the compiled channel system to this file
    #[arg(long)]
    pub emit_model: Option<PathBuf>,
    /// Include wall-clock time in the report
    #[arg(long)]
    pub timing: bool,
}

/// What a command printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub exit: Exit,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output {
            exit: Exit::Ok,
            stdout,
            stderr: String::new(),
        }
    }

    fn failed(e: &CliError, json: bool) -> Self {
        if json {
            let body = json!({"ok": false, "diagnostics": e.diagnostics()});
            Output {
                exit: e.exit(),
                stdout: pretty(&body),
                stderr: String::new(),
            }
        } else {
            Output {
                exit: e.exit(),
                stdout: String::new(),
                stderr: format!("{e}\n"),
            }
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

/// The seed in effect: flag, then `SMC_SEED`, then the manifest.
fn seed(flag: Option<u64>, env: Option<&str>, manifest: &Manifest) -> Result<Option<u64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match env {
        Some(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("SMC_SEED must be an unsigned integer, got `{s}`"))),
        None => Ok(manifest.smc.seed),
    }
}

/// Runs a parsed command line. `env_seed` is the value of `SMC_SEED`, if set.
pub fn execute(cli: Cli, env_seed: Option<&str>) -> Output {
    match cli.command {
        Command::Validate { manifest, json } => match commands::validate(&manifest) {
            Ok(summary) if json => Output::ok(pretty(&json!({"ok": true, "diagnostics": [], "summary": summary}))),
            Ok(s) => Output::ok(format!(
                "ok: {} graph(s), {} location(s), {} transition(s), {} channel(s), {} propert{}\n",
                s.graphs.len(),
                s.locations,
                s.transitions,
                s.channels,
                s.properties.len(),
                if s.properties.len() == 1 { "y" } else { "ies" }
            )),
            Err(e) => Output::failed(&e, json),
        },
        Command::Trace {
            manifest,
            seed: flag,
            count,
            out,
            max_steps,
        } => {
            let run = || -> Result<String, CliError> {
                let m = Manifest::load(&manifest)?;
                let seed = seed(flag, env_seed, &m)?.unwrap_or(0);
                let project = commands::load(m)?;
                let files = commands::trace(
                    &project,
                    &TraceOptions {
                        seed,
                        count,
                        out,
                        max_steps,
                    },
                )?;
                Ok(files.iter().map(|p| format!("{}\n", p.display())).collect())
            };
            match run() {
                Ok(s) => Output::ok(s),
                Err(e) => Output::failed(&e, false),
            }
        }
        Command::Verify(args) => verify(args, env_seed),
    }
}

fn verify(args: VerifyArgs, env_seed: Option<&str>) -> Output {
    let json = args.json;
    let run = || -> Result<Output, CliError> {
        let m = Manifest::load(&args.manifest)?;
        let flags = SmcOverrides {
            epsilon: args.epsilon,
            delta: args.delta,
            max_samples: args.max_samples,
            max_steps: args.max_steps,
            seed: seed(args.seed, env_seed, &m)?,
            workers: args.workers,
        };
        // Check the configuration before the (possibly slow) model compilation.
        m.smc_config(&flags).validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let project = commands::load(m)?;
        let report = commands::verify(
            &project,
            &VerifyOptions {
                flags,
                emit_model: args.emit_model.clone(),
                timing: args.timing,
            },
        )?;
        let body = commands::report_json(&report) + "\n";
        if let Some(p) = &args.output {
            std::fs::write(p, &body).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
        }
        Ok(Output {
            exit: if report.budget_exhausted { Exit::BudgetExhausted } else { Exit::Ok },
            stdout: if json { body } else { commands::report_table(&report) },
            stderr: String::new(),
        })
    };
    run().unwrap_or_else(|e| Output::failed(&e, json))
}

/// Parses `args` (program name first) and runs the command. Argument errors
/// exit with the usage code; `--help` and `--version` succeed.
pub fn run<I, T>(args: I, env_seed: Option<&str>) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, env_seed),
        Err(e) => {
            let text = e.render().to_string();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Output::ok(text),
                _ => Output {
                    exit: Exit::Usage,
                    stdout: String::new(),
                    stderr: text,
                },
            }
        }
    }
}
