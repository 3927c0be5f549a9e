//! Batch driver behind the `modal` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::diag::Code;
use crate::frontend::{self, FrontendError, Program};
use crate::grammar::TiGrammar;
use crate::oracle::{run_suite, SuiteConfig};
use crate::render;
use crate::scheduler::{check_program, CheckOptions, CheckReport};
use crate::tigrammar::{Defs, TiError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "modal",
    version,
    about = "Mode checker and body reordering for mini-HAL"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every mode declaration and print the emitted procedures.
    Check {
        file: PathBuf,
        /// Never insert init/1 calls.
        #[arg(long)]
        no_init: bool,
        /// Treat warnings as errors for the exit status.
        #[arg(long)]
        werror: bool,
        /// Skip parameter recovery at polymorphic calls.
        #[arg(long)]
        no_poly: bool,
        /// Only print diagnostics.
        #[arg(long)]
        quiet: bool,
    },
    /// Print rt(type, inst) in the grammar dump format.
    DumpTi {
        file: PathBuf,
        #[arg(long = "type")]
        ty: String,
        #[arg(long)]
        inst: String,
    },
    /// Run the grammar property suite against the brute-force oracle.
    Oracle {
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Frontend(#[from] FrontendError),
    #[error("{0}")]
    Definitions(#[from] TiError),
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Exit status for a finished check.
pub fn status(report: &CheckReport, werror: bool) -> i32 {
    if report.count(Code::I001) > 0 {
        EXIT_INTERNAL
    } else if report.has_errors() || (werror && report.has_warnings()) {
        EXIT_MODE
    } else {
        EXIT_OK
    }
}

/// Listing of every emitted procedure, in source order.
pub fn listing(prog: &Program, report: &CheckReport) -> String {
    let mut out = String::new();
    for p in &report.procedures {
        out.push_str(&render::procedure(prog, p));
    }
    out
}

pub fn check_source(src: &str, opts: CheckOptions) -> Result<(Program, CheckReport), CliError> {
    let prog = frontend::load(src)?;
    let report = check_program(&prog, opts)?;
    Ok((prog, report))
}

/// `rt(T, I)` for a type and instantiation written in source syntax,
/// resolved against the definitions in `src`.
pub fn rt_of(src: &str, ty: &str, inst: &str) -> Result<TiGrammar, CliError> {
    let probe = "dump_ti_probe__";
    let text = format!("{src}\n:- pred {probe}({ty}).\n:- mode {probe}({inst} -> {inst}).\n");
    let prog = frontend::load(&text)?;
    let defs = Defs::new(&prog)?;
    let pd = prog
        .preds
        .iter()
        .find(|p| p.name == probe)
        .expect("probe predicate");
    let (c, _) = pd.modes[0].pairs().remove(0);
    Ok(defs.rt(&pd.arg_types[0], &c)?)
}

pub fn dump_ti(src: &str, ty: &str, inst: &str) -> Result<String, CliError> {
    Ok(rt_of(src, ty, inst)?.dump())
}

pub fn run(cli: Cli) -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Check {
            file,
            no_init,
            werror,
            no_poly,
            quiet,
        } => {
            let opts = CheckOptions {
                init: !no_init,
                poly: !no_poly,
            };
            let src = match read(&file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INPUT;
                }
            };
            match check_source(&src, opts) {
                Ok((prog, report)) => {
                    if !quiet {
                        let _ = out.write_all(listing(&prog, &report).as_bytes());
                    }
                    let name = file.display();
                    for d in &report.diagnostics {
                        eprintln!("{name}:{d}");
                    }
                    status(&report, werror)
                }
                Err(e) => {
                    eprintln!("{}:{e}", file.display());
                    EXIT_INPUT
                }
            }
        }
        Command::DumpTi { file, ty, inst } => {
            let res = read(&file).and_then(|src| dump_ti(&src, &ty, &inst));
            match res {
                Ok(text) => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INPUT
                }
            }
        }
        Command::Oracle {
            depth,
            samples,
            seed,
        } => {
            let report = run_suite(&SuiteConfig {
                depth,
                samples,
                seed,
            });
            let _ = writeln!(out, "oracle: depth {depth}, {samples} samples, seed {seed}");
            for p in &report.properties {
                let _ = writeln!(
                    out,
                    "{:<22} pass {:>6}  fail {:>6}{}",
                    p.name,
                    p.passed,
                    p.failed,
                    p.first_failure
                        .map(|i| format!("  (first failing sample {i})"))
                        .unwrap_or_default()
                );
            }
            for (i, e) in &report.errors {
                let _ = writeln!(out, "sample {i}: {e}");
            }
            if report.failures() == 0 {
                EXIT_OK
            } else {
                EXIT_MODE
            }
        }
    }
}
