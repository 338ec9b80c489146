//! Command-line front end: `run`, `catalog`, `screen`, `validate`.
//!
//! Exit codes: 0 success, 1 a check failed, 2 parse or usage error,
//! 3 a hypothesis of the requested check does not hold, 4 any other error.

mod run;
mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use run::{execute, Check, CheckVerdict, Outcome, SCHEMA};
pub use spec::{load, parse_pair, ExperimentSpec, Kind, Loaded, Source};

use crate::catalog;
use crate::compsys::{separativity, System};
use crate::error::{Error, Result};
use crate::expansion::{irrationality_screen, parse_context_file, ExpansionContext, DEFAULT_SCREEN_BUDGET};
use crate::structures::{parse_structure, write_structure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_OTHER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sparse01", version, about = "Extension counts and component census checks for sparse random structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML spec.
    Run {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Output directory (default: the [output] dir of the spec file, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in contexts, pairs or systems, or print one of them.
    Catalog {
        kind: String,
        /// Print the named entry in its file format.
        #[arg(long)]
        show: Option<String>,
    },
    /// Run the irrationality screen on a context file or catalog context.
    Screen {
        /// Context file.
        file: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<String>,
        #[arg(long, default_value_t = 6)]
        size_bound: usize,
        #[arg(long, default_value_t = DEFAULT_SCREEN_BUDGET)]
        budget: usize,
    },
    /// Parse a file and print it back in normal form.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: FileKind,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FileKind {
    Context,
    Structure,
    Pair,
    System,
    Spec,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::InvalidArgument(_) => EXIT_PARSE,
        Error::Hypothesis(_) | Error::Irrationality { .. } | Error::Degenerate { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_OTHER,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Run the CLI on `args` (program name first), writing to `out`/`err`;
/// returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run {
            spec,
            seed,
            trials,
            n,
            out: dir,
        } => {
            let src = read(&spec)?;
            let mut parsed = ExperimentSpec::parse(&src).map_err(|e| with_file(&spec, e))?;
            if let Some(s) = seed {
                parsed.experiment.seed = s;
            }
            if let Some(t) = trials {
                parsed.experiment.trials = t;
            }
            if n.is_some() {
                parsed.experiment.n = n;
            }
            let base_dir = spec.parent().unwrap_or(Path::new("."));
            let dir = dir
                .or_else(|| parsed.output.dir.as_ref().map(|d| base_dir.join(d)))
                .unwrap_or_else(|| PathBuf::from("out"));
            let loaded = load(parsed, base_dir)?;
            let outcome = execute(&loaded)?;
            outcome.write(&dir)?;
            write!(out, "{}", outcome.report())?;
            writeln!(out, "artifacts: {}", dir.display())?;
            Ok(if outcome.failed() { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        Command::Catalog { kind, show } => {
            match show {
                None => {
                    for l in catalog::listing(&kind)? {
                        writeln!(out, "{:<20} {}", l.name, l.description)?;
                    }
                }
                Some(name) => {
                    let text = match kind.as_str() {
                        "contexts" => catalog::context(&name)?.to_text(),
                        "pairs" => catalog::pair(&name)?.to_text(),
                        "systems" => catalog::system(&name)?.system.to_text(),
                        other => return Err(Error::invalid(format!("unknown catalog kind {other:?}"))),
                    };
                    write!(out, "{text}")?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Screen {
            file,
            catalog: name,
            size_bound,
            budget,
        } => {
            let (base, plus) = match (file, name) {
                (Some(f), None) => parse_context_file(&read(&f)?).map_err(|e| with_file(&f, e))?,
                (None, Some(n)) => {
                    let c = catalog::context(&n)?;
                    (c.base, c.plus)
                }
                _ => return Err(Error::invalid("screen takes a context file or --catalog NAME")),
            };
            let plus = plus.unwrap_or_else(|| ExpansionContext::trivial(base));
            let r = irrationality_screen(&plus, size_bound, budget)?;
            writeln!(
                out,
                "size bound {}, budget {}: {} zero signatures, {} violations, {} unresolved",
                r.size_bound,
                r.budget,
                r.zero_signatures,
                r.violations.len(),
                r.unresolved.len()
            )?;
            for v in &r.violations {
                writeln!(
                    out,
                    "violation ({:?}): {} new elements, small side {:?}",
                    v.kind, v.signature.new_elements, v.small
                )?;
                for line in v.witness.lines() {
                    writeln!(out, "    {line}")?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Validate { file, kind } => {
            let src = read(&file)?;
            let text = (|| -> Result<String> {
                Ok(match kind {
                    FileKind::Context => match parse_context_file(&src)? {
                        (_, Some(p)) => p.to_text(),
                        (b, None) => b.to_text(),
                    },
                    FileKind::Structure => write_structure(&parse_structure(&src)?),
                    FileKind::Pair => {
                        let p = parse_pair(&src)?;
                        let small: Vec<String> = p.small().iter().map(|x| x.to_string()).collect();
                        format!("{}small {}\n", write_structure(&p.big), small.join(" "))
                    }
                    FileKind::System => {
                        let s = System::parse(&src)?;
                        let sep = separativity(&s);
                        format!("{}# level: {}\n", s.to_text(), sep.level.as_str())
                    }
                    FileKind::Spec => {
                        let s = ExperimentSpec::parse(&src)?;
                        format!("ok: {} experiment\n", s.experiment.kind.as_str())
                    }
                })
            })()
            .map_err(|e| with_file(&file, e))?;
            write!(out, "{text}")?;
            Ok(EXIT_OK)
        }
    }
}
