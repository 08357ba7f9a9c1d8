use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sepclass_core::harness::{build_corpus, replay, run, verify, ConstructionTrace, VerificationReport};
use sepclass_core::{load_scenario, Error};
use walkdir::WalkDir;

/// Run, verify and replay separating-class constructions.
#[derive(Parser)]
#[command(name = "sepclass", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (or every scenario below a directory) and verify the trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's horizon; scripted events after it are dropped.
        #[arg(long)]
        horizon: Option<usize>,
        /// Trace file, or a directory in batch mode.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Reports as JSON lines.
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Stop at the first scenario that does not pass.
        #[arg(long)]
        fail_fast: bool,
    },
    /// Verify a trace (or every trace below a directory).
    Verify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        report_out: Option<PathBuf>,
        #[arg(long)]
        fail_fast: bool,
    },
    /// Re-run each trace's embedded scenario and compare the bytes.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        fail_fast: bool,
    },
    /// Write the shipped corpus and its manifest.
    Corpus {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit statuses, worst last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Pass = 0,
    Violation = 1,
    Usage = 2,
    Hypothesis = 3,
}

fn status_of(err: &anyhow::Error) -> Status {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::Schema { .. } | Error::Io(_)) => Status::Usage,
        Some(Error::Hypothesis(_)) => Status::Hypothesis,
        Some(_) => Status::Violation,
        None => Status::Usage,
    }
}

/// `path` itself, or every `.jsonl` file below it in name order.
fn inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "jsonl") {
            files.push(entry.into_path());
        }
    }
    if files.is_empty() {
        bail!("no .jsonl files below {}", path.display());
    }
    Ok(files)
}

/// Where the trace for `file` goes: `out` itself for a single input, else
/// the same relative path below `out`.
fn trace_path(out: &Path, root: &Path, file: &Path, batch: bool) -> PathBuf {
    if !batch {
        return out.to_path_buf();
    }
    out.join(file.strip_prefix(root).unwrap_or(file))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct Reports(Option<fs::File>);

impl Reports {
    fn open(path: Option<&Path>) -> Result<Self> {
        Ok(Reports(match path {
            Some(p) => Some(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => None,
        }))
    }

    fn push(&mut self, file: &Path, report: &VerificationReport) -> Result<()> {
        if let Some(f) = &mut self.0 {
            let line = serde_json::json!({ "file": file.display().to_string(), "report": report });
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn run_one(file: &Path, horizon: Option<usize>) -> Result<(ConstructionTrace, VerificationReport)> {
    let mut sc = load_scenario(file)?;
    if let Some(h) = horizon {
        sc = sc.with_horizon(h)?;
    }
    let trace = run(&sc)?;
    let report = verify(&trace);
    Ok((trace, report))
}

fn report_line(file: &Path, report: &VerificationReport) {
    let status = if report.passed() { "PASS" } else { "FAIL" };
    println!("{status} {}", file.display());
    if !report.passed() {
        print!("{}", report.render());
    }
}

fn cmd_run(scenario: &Path, horizon: Option<usize>, trace_out: Option<&Path>, report_out: Option<&Path>, fail_fast: bool) -> Result<Status> {
    let files = inputs(scenario)?;
    let batch = scenario.is_dir();
    let mut reports = Reports::open(report_out)?;
    let mut worst = Status::Pass;
    for file in &files {
        let status = match run_one(file, horizon) {
            Ok((trace, report)) => {
                if let Some(out) = trace_out {
                    write_file(&trace_path(out, scenario, file, batch), &trace.to_jsonl())?;
                }
                if batch {
                    report_line(file, &report);
                } else {
                    print!("{}", report.render());
                }
                reports.push(file, &report)?;
                if report.passed() {
                    Status::Pass
                } else {
                    Status::Violation
                }
            }
            Err(e) => {
                println!("ERROR {}: {e:#}", file.display());
                status_of(&e)
            }
        };
        worst = worst.max(status);
        if fail_fast && status != Status::Pass {
            break;
        }
    }
    Ok(worst)
}

fn read_trace(file: &Path) -> Result<ConstructionTrace> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    Ok(ConstructionTrace::parse(&text)?)
}

fn cmd_verify(path: &Path, report_out: Option<&Path>, fail_fast: bool) -> Result<Status> {
    let files = inputs(path)?;
    let mut reports = Reports::open(report_out)?;
    let mut worst = Status::Pass;
    for file in &files {
        let status = match read_trace(file) {
            Ok(trace) => {
                let report = verify(&trace);
                if files.len() == 1 {
                    print!("{}", report.render());
                } else {
                    report_line(file, &report);
                }
                reports.push(file, &report)?;
                if report.passed() {
                    Status::Pass
                } else {
                    Status::Violation
                }
            }
            Err(e) => {
                println!("ERROR {}: {e:#}", file.display());
                status_of(&e)
            }
        };
        worst = worst.max(status);
        if fail_fast && status != Status::Pass {
            break;
        }
    }
    Ok(worst)
}

fn cmd_replay(path: &Path, fail_fast: bool) -> Result<Status> {
    let mut worst = Status::Pass;
    for file in inputs(path)? {
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let status = match replay(&text) {
            Ok(r) if r.identical => {
                println!("IDENTICAL {}", file.display());
                Status::Pass
            }
            Ok(r) => {
                println!("DIFFERS {} first at line {}", file.display(), r.first_difference.unwrap_or(0));
                Status::Violation
            }
            Err(e) => {
                let e = anyhow::Error::from(e);
                println!("ERROR {}: {e:#}", file.display());
                status_of(&e)
            }
        };
        worst = worst.max(status);
        if fail_fast && status != Status::Pass {
            break;
        }
    }
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run {
            scenario,
            horizon,
            trace_out,
            report_out,
            fail_fast,
        } => cmd_run(scenario, *horizon, trace_out.as_deref(), report_out.as_deref(), *fail_fast),
        Command::Verify { trace, report_out, fail_fast } => cmd_verify(trace, report_out.as_deref(), *fail_fast),
        Command::Replay { trace, fail_fast } => cmd_replay(trace, *fail_fast),
        Command::Corpus { out } => build_corpus()
            .and_then(|c| c.write(out))
            .map(|()| Status::Pass)
            .map_err(anyhow::Error::from),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(status_of(&e) as u8)
        }
    }
}
