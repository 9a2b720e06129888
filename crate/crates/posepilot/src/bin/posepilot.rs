//! Command-line front end. Exit status: 0 ok, 1 invalid input, 2 simulation
//! fault, 3 I/O failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posepilot::config::ConfigError;
use posepilot::gateway::{Gateway, ServeOptions};
use posepilot::logfmt::{self, LogFormat};
use posepilot::report::{self, Report};
use posepilot::sim::{simulate, SimOptions};
use posepilot::trace::Trace;
use posepilot::LoadedConfig;
use posepilot_core::session::{replay, InputSource};
use posepilot_core::Maze;
use serde_json::json;

#[derive(Parser)]
#[command(name = "posepilot", version, about = "Pose-driven quadrotor teleoperation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play an input trace through the simulator and write the run log.
    Simulate(SimulateArgs),
    /// Re-simulate a run log and compare against its recorded odometry.
    Replay(ReplayArgs),
    /// Check config, maze, trace, log or questionnaire files without running.
    Validate(ValidateArgs),
    /// Build workload and traversal-time tables from logs and questionnaires.
    Report(ReportArgs),
    /// Start the websocket gateway for a live operator session.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// TOML config; built-in defaults and the reference maze when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// JSONL input trace; without one the vehicle just hovers.
    #[arg(long, short)]
    trace: Option<PathBuf>,
    /// Where to write the run log.
    #[arg(long, short)]
    out: PathBuf,
    /// Log format (jsonl or tsv); guessed from the output extension by default.
    #[arg(long, value_parser = parse_format)]
    format: Option<LogFormat>,
    /// Simulated seconds; default is the trace length plus hold and decay.
    #[arg(long)]
    duration: Option<f64>,
    /// Participant id recorded in the log header.
    #[arg(long)]
    participant: Option<String>,
    /// Override the configured input source (pose, joystick, trace).
    #[arg(long, value_parser = parse_source)]
    source: Option<InputSource>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Run log to replay.
    #[arg(long, short)]
    log: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    maze: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    participants: Option<PathBuf>,
    #[arg(long)]
    tlx: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of run logs (.jsonl / .tsv).
    #[arg(long)]
    logs: Option<PathBuf>,
    /// Participants CSV.
    #[arg(long)]
    participants: Option<PathBuf>,
    /// TLX questionnaire CSV.
    #[arg(long)]
    tlx: Option<PathBuf>,
    /// Output directory for the bundle.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value = "127.0.0.1:8765")]
    bind: String,
    /// Shared session token clients must send in hello.
    #[arg(long)]
    token: Option<String>,
    #[arg(long)]
    participant: Option<String>,
    /// Directory for run logs and submitted questionnaires.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Stop after this many simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
}

fn parse_format(s: &str) -> Result<LogFormat, String> {
    s.parse()
}

fn parse_source(s: &str) -> Result<InputSource, String> {
    match s {
        "pose" => Ok(InputSource::Pose),
        "joystick" => Ok(InputSource::Joystick),
        "trace" => Ok(InputSource::Trace),
        other => Err(format!("unknown input source `{other}` (pose, joystick or trace)")),
    }
}

enum Failure {
    Invalid(String),
    Fault(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Fault(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Fault(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<report::ReportError> for Failure {
    fn from(e: report::ReportError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_config(arg: &ConfigArg) -> Result<LoadedConfig, Failure> {
    match &arg.config {
        Some(path) => Ok(LoadedConfig::load(path)?),
        None => Ok(LoadedConfig::defaults()),
    }
}

fn load_trace(path: &Path) -> Result<Trace, Failure> {
    Trace::parse(&read(path)?).map_err(|e| Failure::Invalid(format!("{}:{e}", path.display())))
}

fn load_log(path: &Path) -> Result<posepilot_core::RunLog, Failure> {
    logfmt::import(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let loaded = load_config(&a.config)?;
    let trace = match &a.trace {
        Some(p) => load_trace(p)?,
        None => Trace::default(),
    };
    let ticks = match a.duration {
        Some(d) if d >= 0.0 && d.is_finite() => Some((d / loaded.config.reference_period()).round() as u64),
        Some(d) => return Err(Failure::Invalid(format!("--duration {d} must be a non-negative number of seconds"))),
        None => None,
    };
    let opts = SimOptions { participant: a.participant, ticks, source: a.source };
    let outcome = simulate(&loaded, &trace, &opts);
    let format = a.format.unwrap_or_else(|| LogFormat::from_path(&a.out));
    write(&a.out, &logfmt::export(&outcome.log, format))?;
    println!("{}", json!({ "summary": outcome.summary, "log": a.out }));
    match outcome.summary.fault {
        Some(fault) => Err(Failure::Fault(format!("vehicle halted: {fault}"))),
        None => Ok(()),
    }
}

fn cmd_replay(a: ReplayArgs) -> Result<(), Failure> {
    let loaded = load_config(&a.config)?;
    let log = load_log(&a.log)?;
    let r = replay(&log, &loaded.config, &loaded.maze, &loaded.digest).map_err(|e| match e {
        posepilot_core::session::ReplayError::Halted { .. } => Failure::Fault(e.to_string()),
        _ => Failure::Invalid(e.to_string()),
    })?;
    if r.truncated {
        eprintln!("note: log is truncated, replayed its {}-record prefix only", log.records.len());
    }
    println!(
        "{}",
        json!({
            "records": r.trajectory.len(),
            "max_deviation": r.max_deviation,
            "bit_identical": r.bit_identical,
            "truncated": r.truncated,
            "events_match": r.events == log.events,
        })
    );
    if r.bit_identical {
        Ok(())
    } else {
        Err(Failure::Fault(format!("replay deviates from the recording by up to {}", r.max_deviation)))
    }
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let loaded = load_config(&a.config)?;
    println!("config ok: digest {}", loaded.digest);
    if let Some(p) = &a.maze {
        let m = Maze::parse(&read(p)?).map_err(|e| Failure::Invalid(format!("{}:{e}", p.display())))?;
        println!("maze ok: {} ({}x{}, {} walls)", m.name, m.rows, m.cols, m.wall_count());
    }
    if let Some(p) = &a.trace {
        let t = load_trace(p)?;
        println!("trace ok: {} entries over {} s", t.entries.len(), t.end_time());
    }
    if let Some(p) = &a.log {
        let log = load_log(p)?;
        let note = if log.complete { "" } else { " (truncated)" };
        println!("log ok: {} records, {} events{note}", log.records.len(), log.events.len());
        if log.header.config_digest != loaded.digest {
            println!("note: log was recorded with config {}", log.header.config_digest);
        }
    }
    if let Some(p) = &a.participants {
        println!("participants ok: {} rows", report::read_participants(p)?.len());
    }
    if let Some(p) = &a.tlx {
        println!("tlx ok: {} rows", report::read_tlx(p)?.len());
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), Failure> {
    let mut warnings = Vec::new();
    let participants = match &a.participants {
        Some(p) => report::read_participants(p)?,
        None => Vec::new(),
    };
    let tlx = match &a.tlx {
        Some(p) => report::read_tlx(p)?,
        None => Vec::new(),
    };
    let logs = match &a.logs {
        Some(dir) => report::read_logs(dir)?,
        None => Vec::new(),
    };
    let runs = report::summarize_runs(&logs, &mut warnings);
    let report = Report::build(&participants, &tlx, &runs, warnings)?;
    report.write_bundle(&a.out)?;
    print!("{}", report.render_text());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn append_tlx(path: &Path, records: &[posepilot_core::metrics::TlxRecord]) -> Result<(), Failure> {
    let io = |e: &dyn std::fmt::Display| Failure::Io(format!("{}: {e}", path.display()));
    let fresh = !path.exists();
    let file = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| io(&e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

fn cmd_serve(a: ServeArgs) -> Result<(), Failure> {
    let loaded = load_config(&a.config)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::Io(format!("{}: {e}", a.out_dir.display())))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let who = a.participant.as_deref().unwrap_or("anon");
    let log_path = a.out_dir.join(format!("{stamp}-{who}.jsonl"));
    let opts = ServeOptions {
        bind: a.bind,
        token: a.token,
        participant: a.participant,
        log_path: Some(log_path.clone()),
        duration: a.duration,
        ..ServeOptions::default()
    };
    let gateway = Gateway::start(loaded, opts).map_err(|e| Failure::Io(format!("cannot start gateway: {e}")))?;
    println!("listening on ws://{}", gateway.local_addr());
    let _ = std::io::stdout().flush();
    let outcome = gateway.wait().map_err(|e| Failure::Io(format!("session ended with an I/O error: {e}")))?;
    if !outcome.tlx.is_empty() {
        append_tlx(&a.out_dir.join("tlx.csv"), &outcome.tlx)?;
    }
    println!(
        "{}",
        json!({
            "log": log_path,
            "ticks": outcome.log.records.len(),
            "traversal_time": outcome.log.traversal_time(),
            "collisions": outcome.log.collision_count(),
            "tlx_records": outcome.tlx.len(),
            "dropped_frames": outcome.dropped_frames,
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Report(a) => cmd_report(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
