//! Experiment reports: questionnaire tables in, text tables and plot-ready
//! TSV columns out.
//!
//! Participants CSV columns: `id, age, gender, uav_experience, athlete,
//! pc_games, console, vr_ar` (yes/no answers). TLX CSV columns:
//! `participant_id, modality, mental, physical, temporal, performance,
//! effort, frustration`. Run logs are paired to participants through the
//! `participant` field of their header.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use posepilot_core::metrics::{
    rtlx, subscale_means, summarize_ages, time_differences, MetricsError, Modality, ParticipantRecord, RunSummary,
    TlxRecord, UavExperience, SUBSCALES,
};
use posepilot_core::RunLog;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Table { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: crate::logfmt::LogFormatError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl ReportError {
    pub fn is_io(&self) -> bool {
        matches!(self, ReportError::Io { .. })
    }
}

#[derive(Deserialize)]
struct ParticipantRow {
    id: String,
    age: String,
    gender: String,
    uav_experience: String,
    athlete: String,
    pc_games: String,
    console: String,
    vr_ar: String,
}

fn yes_no(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "1" => Ok(true),
        "no" | "n" | "false" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a yes/no answer")),
    }
}

fn read_table<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(u64, T)>, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let table_err = |line, message| ReportError::Table { path: path.to_path_buf(), line, message };
    let headers = reader.headers().map_err(|e| table_err(1, e.to_string()))?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| table_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record.deserialize(Some(&headers)).map_err(|e| {
            let message = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            table_err(line, message)
        })?;
        rows.push((line, row));
    }
    Ok(rows)
}

pub fn read_participants(path: &Path) -> Result<Vec<ParticipantRecord>, ReportError> {
    let table_err = |line, message: String| ReportError::Table { path: path.to_path_buf(), line, message };
    read_table::<ParticipantRow>(path)?
        .into_iter()
        .map(|(line, r)| {
            let age = r.age.parse::<u32>().ok().filter(|a| *a > 0);
            let age = age.ok_or_else(|| table_err(line, format!("age `{}` is not a positive integer", r.age)))?;
            let uav_experience = r
                .uav_experience
                .parse::<UavExperience>()
                .map_err(|e| table_err(line, format!("uav_experience: {e}")))?;
            let answer = |field: &str, v: &str| yes_no(v).map_err(|e| table_err(line, format!("{field}: {e}")));
            Ok(ParticipantRecord {
                id: r.id,
                age,
                gender: r.gender,
                uav_experience,
                athlete: answer("athlete", &r.athlete)?,
                pc_games: answer("pc_games", &r.pc_games)?,
                console: answer("console", &r.console)?,
                vr_ar: answer("vr_ar", &r.vr_ar)?,
            })
        })
        .collect()
}

pub fn read_tlx(path: &Path) -> Result<Vec<TlxRecord>, ReportError> {
    read_table::<TlxRecord>(path)?
        .into_iter()
        .map(|(line, r)| {
            r.validate().map_err(|e| ReportError::Table { path: path.to_path_buf(), line, message: e.to_string() })?;
            Ok(r)
        })
        .collect()
}

/// Every `.jsonl` / `.tsv` log directly inside `dir`, in file-name order.
pub fn read_logs(dir: &Path) -> Result<Vec<(PathBuf, RunLog)>, ReportError> {
    let io_err = |source| ReportError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("jsonl" | "tsv")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|source| ReportError::Io { path: p.clone(), source })?;
            let log = crate::logfmt::import(&text).map_err(|source| ReportError::Log { path: p.clone(), source })?;
            Ok((p, log))
        })
        .collect()
}

/// Turn logs into run summaries, skipping (with a warning) those that cannot
/// be attributed.
pub fn summarize_runs(logs: &[(PathBuf, RunLog)], warnings: &mut Vec<String>) -> Vec<RunSummary> {
    let mut runs = Vec::new();
    for (path, log) in logs {
        let name = path.display();
        let Some(participant) = log.header.participant.clone() else {
            warnings.push(format!("{name}: no participant in the log header, skipped"));
            continue;
        };
        let Ok(modality) = log.header.modality.parse::<Modality>() else {
            warnings.push(format!("{name}: modality `{}` is neither pose nor joystick, skipped", log.header.modality));
            continue;
        };
        if !log.complete {
            warnings.push(format!("{name}: log is truncated"));
        }
        let traversal_time = log.traversal_time();
        if traversal_time.is_none() {
            warnings.push(format!("{name}: run never reached the finish gate"));
        }
        runs.push(RunSummary {
            participant_id: participant,
            modality,
            traversal_time,
            collision_count: log.collision_count(),
        });
    }
    runs
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeDifference {
    pub participant: String,
    pub joystick: f64,
    pub pose: f64,
    /// `joystick - pose`, seconds.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    /// `(n, mean age, sample std)`.
    pub population: Option<(usize, f64, f64)>,
    pub tlx: Vec<TlxRecord>,
    pub time_differences: Vec<TimeDifference>,
    pub subscale_means: BTreeMap<Modality, [f64; 6]>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn build(
        participants: &[ParticipantRecord],
        tlx: &[TlxRecord],
        runs: &[RunSummary],
        mut warnings: Vec<String>,
    ) -> Result<Report, ReportError> {
        let population = match summarize_ages(participants) {
            Ok((mean, std)) => Some((participants.len(), mean, std)),
            Err(MetricsError::TooFewSamples(n)) => {
                warnings.push(format!("population statistics need at least 2 participants, have {n}"));
                None
            }
            Err(e) => return Err(e.into()),
        };

        let mut tlx = tlx.to_vec();
        for r in &tlx {
            r.validate()?;
        }
        tlx.sort_by(|a, b| (&a.participant_id, a.modality).cmp(&(&b.participant_id, b.modality)));
        if tlx.is_empty() {
            warnings.push("no TLX records".into());
        }

        let diffs = time_differences(runs)?;
        let finished = |id: &str, m: Modality| {
            runs.iter().find(|r| r.participant_id == id && r.modality == m).and_then(|r| r.traversal_time)
        };
        let time_differences = diffs
            .into_iter()
            .map(|(participant, difference)| TimeDifference {
                joystick: finished(&participant, Modality::Joystick).unwrap_or(f64::NAN),
                pose: finished(&participant, Modality::Pose).unwrap_or(f64::NAN),
                participant,
                difference,
            })
            .collect::<Vec<_>>();
        if runs.is_empty() {
            warnings.push("no run logs: time-difference table is empty".into());
        }

        let mut means = BTreeMap::new();
        for m in [Modality::Pose, Modality::Joystick] {
            match subscale_means(&tlx, m) {
                Ok(v) => {
                    means.insert(m, v);
                }
                Err(MetricsError::NoRecords(_)) if !tlx.is_empty() => {
                    warnings.push(format!("no TLX records for {m}"));
                }
                Err(MetricsError::NoRecords(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Report { population, tlx, time_differences, subscale_means: means, warnings })
    }

    fn rtlx_by_participant(&self) -> BTreeMap<&str, [Option<f64>; 2]> {
        let mut out: BTreeMap<&str, [Option<f64>; 2]> = BTreeMap::new();
        for r in &self.tlx {
            out.entry(r.participant_id.as_str()).or_default()[r.modality as usize] = rtlx(r).ok();
        }
        out
    }

    /// Human-readable tables.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        s.push_str("Population\n");
        match self.population {
            Some((n, mean, std)) => {
                let _ = writeln!(s, "  participants  {n}\n  age mean      {mean:.2}\n  age std       {std:.2}");
            }
            None => s.push_str("  (not available)\n"),
        }

        s.push_str("\nOverall RTLX\n");
        let _ = writeln!(s, "  {:<12} {:>8} {:>8}", "participant", "pose", "joystick");
        for (id, [pose, joy]) in self.rtlx_by_participant() {
            let _ = writeln!(s, "  {:<12} {:>8} {:>8}", id, cell(pose), cell(joy));
        }

        s.push_str("\nTLX subscales\n");
        let _ = write!(s, "  {:<12} {:<9}", "participant", "modality");
        for name in SUBSCALES {
            let _ = write!(s, " {name:>11}");
        }
        s.push('\n');
        for r in &self.tlx {
            let _ = write!(s, "  {:<12} {:<9}", r.participant_id, r.modality.as_str());
            for v in r.ratings() {
                let _ = write!(s, " {v:>11.2}");
            }
            s.push('\n');
        }

        s.push_str("\nSubscale means\n");
        let _ = writeln!(s, "  {:<12} {:>8} {:>8}", "subscale", "pose", "joystick");
        for (i, name) in SUBSCALES.iter().enumerate() {
            let get = |m| self.subscale_means.get(&m).map(|v| v[i]);
            let _ = writeln!(s, "  {:<12} {:>8} {:>8}", name, cell(get(Modality::Pose)), cell(get(Modality::Joystick)));
        }

        s.push_str("\nTraversal time difference (joystick - pose), s\n");
        let _ = writeln!(s, "  {:<12} {:>9} {:>9} {:>9}", "participant", "joystick", "pose", "diff");
        for d in &self.time_differences {
            let _ = writeln!(s, "  {:<12} {:>9.2} {:>9.2} {:>9.2}", d.participant, d.joystick, d.pose, d.difference);
        }

        if !self.warnings.is_empty() {
            s.push_str("\nWarnings\n");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        s
    }

    /// Plot-ready column files, keyed by file name.
    pub fn columns(&self) -> BTreeMap<&'static str, String> {
        let opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
        let mut files = BTreeMap::new();

        let mut pop = String::from("n\tage_mean\tage_std\n");
        if let Some((n, mean, std)) = self.population {
            let _ = writeln!(pop, "{n}\t{mean}\t{std}");
        }
        files.insert("population.tsv", pop);

        let mut overall = String::from("participant\tpose\tjoystick\n");
        for (id, [pose, joy]) in self.rtlx_by_participant() {
            let _ = writeln!(overall, "{id}\t{}\t{}", opt(pose), opt(joy));
        }
        files.insert("rtlx_overall.tsv", overall);

        let mut subs = format!("participant\tmodality\t{}\trtlx\n", SUBSCALES.join("\t"));
        for r in &self.tlx {
            let ratings: Vec<String> = r.ratings().iter().map(f64::to_string).collect();
            let _ =
                writeln!(subs, "{}\t{}\t{}\t{}", r.participant_id, r.modality, ratings.join("\t"), opt(rtlx(r).ok()));
        }
        files.insert("subscales.tsv", subs);

        let mut means = String::from("subscale\tpose\tjoystick\n");
        for (i, name) in SUBSCALES.iter().enumerate() {
            let get = |m| self.subscale_means.get(&m).map(|v| v[i]);
            let _ = writeln!(means, "{name}\t{}\t{}", opt(get(Modality::Pose)), opt(get(Modality::Joystick)));
        }
        files.insert("subscale_means.tsv", means);

        let mut diffs = String::from("participant\tjoystick\tpose\tdifference\n");
        for d in &self.time_differences {
            let _ = writeln!(diffs, "{}\t{}\t{}\t{}", d.participant, d.joystick, d.pose, d.difference);
        }
        files.insert("time_differences.tsv", diffs);
        files
    }

    /// Write `report.txt` and the column files into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        let io_err = |path: &Path, source| ReportError::Io { path: path.to_path_buf(), source };
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut written = Vec::new();
        let text = dir.join("report.txt");
        fs::write(&text, self.render_text()).map_err(|e| io_err(&text, e))?;
        written.push(text);
        for (name, body) in self.columns() {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| io_err(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
