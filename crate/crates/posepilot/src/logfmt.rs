//! Run-log documents.
//!
//! Two lossless encodings of a [`RunLog`]:
//!
//! * JSONL: one JSON object per line tagged by `type` (`header`, `record`,
//!   `event`, `end`). The header comes first and `end` last; records and
//!   events may interleave, which is what a live session writes as it goes.
//! * TSV: `# key<TAB>json-value` header lines, a column header, one row per
//!   record, then `#event` rows and a `#end` row.
//!
//! A document without its end line is read as a truncated log
//! (`complete = false`); a partial final line is dropped. See
//! `docs/log-schema.md` for the field list.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use posepilot_core::math::{Quat, Vec3};
use posepilot_core::session::{LogHeader, LogRecord, LOG_SCHEMA_VERSION};
use posepilot_core::world::{RunEvent, RunEventKind};
use posepilot_core::{ReferenceVector, RunLog, Setpoints};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Tsv,
}

impl LogFormat {
    /// Guess from a file extension; anything but `.tsv` is JSONL.
    pub fn from_path(path: &std::path::Path) -> LogFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => LogFormat::Tsv,
            _ => LogFormat::Jsonl,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            LogFormat::Jsonl => "jsonl",
            LogFormat::Tsv => "tsv",
        }
    }
}

impl FromStr for LogFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" | "json" => Ok(LogFormat::Jsonl),
            "tsv" => Ok(LogFormat::Tsv),
            other => Err(format!("unknown log format `{other}` (expected jsonl or tsv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogFormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("empty log document")]
    Empty,
    #[error("unsupported log schema version {0} (this build reads {LOG_SCHEMA_VERSION})")]
    Schema(u32),
    #[error("line {line}: end marker counts {declared} {what}, document has {found}")]
    CountMismatch { line: usize, what: &'static str, declared: usize, found: usize },
}

fn line_err(line: usize, message: impl Into<String>) -> LogFormatError {
    LogFormatError::Line { line, message: message.into() }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(LogHeader),
    Record(LogRecord),
    Event(RunEvent),
    End { records: usize, events: usize },
}

pub fn export(log: &RunLog, format: LogFormat) -> String {
    match format {
        LogFormat::Jsonl => export_jsonl(log),
        LogFormat::Tsv => export_tsv(log),
    }
}

/// Read either format, sniffed from the first non-blank character.
pub fn import(text: &str) -> Result<RunLog, LogFormatError> {
    match text.trim_start().chars().next() {
        None => Err(LogFormatError::Empty),
        Some('{') => import_jsonl(text),
        Some(_) => import_tsv(text),
    }
}

fn json_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("log values serialize"));
    out.push('\n');
}

pub fn export_jsonl(log: &RunLog) -> String {
    let mut out = String::new();
    json_line(&mut out, &Line::Header(log.header.clone()));
    for r in &log.records {
        json_line(&mut out, &Line::Record(*r));
    }
    for e in &log.events {
        json_line(&mut out, &Line::Event(*e));
    }
    if log.complete {
        json_line(&mut out, &Line::End { records: log.records.len(), events: log.events.len() });
    }
    out
}

/// Yields `(line_no, text, terminated)` for every line.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str, bool)> {
    text.split_inclusive('\n').enumerate().map(|(i, raw)| {
        let terminated = raw.ends_with('\n');
        (i + 1, raw.trim_end_matches(['\n', '\r']), terminated)
    })
}

fn check_schema(header: &LogHeader) -> Result<(), LogFormatError> {
    if header.schema_version != LOG_SCHEMA_VERSION {
        return Err(LogFormatError::Schema(header.schema_version));
    }
    Ok(())
}

fn push_record(log: &mut RunLog, line: usize, r: LogRecord) -> Result<(), LogFormatError> {
    if let Some(prev) = log.records.last() {
        if r.tick <= prev.tick {
            return Err(line_err(line, format!("tick {} does not follow tick {}", r.tick, prev.tick)));
        }
    }
    log.records.push(r);
    Ok(())
}

fn check_end(log: &RunLog, line: usize, records: usize, events: usize) -> Result<(), LogFormatError> {
    if records != log.records.len() {
        return Err(LogFormatError::CountMismatch {
            line,
            what: "records",
            declared: records,
            found: log.records.len(),
        });
    }
    if events != log.events.len() {
        return Err(LogFormatError::CountMismatch { line, what: "events", declared: events, found: log.events.len() });
    }
    Ok(())
}

pub fn import_jsonl(text: &str) -> Result<RunLog, LogFormatError> {
    let mut log: Option<RunLog> = None;
    let mut ended_at = None;
    for (no, line, terminated) in numbered_lines(text) {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(end) = ended_at {
            return Err(line_err(no, format!("content after the end marker on line {end}")));
        }
        let parsed: Line = match serde_json::from_str(line) {
            Ok(l) => l,
            // a crash mid-write leaves a partial last line; keep the prefix
            Err(_) if !terminated && log.is_some() => break,
            Err(e) => return Err(line_err(no, e.to_string())),
        };
        match (parsed, log.as_mut()) {
            (Line::Header(h), None) => {
                check_schema(&h)?;
                let mut l = RunLog::new(h);
                l.complete = false;
                log = Some(l);
            }
            (Line::Header(_), Some(_)) => return Err(line_err(no, "second header")),
            (_, None) => return Err(line_err(no, "expected the header line first")),
            (Line::Record(r), Some(l)) => push_record(l, no, r)?,
            (Line::Event(e), Some(l)) => l.events.push(e),
            (Line::End { records, events }, Some(l)) => {
                check_end(l, no, records, events)?;
                l.complete = true;
                ended_at = Some(no);
            }
        }
    }
    log.ok_or(LogFormatError::Empty)
}

/// Appends JSONL lines as a live session produces them.
pub struct JsonlWriter<W: Write> {
    out: W,
    records: usize,
    events: usize,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(mut out: W, header: &LogHeader) -> io::Result<Self> {
        let mut s = String::new();
        json_line(&mut s, &Line::Header(header.clone()));
        out.write_all(s.as_bytes())?;
        Ok(JsonlWriter { out, records: 0, events: 0 })
    }

    /// One tick's record and the events it raised, then flush.
    pub fn append(&mut self, record: &LogRecord, events: &[RunEvent]) -> io::Result<()> {
        let mut s = String::new();
        json_line(&mut s, &Line::Record(*record));
        for e in events {
            json_line(&mut s, &Line::Event(*e));
        }
        self.records += 1;
        self.events += events.len();
        self.out.write_all(s.as_bytes())?;
        self.out.flush()
    }

    pub fn finish(mut self) -> io::Result<W> {
        let mut s = String::new();
        json_line(&mut s, &Line::End { records: self.records, events: self.events });
        self.out.write_all(s.as_bytes())?;
        self.out.flush()?;
        Ok(self.out)
    }
}

const TSV_COLUMNS: [&str; 23] = [
    "tick", "reset", "r1", "r2", "r3", "r4", "phi", "theta", "psi", "z_sp", "px", "py", "pz", "vx", "vy", "vz", "qw",
    "qx", "qy", "qz", "wx", "wy", "wz",
];

const HEADER_KEYS: [&str; 7] =
    ["schema_version", "config_digest", "modality", "maze_id", "start_wall_clock", "participant", "reference_rate"];

fn header_fields(h: &LogHeader) -> Vec<(&'static str, String)> {
    let v = serde_json::to_value(h).expect("header serializes");
    HEADER_KEYS.iter().map(|k| (*k, v[*k].to_string())).collect()
}

pub fn export_tsv(log: &RunLog) -> String {
    let mut out = String::new();
    for (key, value) in header_fields(&log.header) {
        let _ = writeln!(out, "# {key}\t{value}");
    }
    out.push_str(&TSV_COLUMNS.join("\t"));
    out.push('\n');
    for r in &log.records {
        let _ = write!(out, "{}\t{}", r.tick, u8::from(r.reset));
        let (sp, p, v, q, w) = (r.setpoints, r.position, r.velocity, r.orientation, r.angular_rate);
        let values = [
            r.reference.r1,
            r.reference.r2,
            r.reference.r3,
            r.reference.r4,
            sp.phi,
            sp.theta,
            sp.psi,
            sp.z,
            p.x,
            p.y,
            p.z,
            v.x,
            v.y,
            v.z,
            q.w,
            q.x,
            q.y,
            q.z,
            w.x,
            w.y,
            w.z,
        ];
        for x in values {
            let _ = write!(out, "\t{x:?}");
        }
        out.push('\n');
    }
    for e in &log.events {
        let kind = serde_json::to_value(e.kind).expect("event kind serializes");
        let p = e.position;
        let _ = writeln!(out, "#event\t{}\t{:?}\t{:?}\t{:?}\t{:?}", kind.as_str().unwrap_or(""), e.time, p.x, p.y, p.z);
    }
    if log.complete {
        let _ = writeln!(out, "#end\t{}\t{}", log.records.len(), log.events.len());
    }
    out
}

fn parse_f64(line: usize, field: &str, s: &str) -> Result<f64, LogFormatError> {
    s.parse::<f64>().map_err(|_| line_err(line, format!("{field}: `{s}` is not a number")))
}

fn parse_row(no: usize, line: &str) -> Result<LogRecord, LogFormatError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != TSV_COLUMNS.len() {
        return Err(line_err(no, format!("expected {} columns, found {}", TSV_COLUMNS.len(), fields.len())));
    }
    let tick =
        fields[0].parse::<u64>().map_err(|_| line_err(no, format!("tick: `{}` is not an integer", fields[0])))?;
    let reset = match fields[1] {
        "0" => false,
        "1" => true,
        other => return Err(line_err(no, format!("reset: `{other}` is not 0 or 1"))),
    };
    let mut x = [0.0; 21];
    for (i, slot) in x.iter_mut().enumerate() {
        *slot = parse_f64(no, TSV_COLUMNS[i + 2], fields[i + 2])?;
    }
    Ok(LogRecord {
        tick,
        reset,
        reference: ReferenceVector { r1: x[0], r2: x[1], r3: x[2], r4: x[3] },
        setpoints: Setpoints { phi: x[4], theta: x[5], psi: x[6], z: x[7] },
        position: Vec3::new(x[8], x[9], x[10]),
        velocity: Vec3::new(x[11], x[12], x[13]),
        orientation: Quat { w: x[14], x: x[15], y: x[16], z: x[17] },
        angular_rate: Vec3::new(x[18], x[19], x[20]),
    })
}

fn parse_event(no: usize, fields: &[&str]) -> Result<RunEvent, LogFormatError> {
    if fields.len() != 5 {
        return Err(line_err(no, format!("event rows have 5 fields, found {}", fields.len())));
    }
    let kind: RunEventKind = serde_json::from_value(serde_json::Value::String(fields[0].to_string()))
        .map_err(|_| line_err(no, format!("unknown event kind `{}`", fields[0])))?;
    let n = |i: usize, name: &str| parse_f64(no, name, fields[i]);
    Ok(RunEvent { kind, time: n(1, "time")?, position: Vec3::new(n(2, "x")?, n(3, "y")?, n(4, "z")?) })
}

#[derive(Default)]
struct HeaderBuilder {
    fields: std::collections::BTreeMap<String, serde_json::Value>,
}

impl HeaderBuilder {
    fn build(self, line: usize) -> Result<LogHeader, LogFormatError> {
        let map: serde_json::Map<String, serde_json::Value> = self.fields.into_iter().collect();
        let header: LogHeader = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| line_err(line, format!("incomplete header: {e}")))?;
        check_schema(&header)?;
        Ok(header)
    }
}

pub fn import_tsv(text: &str) -> Result<RunLog, LogFormatError> {
    let mut header = HeaderBuilder::default();
    let mut log: Option<RunLog> = None;
    let mut ended_at = None;
    for (no, line, terminated) in numbered_lines(text) {
        if line.is_empty() {
            continue;
        }
        if let Some(end) = ended_at {
            return Err(line_err(no, format!("content after the end marker on line {end}")));
        }
        let Some(l) = log.as_mut() else {
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) =
                    rest.split_once('\t').ok_or_else(|| line_err(no, "header lines are `# key<TAB>value`"))?;
                if !HEADER_KEYS.contains(&key) {
                    return Err(line_err(no, format!("unknown header key `{key}`")));
                }
                let value = serde_json::from_str(value).map_err(|e| line_err(no, format!("{key}: {e}")))?;
                header.fields.insert(key.to_string(), value);
                continue;
            }
            if line != TSV_COLUMNS.join("\t") {
                return Err(line_err(no, "expected the column header line"));
            }
            let mut fresh = RunLog::new(std::mem::take(&mut header).build(no)?);
            fresh.complete = false;
            log = Some(fresh);
            continue;
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let outcome = match fields[0] {
            "#event" => parse_event(no, &fields[1..]).map(|e| l.events.push(e)),
            "#end" => {
                let counts: Option<Vec<usize>> = fields[1..].iter().map(|f| f.parse().ok()).collect();
                match counts.as_deref() {
                    Some(&[records, events]) => {
                        check_end(l, no, records, events)?;
                        l.complete = true;
                        ended_at = Some(no);
                        Ok(())
                    }
                    _ => Err(line_err(no, "end row is `#end<TAB>records<TAB>events`")),
                }
            }
            _ => parse_row(no, line).and_then(|r| push_record(l, no, r)),
        };
        match outcome {
            Ok(()) => {}
            Err(_) if !terminated => break,
            Err(e) => return Err(e),
        }
    }
    log.ok_or(LogFormatError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy_maze() -> posepilot_core::Maze {
        posepilot_core::Maze::parse("cell_size=1\nwall_height=1\nS").unwrap()
    }

    fn sample(n: u64) -> RunLog {
        let maze = dummy_maze();
        let mut h = LogHeader::new("abc", &Default::default(), &maze);
        h.participant = Some("P\t1 \"q\"".into());
        let mut log = RunLog::new(h);
        for t in 0..n {
            let k = t as f64;
            log.records.push(LogRecord {
                tick: t,
                reset: t == 3,
                reference: ReferenceVector { r1: 0.1 * k, r2: -0.0, r3: 1e-300, r4: -1.0 },
                setpoints: Setpoints { phi: 0.15, theta: -0.15, psi: k / 3.0, z: 1.0 + 0.01 * k },
                position: Vec3::new(k.sqrt(), -k, std::f64::consts::PI),
                velocity: Vec3::new(1e-17, 2.5, -7.0),
                orientation: Quat { w: 0.6, x: 0.8, y: 0.0, z: -0.0 },
                angular_rate: Vec3::new(f64::MIN_POSITIVE, f64::MAX, 0.1 + 0.2),
            });
        }
        log.events.push(RunEvent { kind: RunEventKind::RunStarted, time: 0.3, position: Vec3::new(1.0, 2.0, 3.0) });
        log.events.push(RunEvent { kind: RunEventKind::Collision, time: 1.0 / 3.0, position: Vec3::ZERO });
        log
    }

    #[test]
    fn both_formats_round_trip() {
        for format in [LogFormat::Jsonl, LogFormat::Tsv] {
            let log = sample(100);
            let doc = export(&log, format);
            let back = import(&doc).unwrap();
            assert_eq!(back, log, "{format:?}");
            assert_eq!(export(&back, format), doc);
            for (a, b) in back.records.iter().zip(&log.records) {
                assert_eq!(a.reference.r2.to_bits(), b.reference.r2.to_bits());
            }
        }
    }

    #[test]
    fn row_cardinality() {
        let tsv = export_tsv(&sample(100));
        let data_rows = tsv.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(data_rows, 100);
        let jsonl = export_jsonl(&sample(100));
        assert_eq!(jsonl.lines().count(), 1 + 100 + 2 + 1);
    }

    #[test]
    fn empty_run_is_header_only() {
        let mut log = sample(0);
        log.events.clear();
        let jsonl = export_jsonl(&log);
        assert_eq!(jsonl.lines().count(), 2);
        assert!(jsonl.lines().next().unwrap().contains("\"type\":\"header\""));
        assert_eq!(import(&jsonl).unwrap(), log);
        let tsv = export_tsv(&log);
        assert!(tsv.lines().all(|l| l.starts_with('#') || l.starts_with("tick")));
        assert_eq!(import(&tsv).unwrap(), log);
    }

    #[test]
    fn truncated_documents_keep_their_prefix() {
        for format in [LogFormat::Jsonl, LogFormat::Tsv] {
            let doc = export(&sample(10), format);
            let end = doc.rfind(if format == LogFormat::Jsonl { "{\"type\":\"end\"" } else { "#end" }).unwrap();
            let cut = &doc[..end];
            let log = import(cut).unwrap();
            assert!(!log.complete);
            assert_eq!(log.records.len(), 10);
            // chop mid-way through the last record
            let first_event =
                cut.find(if format == LogFormat::Jsonl { "{\"type\":\"event\"" } else { "#event" }).unwrap();
            let log = import(&cut[..first_event - 20]).unwrap();
            assert_eq!(log.records.len(), 9);
            assert!(!log.complete);
        }
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let doc = export_jsonl(&sample(5));
        let bad = doc.replacen("\"tick\":2", "\"tick\":\"two\"", 1);
        assert!(matches!(import(&bad), Err(LogFormatError::Line { line: 4, .. })));
        let doc = export_tsv(&sample(5));
        let bad = doc.replacen("\n2\t0\t", "\n2\t0\tx", 1);
        assert!(matches!(import(&bad), Err(LogFormatError::Line { .. })));
    }

    #[test]
    fn ticks_must_increase() {
        let mut log = sample(3);
        log.records[2].tick = 1;
        assert!(import(&export_jsonl(&log)).is_err());
    }

    #[test]
    fn writer_output_imports() {
        let log = sample(4);
        let mut w = JsonlWriter::new(Vec::new(), &log.header).unwrap();
        for (i, r) in log.records.iter().enumerate() {
            let ev: &[RunEvent] = if i == 1 { &log.events } else { &[] };
            w.append(r, ev).unwrap();
        }
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let back = import(&text).unwrap();
        assert_eq!(back, log);
    }
}
