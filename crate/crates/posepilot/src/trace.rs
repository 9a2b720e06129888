//! Recorded input traces.
//!
//! A trace is JSONL: one inbound wire message per line (the same JSON
//! objects the gateway accepts, without the length prefix), where `t` is
//! seconds since the start of the run. Blank lines and lines starting with
//! `#` are skipped. Timestamps must be non-decreasing.
//!
//! Playback is tick-aligned: the tick that starts at simulated time
//! `k * T_ref` consumes every entry with `t <= k * T_ref` that earlier ticks
//! have not, through the same latest-wins [`Mailbox`] a live session uses.

use posepilot_core::session::SessionConfig;
use thiserror::Error;

use crate::gateway::mailbox::{Mailbox, TickInputs};
use crate::gateway::wire::{DecodeError, Inbound, InboundMessage};

/// Slack for comparing trace timestamps with tick times.
const TIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Decode {
        line: usize,
        #[source]
        source: DecodeError,
    },
    #[error("line {line}: timestamp {t} goes backwards (previous {previous})")]
    NotMonotonic { line: usize, t: f64, previous: f64 },
    #[error("line {line}: timestamp {t} is negative or not finite")]
    BadTime { line: usize, t: f64 },
    #[error("line {line}: `{kind}` messages have no meaning in a trace")]
    Unsupported { line: usize, kind: &'static str },
}

impl TraceError {
    pub fn line(&self) -> usize {
        match self {
            TraceError::Decode { line, .. }
            | TraceError::NotMonotonic { line, .. }
            | TraceError::BadTime { line, .. }
            | TraceError::Unsupported { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub line: usize,
    pub msg: InboundMessage,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut entries: Vec<TraceEntry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let msg = InboundMessage::from_json(trimmed).map_err(|source| TraceError::Decode { line, source })?;
            if let Inbound::Hello { .. } = msg.body {
                return Err(TraceError::Unsupported { line, kind: "hello" });
            }
            if !(msg.t >= 0.0 && msg.t.is_finite()) {
                return Err(TraceError::BadTime { line, t: msg.t });
            }
            if let Some(prev) = entries.last() {
                if msg.t < prev.msg.t {
                    return Err(TraceError::NotMonotonic { line, t: msg.t, previous: prev.msg.t });
                }
            }
            entries.push(TraceEntry { line, msg });
        }
        Ok(Trace { entries })
    }

    pub fn to_jsonl(&self) -> String {
        self.entries.iter().map(|e| e.msg.to_json() + "\n").collect()
    }

    pub fn from_messages(msgs: impl IntoIterator<Item = InboundMessage>) -> Trace {
        Trace { entries: msgs.into_iter().enumerate().map(|(i, msg)| TraceEntry { line: i + 1, msg }).collect() }
    }

    /// Timestamp of the last entry, 0 for an empty trace.
    pub fn end_time(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.msg.t)
    }

    /// Default run length: the trace plus enough time for a held input to
    /// hold and fully decay, in whole reference ticks.
    pub fn default_ticks(&self, config: &SessionConfig) -> u64 {
        let tail = config.input.hold_timeout + config.input.decay_time;
        ((self.end_time() + tail) / config.reference_period() - TIME_EPSILON).ceil().max(0.0) as u64 + 1
    }

    pub fn cursor(&self, reference_period: f64) -> TraceCursor<'_> {
        TraceCursor { trace: self, next: 0, period: reference_period, mailbox: Mailbox::new(usize::MAX) }
    }
}

/// Feeds a trace to successive ticks.
pub struct TraceCursor<'a> {
    trace: &'a Trace,
    next: usize,
    period: f64,
    mailbox: Mailbox,
}

impl TraceCursor<'_> {
    /// Inputs for tick `k`.
    pub fn inputs_for(&mut self, k: u64) -> TickInputs {
        let now = k as f64 * self.period + TIME_EPSILON;
        while let Some(e) = self.trace.entries.get(self.next) {
            if e.msg.t > now {
                break;
            }
            self.mailbox.coalesce(e.msg.clone()).expect("unbounded control queue");
            self.next += 1;
        }
        let mut inputs = TickInputs::default();
        inputs.fold(self.mailbox.drain());
        inputs
    }

    pub fn exhausted(&self) -> bool {
        self.next >= self.trace.entries.len()
    }
}
