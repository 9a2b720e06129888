//! Wire format: every frame is a 4-byte big-endian body length followed by a
//! UTF-8 JSON object. The object always carries `v` (protocol version) and
//! `kind`; inbound messages also carry `seq` (client sequence number) and `t`
//! (client timestamp, seconds). See `docs/protocol.md`.

use posepilot_core::metrics::TlxRecord;
use posepilot_core::pose::{KeypointFrame, KEYPOINT_ROWS};
use posepilot_core::session::InputSource;
use posepilot_core::{SessionConfig, TelemetrySnapshot};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;
/// Largest accepted frame, length prefix included.
pub const MAX_FRAME: usize = 64 * 1024;

const INBOUND_KINDS: [&str; 6] = ["hello", "keypoints", "joy_axes", "set_mode", "run_control", "tlx_submit"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("frame of {0} bytes exceeds the {MAX_FRAME} byte limit")]
    FrameTooLarge(usize),
    #[error("truncated frame: {declared} bytes declared, {available} present")]
    Truncated { declared: usize, available: usize },
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}, this server speaks {PROTOCOL_VERSION}")]
    UnsupportedVersion(u64),
    #[error("unknown message kind `{kind}` in protocol version {version}")]
    UnknownKind { kind: String, version: u32 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("keypoints carry {KEYPOINT_ROWS} rows, got {0}")]
    RowCount(usize),
    #[error("joy_axes carries 4 values, got {0}")]
    AxisCount(usize),
}

impl DecodeError {
    /// Stable machine-readable code sent back in `error` frames.
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::FrameTooLarge(_) => "frame_too_large",
            DecodeError::Truncated { .. } => "truncated",
            DecodeError::Malformed(_) => "malformed",
            DecodeError::UnsupportedVersion(_) => "unsupported_version",
            DecodeError::UnknownKind { .. } => "unknown_kind",
            DecodeError::OutOfRange(_) => "out_of_range",
            DecodeError::RowCount(_) => "row_count",
            DecodeError::AxisCount(_) => "axis_count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunAction {
    /// Respawn and restart run timing.
    Reset,
    /// End the session and close the log.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inbound {
    Hello {
        client: String,
        /// Protocol versions the client can speak.
        versions: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
    },
    /// 16 MPII-ordered rows of normalized `[x, y]`, `null` for undetected.
    Keypoints {
        points: Vec<Option<[f64; 2]>>,
    },
    /// Normalized stick axes in [-1, 1], before the configured axis map.
    JoyAxes {
        axes: Vec<f64>,
    },
    SetMode {
        mode: InputSource,
    },
    RunControl {
        action: RunAction,
    },
    TlxSubmit {
        record: TlxRecord,
    },
}

impl Inbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Inbound::Hello { .. } => "hello",
            Inbound::Keypoints { .. } => "keypoints",
            Inbound::JoyAxes { .. } => "joy_axes",
            Inbound::SetMode { .. } => "set_mode",
            Inbound::RunControl { .. } => "run_control",
            Inbound::TlxSubmit { .. } => "tlx_submit",
        }
    }

    /// Semantic checks beyond the JSON shape.
    pub fn validate(&self) -> Result<(), DecodeError> {
        match self {
            Inbound::Keypoints { points } => {
                if points.len() != KEYPOINT_ROWS {
                    return Err(DecodeError::RowCount(points.len()));
                }
                for (row, p) in points.iter().enumerate() {
                    if let Some([x, y]) = p {
                        if !((0.0..=1.0).contains(x) && (0.0..=1.0).contains(y)) {
                            return Err(DecodeError::OutOfRange(format!(
                                "keypoint row {row} = ({x}, {y}) outside [0, 1]"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Inbound::JoyAxes { axes } => {
                if axes.len() != 4 {
                    return Err(DecodeError::AxisCount(axes.len()));
                }
                match axes.iter().position(|a| !(-1.0..=1.0).contains(a)) {
                    Some(i) => Err(DecodeError::OutOfRange(format!("axis {i} = {} outside [-1, 1]", axes[i]))),
                    None => Ok(()),
                }
            }
            Inbound::TlxSubmit { record } => record.validate().map_err(|e| DecodeError::OutOfRange(e.to_string())),
            Inbound::Hello { .. } | Inbound::SetMode { .. } | Inbound::RunControl { .. } => Ok(()),
        }
    }

    /// The keypoint payload as a core frame stamped with `t`.
    pub fn keypoint_frame(&self, t: f64) -> Option<KeypointFrame> {
        match self {
            Inbound::Keypoints { points } => KeypointFrame::from_rows(points, t).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InboundMessage {
    pub v: u32,
    pub seq: u64,
    /// Client timestamp, seconds.
    pub t: f64,
    pub body: Inbound,
}

impl InboundMessage {
    pub fn new(seq: u64, t: f64, body: Inbound) -> Self {
        InboundMessage { v: PROTOCOL_VERSION, seq, t, body }
    }

    pub fn to_json(&self) -> String {
        let mut obj = match serde_json::to_value(&self.body).expect("inbound serializes") {
            Value::Object(m) => m,
            _ => unreachable!("tagged enum serializes to an object"),
        };
        obj.insert("v".into(), self.v.into());
        obj.insert("seq".into(), self.seq.into());
        obj.insert("t".into(), self.t.into());
        Value::Object(obj).to_string()
    }

    /// Parse and validate one JSON object (no length prefix).
    pub fn from_json(text: &str) -> Result<InboundMessage, DecodeError> {
        let value: Value = serde_json::from_str(text).map_err(|e| DecodeError::Malformed(e.to_string()))?;
        let Value::Object(mut obj) = value else {
            return Err(DecodeError::Malformed("message is not a JSON object".into()));
        };
        let v = take_version(&mut obj)?;
        let kind = match obj.get("kind") {
            Some(Value::String(k)) => k.clone(),
            _ => return Err(DecodeError::Malformed("missing string field `kind`".into())),
        };
        if !INBOUND_KINDS.contains(&kind.as_str()) {
            return Err(DecodeError::UnknownKind { kind, version: v });
        }
        let seq = match obj.remove("seq") {
            None => 0,
            Some(s) => {
                s.as_u64().ok_or_else(|| DecodeError::Malformed("`seq` must be a non-negative integer".into()))?
            }
        };
        let t = match obj.remove("t") {
            None => 0.0,
            Some(t) => t.as_f64().ok_or_else(|| DecodeError::Malformed("`t` must be a number".into()))?,
        };
        let body: Inbound =
            serde_json::from_value(Value::Object(obj)).map_err(|e| DecodeError::Malformed(format!("{kind}: {e}")))?;
        body.validate()?;
        Ok(InboundMessage { v, seq, t, body })
    }
}

fn take_version(obj: &mut Map<String, Value>) -> Result<u32, DecodeError> {
    let v = obj
        .remove("v")
        .ok_or_else(|| DecodeError::Malformed("missing protocol version field `v`".into()))?
        .as_u64()
        .ok_or_else(|| DecodeError::Malformed("`v` must be a non-negative integer".into()))?;
    if v != u64::from(PROTOCOL_VERSION) {
        return Err(DecodeError::UnsupportedVersion(v));
    }
    Ok(PROTOCOL_VERSION)
}

/// Everything a client needs to set up: the config it is talking to, the
/// digests to check its copy against, and the maze to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welcome {
    pub protocol: u32,
    pub config: SessionConfig,
    pub config_digest: String,
    pub zone_digest: String,
    pub maze: String,
}

// welcome is sent once per connection, so its size does not matter
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outbound {
    Welcome(Welcome),
    Telemetry(TelemetrySnapshot),
    Error {
        code: String,
        message: String,
        /// Sequence number of the offending message, when it had one.
        #[serde(default)]
        seq: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutboundMessage {
    pub v: u32,
    pub body: Outbound,
}

impl OutboundMessage {
    pub fn new(body: Outbound) -> Self {
        OutboundMessage { v: PROTOCOL_VERSION, body }
    }

    pub fn to_json(&self) -> String {
        let mut obj = match serde_json::to_value(&self.body).expect("outbound serializes") {
            Value::Object(m) => m,
            _ => unreachable!("tagged enum serializes to an object"),
        };
        obj.insert("v".into(), self.v.into());
        Value::Object(obj).to_string()
    }

    pub fn from_json(text: &str) -> Result<OutboundMessage, DecodeError> {
        let value: Value = serde_json::from_str(text).map_err(|e| DecodeError::Malformed(e.to_string()))?;
        let Value::Object(mut obj) = value else {
            return Err(DecodeError::Malformed("message is not a JSON object".into()));
        };
        let v = take_version(&mut obj)?;
        let body = serde_json::from_value(Value::Object(obj)).map_err(|e| DecodeError::Malformed(e.to_string()))?;
        Ok(OutboundMessage { v, body })
    }
}

fn frame(body: String) -> Vec<u8> {
    let body = body.into_bytes();
    let len = u32::try_from(body.len()).expect("frame length fits u32");
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Split off the length prefix and return the JSON body.
fn unframe(bytes: &[u8]) -> Result<&str, DecodeError> {
    if bytes.len() > MAX_FRAME {
        return Err(DecodeError::FrameTooLarge(bytes.len()));
    }
    let Some((prefix, body)) = bytes.split_first_chunk::<4>() else {
        return Err(DecodeError::Truncated { declared: 4, available: bytes.len() });
    };
    let declared = u32::from_be_bytes(*prefix) as usize;
    if declared + 4 > MAX_FRAME {
        return Err(DecodeError::FrameTooLarge(declared + 4));
    }
    if body.len() < declared {
        return Err(DecodeError::Truncated { declared, available: body.len() });
    }
    if body.len() > declared {
        return Err(DecodeError::Malformed(format!("{} trailing bytes after the frame", body.len() - declared)));
    }
    std::str::from_utf8(body).map_err(|e| DecodeError::Malformed(e.to_string()))
}

/// Decode and validate one inbound frame.
pub fn decode(bytes: &[u8]) -> Result<InboundMessage, DecodeError> {
    InboundMessage::from_json(unframe(bytes)?)
}

pub fn encode_inbound(msg: &InboundMessage) -> Vec<u8> {
    frame(msg.to_json())
}

pub fn encode_outbound(msg: &OutboundMessage) -> Vec<u8> {
    frame(msg.to_json())
}

pub fn decode_outbound(bytes: &[u8]) -> Result<OutboundMessage, DecodeError> {
    OutboundMessage::from_json(unframe(bytes)?)
}

pub fn snapshot_to_frame(snap: &TelemetrySnapshot) -> Vec<u8> {
    encode_outbound(&OutboundMessage::new(Outbound::Telemetry(snap.clone())))
}
