//! Latest-wins input buffer between clients and the session loop.
//!
//! Data-plane kinds (`keypoints`, `joy_axes`, `set_mode`) keep only their
//! newest message; control-plane kinds (`run_control`, `tlx_submit`) queue in
//! arrival order up to a fixed capacity. `hello` is a connection concern and
//! never reaches the mailbox.

use std::collections::VecDeque;

use posepilot_core::metrics::TlxRecord;
use posepilot_core::session::InputSource;
use posepilot_core::TickInput;
use thiserror::Error;

use super::wire::{Inbound, InboundMessage, RunAction};

pub const DEFAULT_CONTROL_CAPACITY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("control queue full ({0} messages pending)")]
pub struct MailboxFull(pub usize);

#[derive(Debug, Clone)]
pub struct Mailbox {
    keypoints: Option<InboundMessage>,
    joy: Option<InboundMessage>,
    mode: Option<InboundMessage>,
    control: VecDeque<InboundMessage>,
    capacity: usize,
    superseded: u64,
}

impl Default for Mailbox {
    fn default() -> Self {
        Mailbox::new(DEFAULT_CONTROL_CAPACITY)
    }
}

/// Everything pending at one drain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Drained {
    pub keypoints: Option<InboundMessage>,
    pub joy: Option<InboundMessage>,
    pub mode: Option<InboundMessage>,
    pub control: Vec<InboundMessage>,
}

impl Mailbox {
    pub fn new(control_capacity: usize) -> Self {
        Mailbox {
            keypoints: None,
            joy: None,
            mode: None,
            control: VecDeque::new(),
            capacity: control_capacity,
            superseded: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_none() && self.joy.is_none() && self.mode.is_none() && self.control.is_empty()
    }

    /// Data-plane messages overwritten before being consumed.
    pub fn superseded(&self) -> u64 {
        self.superseded
    }

    pub fn coalesce(&mut self, msg: InboundMessage) -> Result<(), MailboxFull> {
        let slot = match msg.body {
            Inbound::Hello { .. } => return Ok(()),
            Inbound::Keypoints { .. } => &mut self.keypoints,
            Inbound::JoyAxes { .. } => &mut self.joy,
            Inbound::SetMode { .. } => &mut self.mode,
            Inbound::RunControl { .. } | Inbound::TlxSubmit { .. } => {
                if self.control.len() >= self.capacity {
                    return Err(MailboxFull(self.control.len()));
                }
                self.control.push_back(msg);
                return Ok(());
            }
        };
        if slot.replace(msg).is_some() {
            self.superseded += 1;
        }
        Ok(())
    }

    pub fn drain(&mut self) -> Drained {
        Drained {
            keypoints: self.keypoints.take(),
            joy: self.joy.take(),
            mode: self.mode.take(),
            control: self.control.drain(..).collect(),
        }
    }
}

/// Drained messages folded into what the session consumes at its next
/// tick. Successive folds before a tick keep latest-wins semantics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickInputs {
    pub input: TickInput,
    pub mode: Option<InputSource>,
    pub stop: bool,
    pub tlx: Vec<TlxRecord>,
}

impl TickInputs {
    pub fn fold(&mut self, d: Drained) {
        let mut seq = self.input.input_seq;
        let mut bump = |m: &InboundMessage| seq = Some(seq.map_or(m.seq, |s: u64| s.max(m.seq)));
        if let Some(m) = d.keypoints {
            bump(&m);
            self.input.pose = m.body.keypoint_frame(m.t);
        }
        if let Some(m) = d.joy {
            bump(&m);
            if let Inbound::JoyAxes { axes } = &m.body {
                self.input.joy = <[f64; 4]>::try_from(axes.as_slice()).ok();
            }
        }
        if let Some(m) = d.mode {
            bump(&m);
            if let Inbound::SetMode { mode } = m.body {
                self.mode = Some(mode);
            }
        }
        for m in d.control {
            bump(&m);
            match m.body {
                Inbound::RunControl { action: RunAction::Reset } => self.input.reset = true,
                Inbound::RunControl { action: RunAction::Stop } => self.stop = true,
                Inbound::TlxSubmit { record } => self.tlx.push(record),
                _ => {}
            }
        }
        self.input.input_seq = seq;
    }

    /// Hand the accumulated input to a tick, leaving stop/tlx in place.
    pub fn take_input(&mut self) -> TickInput {
        std::mem::take(&mut self.input)
    }
}
