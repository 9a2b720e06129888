//! Operator-facing message boundary.
//!
//! [`wire`] defines the framed JSON protocol, [`mailbox`] the latest-wins
//! input buffer shared by live sessions and trace playback, and [`server`]
//! the websocket endpoint that paces a [`Session`](posepilot_core::Session)
//! to the wall clock.

pub mod mailbox;
pub mod server;
pub mod wire;

pub use mailbox::{Drained, Mailbox, TickInputs};
pub use server::{Gateway, LiveOutcome, ServeOptions};
pub use wire::{
    decode, decode_outbound, encode_inbound, encode_outbound, snapshot_to_frame, DecodeError, Inbound, InboundMessage,
    Outbound, OutboundMessage, RunAction, Welcome, MAX_FRAME, PROTOCOL_VERSION,
};
