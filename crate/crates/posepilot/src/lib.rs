//! IO side of the posepilot workbench: config documents and digests, run-log
//! and trace file formats, the websocket gateway and experiment reports.
//!
//! The simulation itself lives in [`posepilot_core`]; this crate only moves
//! bytes in and out of it.

pub mod config;
pub mod gateway;
pub mod logfmt;
pub mod report;
pub mod sim;
pub mod trace;

pub use config::LoadedConfig;
pub use posepilot_core as core;
