//! Headless runs: a trace played through a session as fast as possible.

use posepilot_core::session::{InputSource, LogHeader};
use posepilot_core::{RunLog, Session, Vec3};
use serde::Serialize;

use crate::trace::Trace;
use crate::LoadedConfig;

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    pub participant: Option<String>,
    /// Number of reference ticks; defaults to [`Trace::default_ticks`].
    pub ticks: Option<u64>,
    /// Overrides the configured input source.
    pub source: Option<InputSource>,
}

/// Machine-readable outcome printed after a headless run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub ticks: u64,
    pub simulated_time: f64,
    pub traversal_time: Option<f64>,
    pub collisions: usize,
    pub final_position: Vec3,
    pub final_setpoint_z: f64,
    pub final_setpoint_psi: f64,
    pub halted: bool,
    pub fault: Option<String>,
    pub config_digest: String,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub log: RunLog,
    pub summary: RunSummary,
}

pub fn simulate(loaded: &LoadedConfig, trace: &Trace, opts: &SimOptions) -> SimOutcome {
    let mut config = loaded.config.clone();
    if let Some(source) = opts.source {
        config.input.source = source;
    }
    let ticks = opts.ticks.unwrap_or_else(|| trace.default_ticks(&config));
    let mut header = LogHeader::new(loaded.digest.clone(), &config, &loaded.maze);
    header.participant = opts.participant.clone();
    let mut session =
        Session::new(config, loaded.maze.clone(), header).expect("a loaded config has already been validated");
    session.set_zone_digest(loaded.zone_digest.clone());

    let mut cursor = trace.cursor(session.config().reference_period());
    for k in 0..ticks {
        let mut inputs = cursor.inputs_for(k);
        if let Some(mode) = inputs.mode {
            session.set_source(mode);
        }
        if inputs.stop {
            break;
        }
        session.tick(inputs.take_input());
    }

    let snap = session.snapshot(Default::default(), Vec::new());
    let log = session.into_log();
    let summary = RunSummary {
        ticks: log.records.len() as u64,
        simulated_time: snap.time,
        traversal_time: log.traversal_time(),
        collisions: log.collision_count(),
        final_position: snap.position,
        final_setpoint_z: snap.setpoints.z,
        final_setpoint_psi: snap.setpoints.psi,
        halted: snap.halted,
        fault: snap.fault,
        config_digest: loaded.digest.clone(),
    };
    SimOutcome { log, summary }
}
