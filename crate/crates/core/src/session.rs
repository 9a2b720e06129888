//! Fixed-timestep orchestration: input -> reference -> setpoints -> cascade
//! -> physics -> maze, one reference period per [`Session::tick`].
//!
//! The clock is logical. Physics runs every `physics_dt`, the cascade every
//! `1 / cascade_rate` and references every `1 / reference_rate`; both
//! periods must be whole multiples of the next faster one. Time is always
//! derived from the physics step count, never accumulated, so there is no
//! drift between the rates.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{wrap_angle, Quat, Vec3};
use crate::pose::{extract_hands, HandPair, KeypointFrame, MovingAverage, DEFAULT_WINDOW};
use crate::refgen::{
    integrate_setpoints, AxisMap, ReferenceGenerator, ReferenceVector, RefgenError, ScalingFactors, Setpoints, Zone,
    ZoneMode,
};
use crate::vehicle::{dynamics_step, Cascade, IntegralLimits, PidGains, VehicleError, VehicleParams, VehicleState};
use crate::world::{Maze, RunEvent, RunEventKind, RunTracker};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be a positive finite number")]
    NotPositive(&'static str),
    #[error("{what}: period {period} s is not a whole multiple of {base} s")]
    Indivisible { what: &'static str, period: f64, base: f64 },
    #[error("physics_dt {0} s exceeds the 10 ms limit")]
    PhysicsStep(f64),
    #[error("zone configuration: {0}")]
    Refgen(#[from] RefgenError),
    #[error("vehicle configuration: {0}")]
    Vehicle(#[from] VehicleError),
}

/// Which input stream feeds the reference generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    #[default]
    Pose,
    Joystick,
    /// Recorded input: whichever kind the trace carries (joystick wins when
    /// both arrive in the same tick).
    Trace,
}

impl InputSource {
    pub fn as_str(self) -> &'static str {
        match self {
            InputSource::Pose => "pose",
            InputSource::Joystick => "joystick",
            InputSource::Trace => "trace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    /// Log the contact, keep flying.
    #[default]
    Advisory,
    /// Log the contact and put the vehicle back at the spawn pose.
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesConfig {
    pub physics_dt: f64,
    pub cascade_rate: f64,
    pub reference_rate: f64,
    pub telemetry_rate: f64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig { physics_dt: 0.001, cascade_rate: 100.0, reference_rate: 20.0, telemetry_rate: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub source: InputSource,
    /// Moving-average window, frames.
    pub filter_window: usize,
    /// Seconds a stale reference is held before decaying.
    pub hold_timeout: f64,
    /// Seconds of linear decay to zero after the hold.
    pub decay_time: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig { source: InputSource::Pose, filter_window: DEFAULT_WINDOW, hold_timeout: 0.5, decay_time: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZonesConfig {
    pub zone1: Zone,
    pub zone2: Zone,
    pub mode: ZoneMode,
}

impl Default for ZonesConfig {
    fn default() -> Self {
        ZonesConfig { zone1: Zone::default_zone1(), zone2: Zone::default_zone2(), mode: ZoneMode::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub collision_radius: f64,
    pub collision_mode: CollisionMode,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig { collision_radius: 0.25, collision_mode: CollisionMode::Advisory }
    }
}

/// Everything that determines a simulation besides the maze and the input.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub rates: RatesConfig,
    pub input: InputConfig,
    pub zones: ZonesConfig,
    pub scaling: ScalingFactors,
    pub joystick: AxisMap,
    pub vehicle: VehicleParams,
    pub gains: PidGains,
    pub integral_limits: IntegralLimits,
    pub world: WorldConfig,
    /// Path of the maze map, relative to the config file. Empty selects the
    /// built-in reference maze.
    pub maze: String,
    /// Reserved; the simulation has no stochastic parts.
    pub random_seed: u64,
}

/// Integer decimation derived from [`RatesConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimation {
    pub physics_per_cascade: u32,
    pub cascades_per_reference: u32,
}

fn whole_ratio(what: &'static str, period: f64, base: f64) -> Result<u32, ConfigError> {
    let ratio = period / base;
    let n = libm::round(ratio);
    if n < 1.0 || libm::fabs(ratio - n) > 1e-9 * n {
        return Err(ConfigError::Indivisible { what, period, base });
    }
    Ok(n as u32)
}

impl SessionConfig {
    pub fn validate(&self) -> Result<Decimation, ConfigError> {
        let r = &self.rates;
        for (name, v) in [
            ("physics_dt", r.physics_dt),
            ("cascade_rate", r.cascade_rate),
            ("reference_rate", r.reference_rate),
            ("telemetry_rate", r.telemetry_rate),
            ("collision_radius", self.world.collision_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        for (name, v) in [("hold_timeout", self.input.hold_timeout), ("decay_time", self.input.decay_time)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.input.filter_window == 0 {
            return Err(ConfigError::NotPositive("filter_window"));
        }
        if r.physics_dt > crate::vehicle::MAX_PHYSICS_DT {
            return Err(ConfigError::PhysicsStep(r.physics_dt));
        }
        self.scaling.validate()?;
        self.joystick.validate()?;
        self.zones.zone1.outer().validate()?;
        self.vehicle.validate()?;
        self.gains.validate()?;
        self.integral_limits.validate()?;
        let cascade_period = 1.0 / r.cascade_rate;
        let physics_per_cascade = whole_ratio("cascade", cascade_period, r.physics_dt)?;
        let cascades_per_reference = whole_ratio("reference", 1.0 / r.reference_rate, cascade_period)?;
        Ok(Decimation { physics_per_cascade, cascades_per_reference })
    }

    pub fn reference_period(&self) -> f64 {
        1.0 / self.rates.reference_rate
    }
}

/// Inputs gathered for one reference tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickInput {
    pub pose: Option<KeypointFrame>,
    pub joy: Option<[f64; 4]>,
    /// Bypasses the input path entirely; used by replay.
    pub reference: Option<ReferenceVector>,
    /// Operator reset applied before this tick.
    pub reset: bool,
    /// Highest client sequence number folded into this input.
    pub input_seq: Option<u64>,
}

/// Numbers shown on the operator HUD.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hud {
    /// Yaw in (-pi, pi], rad.
    pub compass_yaw: f64,
    pub horizon_roll: f64,
    pub horizon_pitch: f64,
    /// Above ground, m.
    pub height: f64,
    /// Linear speed, m/s.
    pub speed: f64,
}

impl Hud {
    pub fn from_state(state: &VehicleState, ground: f64) -> Hud {
        let (roll, pitch, yaw) = state.euler();
        Hud {
            compass_yaw: wrap_angle(yaw),
            horizon_roll: roll,
            horizon_pitch: pitch,
            height: state.position.z - ground,
            speed: state.velocity.norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySnapshot {
    pub tick: u64,
    /// Simulated seconds.
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub orientation: Quat,
    pub angular_rate: Vec3,
    pub setpoints: Setpoints,
    pub reference: ReferenceVector,
    pub events: Vec<RunEvent>,
    pub hud: Hud,
    pub armed: bool,
    pub hands: Option<HandPair>,
    pub input_seq: u64,
    pub halted: bool,
    pub fault: Option<String>,
    pub zone_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: u32,
    pub config_digest: String,
    pub modality: String,
    pub maze_id: String,
    /// Absent for headless runs so their logs stay reproducible.
    pub start_wall_clock: Option<String>,
    pub participant: Option<String>,
    pub reference_rate: f64,
}

impl LogHeader {
    pub fn new(config_digest: impl Into<String>, config: &SessionConfig, maze: &Maze) -> Self {
        LogHeader {
            schema_version: LOG_SCHEMA_VERSION,
            config_digest: config_digest.into(),
            modality: config.input.source.as_str().to_string(),
            maze_id: maze.name.clone(),
            start_wall_clock: None,
            participant: None,
            reference_rate: config.rates.reference_rate,
        }
    }
}

/// One reference tick of recorded state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub reset: bool,
    pub reference: ReferenceVector,
    pub setpoints: Setpoints,
    pub position: Vec3,
    pub velocity: Vec3,
    pub orientation: Quat,
    pub angular_rate: Vec3,
}

impl LogRecord {
    pub fn state(&self) -> VehicleState {
        VehicleState {
            position: self.position,
            velocity: self.velocity,
            orientation: self.orientation,
            angular_rate: self.angular_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
    pub events: Vec<RunEvent>,
    /// False when the log ended without its end marker.
    pub complete: bool,
}

impl RunLog {
    pub fn new(header: LogHeader) -> Self {
        RunLog { header, records: Vec::new(), events: Vec::new(), complete: true }
    }

    /// `finished - run_started` of the first finished traversal, if any.
    pub fn traversal_time(&self) -> Option<f64> {
        let mut start = None;
        for e in &self.events {
            match e.kind {
                RunEventKind::RunStarted => start = Some(e.time),
                RunEventKind::Finished => return Some(e.time - start?),
                RunEventKind::Reset => start = None,
                RunEventKind::Collision => {}
            }
        }
        None
    }

    pub fn collision_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == RunEventKind::Collision).count()
    }
}

/// Counters for rate bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionStats {
    pub physics_steps: u64,
    pub cascade_evals: u64,
    pub reference_ticks: u64,
}

pub struct Session {
    config: SessionConfig,
    decimation: Decimation,
    maze: Maze,
    state: VehicleState,
    cascade: Cascade,
    setpoints: Setpoints,
    refgen: ReferenceGenerator,
    filter: MovingAverage,
    held: ReferenceVector,
    last_fresh_tick: Option<u64>,
    hands: Option<HandPair>,
    tracker: RunTracker,
    stats: SessionStats,
    input_seq: u64,
    fault: Option<String>,
    log: RunLog,
    zone_digest: String,
}

impl Session {
    pub fn new(config: SessionConfig, maze: Maze, header: LogHeader) -> Result<Session, ConfigError> {
        let decimation = config.validate()?;
        let z = &config.zones;
        let mut s = Session {
            decimation,
            state: VehicleState::default(),
            cascade: Cascade::new(config.gains, config.integral_limits, config.vehicle),
            setpoints: Setpoints::default(),
            refgen: ReferenceGenerator::new(z.zone1, z.zone2, z.mode),
            filter: MovingAverage::new(config.input.filter_window),
            held: ReferenceVector::ZERO,
            last_fresh_tick: None,
            hands: None,
            tracker: RunTracker::new(),
            stats: SessionStats::default(),
            input_seq: 0,
            fault: None,
            log: RunLog::new(header),
            zone_digest: String::new(),
            maze,
            config,
        };
        s.respawn();
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn maze(&self) -> &Maze {
        &self.maze
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn setpoints(&self) -> &Setpoints {
        &self.setpoints
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    pub fn tracker(&self) -> &RunTracker {
        &self.tracker
    }

    pub fn is_halted(&self) -> bool {
        self.fault.is_some()
    }

    pub fn set_zone_digest(&mut self, digest: impl Into<String>) {
        self.zone_digest = digest.into();
    }

    /// Switch modality. Until some input has moved the vehicle this also
    /// relabels the log.
    pub fn set_source(&mut self, source: InputSource) {
        self.config.input.source = source;
        if self.log.records.iter().all(|r| r.reference == ReferenceVector::ZERO) {
            self.log.header.modality = source.as_str().to_string();
        }
    }

    /// Simulated seconds since session start.
    pub fn time(&self) -> f64 {
        self.stats.physics_steps as f64 * self.config.rates.physics_dt
    }

    fn respawn(&mut self) {
        let yaw = self.maze.spawn_yaw;
        self.state = VehicleState::hover_at(self.maze.spawn_position, yaw);
        self.setpoints = Setpoints { phi: 0.0, theta: 0.0, psi: yaw, z: self.maze.spawn_position.z };
        self.cascade.reset();
    }

    fn reset_run(&mut self, events: &mut Vec<RunEvent>) {
        events.push(RunEvent { kind: RunEventKind::Reset, time: self.time(), position: self.state.position });
        self.respawn();
        self.refgen.reset();
        self.filter.clear();
        self.held = ReferenceVector::ZERO;
        self.last_fresh_tick = None;
        self.hands = None;
        self.tracker = RunTracker::new();
    }

    /// Fresh reference from this tick's input, if any.
    fn fresh_reference(&mut self, input: &TickInput) -> Option<ReferenceVector> {
        if let Some(r) = input.reference {
            return Some(r);
        }
        let source = self.config.input.source;
        let joy = matches!(source, InputSource::Joystick | InputSource::Trace)
            .then_some(input.joy)
            .flatten()
            .and_then(|axes| self.config.joystick.joy_to_reference(&axes).ok());
        if joy.is_some() {
            return joy;
        }
        if !matches!(source, InputSource::Pose | InputSource::Trace) {
            return None;
        }
        let frame = input.pose.clone()?;
        // a rejected frame counts as no input
        let pose = self.filter.push_frame(frame).ok()?;
        match extract_hands(&pose) {
            Ok(hands) => {
                self.hands = Some(hands);
                Some(self.refgen.make_reference(&hands))
            }
            Err(_) => {
                self.hands = None;
                None
            }
        }
    }

    /// Held reference with the hold-then-decay policy applied.
    fn stale_reference(&mut self) -> ReferenceVector {
        let Some(last) = self.last_fresh_tick else { return ReferenceVector::ZERO };
        let elapsed = (self.stats.reference_ticks - last) as f64 * self.config.reference_period();
        let hold = self.config.input.hold_timeout;
        if elapsed <= hold {
            return self.held;
        }
        let decay = self.config.input.decay_time;
        let k = if decay > 0.0 { 1.0 - (elapsed - hold) / decay } else { 0.0 };
        if k <= 0.0 {
            self.held = ReferenceVector::ZERO;
            self.last_fresh_tick = None;
            ReferenceVector::ZERO
        } else {
            self.held.scaled(k)
        }
    }

    /// Advance exactly one reference period.
    pub fn tick(&mut self, input: TickInput) -> TelemetrySnapshot {
        let mut events = Vec::new();
        if let Some(seq) = input.input_seq {
            self.input_seq = self.input_seq.max(seq);
        }
        if self.fault.is_some() {
            return self.snapshot(ReferenceVector::ZERO, events);
        }
        if input.reset {
            self.reset_run(&mut events);
        }

        let r = match self.fresh_reference(&input) {
            Some(r) => {
                self.held = r;
                self.last_fresh_tick = Some(self.stats.reference_ticks);
                r
            }
            None => self.stale_reference(),
        };
        self.setpoints = integrate_setpoints(self.setpoints, r, &self.config.scaling);

        if let Err(e) = self.run_reference_period(&mut events) {
            self.fault = Some(e.to_string());
        }

        let record = LogRecord {
            tick: self.stats.reference_ticks,
            reset: input.reset,
            reference: r,
            setpoints: self.setpoints,
            position: self.state.position,
            velocity: self.state.velocity,
            orientation: self.state.orientation,
            angular_rate: self.state.angular_rate,
        };
        self.stats.reference_ticks += 1;
        self.log.records.push(record);
        self.log.events.extend_from_slice(&events);
        self.snapshot(r, events)
    }

    fn run_reference_period(&mut self, events: &mut Vec<RunEvent>) -> Result<(), VehicleError> {
        let dt = self.config.rates.physics_dt;
        let cascade_dt = 1.0 / self.config.rates.cascade_rate;
        let radius = self.config.world.collision_radius;
        for _ in 0..self.decimation.cascades_per_reference {
            let cmd = self.cascade.tick(&self.state, &self.setpoints, cascade_dt)?;
            self.stats.cascade_evals += 1;
            for _ in 0..self.decimation.physics_per_cascade {
                self.state = dynamics_step(&self.config.vehicle, &self.state, &cmd, dt)?;
                self.stats.physics_steps += 1;
            }
            let step_events = self.tracker.advance(&self.maze, self.state.position, radius, self.time());
            let collided = step_events.iter().any(|e| e.kind == RunEventKind::Collision);
            events.extend(step_events);
            if collided && self.config.world.collision_mode == CollisionMode::Reset {
                self.reset_run(events);
            }
        }
        Ok(())
    }

    /// Current state as a telemetry snapshot without advancing.
    pub fn snapshot(&self, reference: ReferenceVector, events: Vec<RunEvent>) -> TelemetrySnapshot {
        let s = &self.state;
        TelemetrySnapshot {
            tick: self.stats.reference_ticks,
            time: self.time(),
            position: s.position,
            velocity: s.velocity,
            orientation: s.orientation,
            angular_rate: s.angular_rate,
            setpoints: self.setpoints,
            reference,
            events,
            hud: Hud::from_state(s, self.maze.origin.z),
            armed: self.refgen.is_armed(),
            hands: self.hands,
            input_seq: self.input_seq,
            halted: self.fault.is_some(),
            fault: self.fault.clone(),
            zone_digest: self.zone_digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("log was recorded with config {recorded}, refusing to replay with {supplied}")]
    DigestMismatch { recorded: String, supplied: String },
    #[error("log record {index} has tick {found}, expected {expected}")]
    TickGap { index: usize, expected: u64, found: u64 },
    #[error("replayed session halted at tick {tick}: {fault}")]
    Halted { tick: u64, fault: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub trajectory: Vec<VehicleState>,
    /// Largest absolute difference over every odometry component.
    pub max_deviation: f64,
    /// Every component reproduced to the bit.
    pub bit_identical: bool,
    /// The log lacked its end marker; only the recorded prefix was replayed.
    pub truncated: bool,
    pub events: Vec<RunEvent>,
}

fn odometry_components(s: &VehicleState) -> [f64; 13] {
    let (p, v, q, w) = (s.position, s.velocity, s.orientation, s.angular_rate);
    [p.x, p.y, p.z, v.x, v.y, v.z, q.w, q.x, q.y, q.z, w.x, w.y, w.z]
}

/// Re-simulate a log from its recorded references and compare odometry.
pub fn replay(log: &RunLog, config: &SessionConfig, maze: &Maze, config_digest: &str) -> Result<Replay, ReplayError> {
    if log.header.config_digest != config_digest {
        return Err(ReplayError::DigestMismatch {
            recorded: log.header.config_digest.clone(),
            supplied: config_digest.to_string(),
        });
    }
    let mut session = Session::new(config.clone(), maze.clone(), log.header.clone())?;
    let mut trajectory = Vec::with_capacity(log.records.len());
    let mut max_deviation: f64 = 0.0;
    let mut bit_identical = true;
    for (index, rec) in log.records.iter().enumerate() {
        if rec.tick != index as u64 {
            return Err(ReplayError::TickGap { index, expected: index as u64, found: rec.tick });
        }
        let snap = session.tick(TickInput { reference: Some(rec.reference), reset: rec.reset, ..TickInput::default() });
        if let Some(fault) = snap.fault {
            return Err(ReplayError::Halted { tick: rec.tick, fault });
        }
        let state = *session.state();
        for (a, b) in odometry_components(&state).iter().zip(odometry_components(&rec.state())) {
            max_deviation = max_deviation.max(libm::fabs(a - b));
            bit_identical &= a.to_bits() == b.to_bits();
        }
        trajectory.push(state);
    }
    let events = session.into_log().events;
    Ok(Replay { trajectory, max_deviation, bit_identical, truncated: !log.complete, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Point2;

    const CORRIDOR: &str = "cell_size=2\nwall_height=3\nname=corridor\n#########\n#S.....F#\n#########\n";

    fn session(source: InputSource) -> Session {
        let mut config = SessionConfig::default();
        config.input.source = source;
        let maze = Maze::parse(CORRIDOR).unwrap();
        let header = LogHeader::new("test", &config, &maze);
        Session::new(config, maze, header).unwrap()
    }

    #[test]
    fn default_config_decimation() {
        let d = SessionConfig::default().validate().unwrap();
        assert_eq!(d, Decimation { physics_per_cascade: 10, cascades_per_reference: 5 });
    }

    #[test]
    fn indivisible_rates_rejected() {
        let mut c = SessionConfig::default();
        c.rates.reference_rate = 30.0;
        assert!(matches!(c.validate(), Err(ConfigError::Indivisible { what: "reference", .. })));
        c.rates.reference_rate = 20.0;
        c.rates.physics_dt = 0.003;
        assert!(matches!(c.validate(), Err(ConfigError::Indivisible { what: "cascade", .. })));
    }

    #[test]
    fn no_input_hovers_in_place() {
        let mut s = session(InputSource::Joystick);
        let start = s.state().position;
        for _ in 0..100 {
            let snap = s.tick(TickInput::default());
            assert_eq!(snap.reference, ReferenceVector::ZERO);
        }
        assert!((s.state().position - start).norm() < 1e-6);
    }

    #[test]
    fn held_joystick_climbs_at_fixed_rate() {
        let mut s = session(InputSource::Joystick);
        let z0 = s.setpoints().z;
        for _ in 0..20 {
            s.tick(TickInput { joy: Some([1.0, 0.0, 0.0, 0.0]), ..TickInput::default() });
        }
        assert!((s.setpoints().z - z0 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn stale_input_holds_then_decays() {
        let mut s = session(InputSource::Joystick);
        s.tick(TickInput { joy: Some([0.0, 1.0, 0.0, 0.0]), ..TickInput::default() });
        // hold 0.5 s = 10 ticks at 20 Hz
        for _ in 0..10 {
            assert_eq!(s.tick(TickInput::default()).reference.r2, 1.0);
        }
        let mid = s.tick(TickInput::default()).reference.r2;
        assert!(mid > 0.0 && mid < 1.0);
        for _ in 0..10 {
            s.tick(TickInput::default());
        }
        assert_eq!(s.tick(TickInput::default()).reference, ReferenceVector::ZERO);
    }

    fn pose_frame(left: Point2, right: Point2) -> KeypointFrame {
        let mut f = KeypointFrame::uniform(Point2::new(0.5, 0.5), 0.0);
        f.points[crate::pose::LEFT_HAND_ROW] = left;
        f.points[crate::pose::RIGHT_HAND_ROW] = right;
        f
    }

    #[test]
    fn pose_never_armed_stays_zero() {
        let mut s = session(InputSource::Pose);
        for k in 0..60 {
            let wobble = 0.02 * (k % 7) as f64;
            let f = pose_frame(Point2::new(0.10 + wobble, 0.25), Point2::new(0.60, 0.70 - wobble));
            let snap = s.tick(TickInput { pose: Some(f), ..TickInput::default() });
            assert_eq!(snap.reference, ReferenceVector::ZERO);
            assert!(!snap.armed);
        }
    }

    #[test]
    fn pose_arms_then_commands() {
        let mut s = session(InputSource::Pose);
        let z1 = Zone::default_zone1().center();
        let z2 = Zone::default_zone2().center();
        s.tick(TickInput { pose: Some(pose_frame(z1, z2)), ..TickInput::default() });
        let mut snap = None;
        for _ in 0..10 {
            snap =
                Some(s.tick(TickInput { pose: Some(pose_frame(Point2::new(z1.x, 0.2), z2)), ..TickInput::default() }));
        }
        let snap = snap.unwrap();
        assert!(snap.armed);
        assert_eq!(snap.reference.r1, 1.0);
    }

    #[test]
    fn run_reset_returns_to_spawn() {
        let mut s = session(InputSource::Joystick);
        for _ in 0..40 {
            s.tick(TickInput { joy: Some([0.0, 0.0, 1.0, 0.0]), ..TickInput::default() });
        }
        assert!(s.state().position.x > s.maze().spawn_position.x + 0.1);
        let snap = s.tick(TickInput { reset: true, ..TickInput::default() });
        assert_eq!(snap.events[0].kind, RunEventKind::Reset);
        assert!((s.state().position - s.maze().spawn_position).norm() < 1e-6);
        assert!(s.log().records.last().unwrap().reset);
    }

    #[test]
    fn replay_of_recorded_run_is_exact() {
        let mut s = session(InputSource::Joystick);
        for k in 0..200 {
            let a = [0.3, if k < 50 { 0.5 } else { 0.0 }, 0.6, -0.2];
            s.tick(TickInput { joy: Some(a), reset: k == 120, ..TickInput::default() });
        }
        let config = s.config().clone();
        let maze = s.maze().clone();
        let log = s.into_log();
        let r = replay(&log, &config, &maze, "test").unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.bit_identical);
        assert_eq!(r.events, log.events);
        assert!(matches!(replay(&log, &config, &maze, "other"), Err(ReplayError::DigestMismatch { .. })));
    }

    #[test]
    fn hud_is_projection_of_state() {
        let mut st = VehicleState::hover_at(Vec3::new(0.0, 0.0, 1.5), core::f64::consts::FRAC_PI_2);
        st.velocity = Vec3::new(3.0, 4.0, 0.0);
        let hud = Hud::from_state(&st, 0.0);
        assert!((hud.compass_yaw - core::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!((hud.height, hud.speed), (1.5, 5.0));
        assert_eq!((hud.horizon_roll, hud.horizon_pitch), (0.0, 0.0));
    }
}
