//! Quadrotor rigid-body model and the cascaded attitude/height controller.
//!
//! World frame is x forward, y left, z up. The outer loops (roll, pitch, yaw,
//! z) turn setpoint errors into rate setpoints; the inner loops (body rates
//! and vertical speed) produce angular and vertical acceleration demands,
//! which are converted to body torque through the inertia and to collective
//! thrust about hover `m * g`. Positive roll banks toward -y, positive pitch
//! tips the thrust vector toward +x, positive yaw is counterclockwise seen
//! from above.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{wrap_angle, Quat, Vec3};
use crate::refgen::Setpoints;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VehicleError {
    #[error("non-finite input to the {0} loop")]
    NonFiniteError(&'static str),
    #[error("non-finite body command")]
    NonFiniteCommand,
    #[error("time step {0} s outside the allowed range")]
    BadTimeStep(f64),
    #[error("invalid vehicle parameter: {0}")]
    BadParameter(&'static str),
}

/// Physical parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub mass: f64,
    /// Diagonal of the body inertia tensor, kg m^2.
    pub inertia: Vec3,
    pub thrust_max: f64,
    /// Linear drag coefficient, N s / m.
    pub drag: f64,
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 0.5,
            inertia: Vec3::new(2.1e-3, 2.45e-3, 4.4e-3),
            thrust_max: 14.0,
            drag: 0.1,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.mass) {
            return Err(VehicleError::BadParameter("mass"));
        }
        if !(pos(self.inertia.x) && pos(self.inertia.y) && pos(self.inertia.z)) {
            return Err(VehicleError::BadParameter("inertia"));
        }
        if !(self.thrust_max.is_finite() && self.thrust_max > self.mass * self.gravity) {
            return Err(VehicleError::BadParameter("thrust_max must exceed hover thrust"));
        }
        if !(self.drag >= 0.0 && self.drag.is_finite()) {
            return Err(VehicleError::BadParameter("drag"));
        }
        if !pos(self.gravity) {
            return Err(VehicleError::BadParameter("gravity"));
        }
        Ok(())
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// World <- body.
    pub orientation: Quat,
    /// Body frame, rad/s.
    pub angular_rate: Vec3,
}

impl VehicleState {
    /// At rest, level, with the given heading.
    pub fn hover_at(position: Vec3, yaw: f64) -> Self {
        VehicleState {
            position,
            velocity: Vec3::ZERO,
            orientation: if yaw == 0.0 { Quat::IDENTITY } else { Quat::from_yaw(yaw) },
            angular_rate: Vec3::ZERO,
        }
    }

    /// `(roll, pitch, yaw)` in radians.
    pub fn euler(&self) -> (f64, f64, f64) {
        self.orientation.to_euler()
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.orientation.is_finite()
            && self.angular_rate.is_finite()
    }
}

/// Total thrust along body z and body-frame torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyCommand {
    pub thrust: f64,
    pub torque: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub p: f64,
    pub i: f64,
    pub d: f64,
}

impl Gains {
    pub const fn new(p: f64, i: f64, d: f64) -> Self {
        Gains { p, i, d }
    }
}

/// Gains of the eight loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub roll: Gains,
    pub roll_rate: Gains,
    pub pitch: Gains,
    pub pitch_rate: Gains,
    pub yaw: Gains,
    pub yaw_rate: Gains,
    pub z: Gains,
    pub z_rate: Gains,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            roll: Gains::new(10.0, 0.25, 0.25),
            roll_rate: Gains::new(50.0, 50.0, 0.0),
            pitch: Gains::new(10.0, 0.25, 0.25),
            pitch_rate: Gains::new(50.0, 50.0, 0.0),
            yaw: Gains::new(2.5, 1.0, 0.1),
            yaw_rate: Gains::new(30.0, 0.0, 0.0),
            z: Gains::new(0.5, 0.125, 0.0),
            z_rate: Gains::new(75.0, 10.0, 0.41),
        }
    }
}

impl PidGains {
    fn all(&self) -> [Gains; 8] {
        [self.roll, self.roll_rate, self.pitch, self.pitch_rate, self.yaw, self.yaw_rate, self.z, self.z_rate]
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let ok = self.all().iter().all(|g| [g.p, g.i, g.d].iter().all(|v| *v >= 0.0 && v.is_finite()));
        if ok {
            Ok(())
        } else {
            Err(VehicleError::BadParameter("PID gains must be finite and non-negative"))
        }
    }
}

/// Symmetric clamp on each loop's error integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegralLimits {
    pub roll: f64,
    pub roll_rate: f64,
    pub pitch: f64,
    pub pitch_rate: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub z: f64,
    pub z_rate: f64,
}

impl Default for IntegralLimits {
    fn default() -> Self {
        IntegralLimits {
            roll: 0.5,
            roll_rate: 1.0,
            pitch: 0.5,
            pitch_rate: 1.0,
            yaw: 0.5,
            yaw_rate: 1.0,
            z: 0.25,
            z_rate: 1.0,
        }
    }
}

impl IntegralLimits {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let all =
            [self.roll, self.roll_rate, self.pitch, self.pitch_rate, self.yaw, self.yaw_rate, self.z, self.z_rate];
        if all.iter().all(|v| *v >= 0.0 && !v.is_nan()) {
            Ok(())
        } else {
            Err(VehicleError::BadParameter("integral limits must be non-negative"))
        }
    }
}

/// Parallel-form PID with a rectangle-rule integral, derivative on the
/// measurement and a clamped integrator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pid {
    integral: f64,
    prev_measurement: Option<f64>,
}

impl Pid {
    pub fn reset(&mut self) {
        *self = Pid::default();
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Advance one step. On non-finite input the state is left untouched.
    pub fn step(
        &mut self,
        gains: &Gains,
        integral_limit: f64,
        error: f64,
        measurement: f64,
        dt: f64,
    ) -> Result<f64, VehicleError> {
        if !(error.is_finite() && measurement.is_finite()) {
            return Err(VehicleError::NonFiniteError("pid"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(VehicleError::BadTimeStep(dt));
        }
        let integral = (self.integral + error * dt).clamp(-integral_limit, integral_limit);
        let derivative = match self.prev_measurement {
            Some(prev) => -(measurement - prev) / dt,
            None => 0.0,
        };
        let out = gains.p * error + gains.i * integral + gains.d * derivative;
        if !out.is_finite() {
            return Err(VehicleError::NonFiniteError("pid"));
        }
        self.integral = integral;
        self.prev_measurement = Some(measurement);
        Ok(out)
    }
}

/// Outer/inner rate setpoints of the last cascade evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CascadeTrace {
    pub rate_setpoint: Vec3,
    pub vz_setpoint: f64,
    pub angular_accel: Vec3,
    pub vertical_accel: f64,
}

/// The cascaded controller state.
#[derive(Debug, Clone)]
pub struct Cascade {
    pub gains: PidGains,
    pub limits: IntegralLimits,
    pub params: VehicleParams,
    roll: Pid,
    roll_rate: Pid,
    pitch: Pid,
    pitch_rate: Pid,
    yaw: Pid,
    yaw_rate: Pid,
    z: Pid,
    z_rate: Pid,
    /// Continuous yaw used as the derivative measurement across the +-pi seam.
    yaw_track: Option<(f64, f64)>,
    last: CascadeTrace,
}

/// Lower bound on `cos(roll) * cos(pitch)` for tilt compensation.
const MIN_TILT_COS: f64 = 0.5;

impl Cascade {
    pub fn new(gains: PidGains, limits: IntegralLimits, params: VehicleParams) -> Self {
        Cascade {
            gains,
            limits,
            params,
            roll: Pid::default(),
            roll_rate: Pid::default(),
            pitch: Pid::default(),
            pitch_rate: Pid::default(),
            yaw: Pid::default(),
            yaw_rate: Pid::default(),
            z: Pid::default(),
            z_rate: Pid::default(),
            yaw_track: None,
            last: CascadeTrace::default(),
        }
    }

    pub fn reset(&mut self) {
        *self = Cascade::new(self.gains, self.limits, self.params);
    }

    pub fn last_trace(&self) -> CascadeTrace {
        self.last
    }

    /// One controller evaluation.
    pub fn tick(&mut self, state: &VehicleState, sp: &Setpoints, dt: f64) -> Result<BodyCommand, VehicleError> {
        let (roll, pitch, yaw) = state.euler();
        let w = state.angular_rate;
        let g = self.gains;
        let lim = self.limits;
        let label = |name: &'static str| move |_| VehicleError::NonFiniteError(name);

        let yaw_cont = match self.yaw_track {
            Some((prev_wrapped, prev_cont)) => prev_cont + wrap_angle(yaw - prev_wrapped),
            None => yaw,
        };

        // Outer loops work on a copy so a fault leaves every loop untouched.
        let mut next = self.clone();
        let p_sp = next.roll.step(&g.roll, lim.roll, sp.phi - roll, roll, dt).map_err(label("roll"))?;
        let q_sp = next.pitch.step(&g.pitch, lim.pitch, sp.theta - pitch, pitch, dt).map_err(label("pitch"))?;
        let r_sp = next.yaw.step(&g.yaw, lim.yaw, wrap_angle(sp.psi - yaw), yaw_cont, dt).map_err(label("yaw"))?;
        let vz_sp = next.z.step(&g.z, lim.z, sp.z - state.position.z, state.position.z, dt).map_err(label("z"))?;

        let ax = next.roll_rate.step(&g.roll_rate, lim.roll_rate, p_sp - w.x, w.x, dt).map_err(label("roll rate"))?;
        let ay =
            next.pitch_rate.step(&g.pitch_rate, lim.pitch_rate, q_sp - w.y, w.y, dt).map_err(label("pitch rate"))?;
        let az = next.yaw_rate.step(&g.yaw_rate, lim.yaw_rate, r_sp - w.z, w.z, dt).map_err(label("yaw rate"))?;
        let vz = state.velocity.z;
        let acc_z = next.z_rate.step(&g.z_rate, lim.z_rate, vz_sp - vz, vz, dt).map_err(label("z rate"))?;

        let p = &self.params;
        let tilt = (libm::cos(roll) * libm::cos(pitch)).max(MIN_TILT_COS);
        let thrust = (p.mass * (p.gravity + acc_z) / tilt).clamp(0.0, p.thrust_max);
        let accel = Vec3::new(ax, ay, az);
        let torque = accel.hadamard(p.inertia);

        next.yaw_track = Some((yaw, yaw_cont));
        next.last = CascadeTrace {
            rate_setpoint: Vec3::new(p_sp, q_sp, r_sp),
            vz_setpoint: vz_sp,
            angular_accel: accel,
            vertical_accel: acc_z,
        };
        *self = next;
        Ok(BodyCommand { thrust, torque })
    }
}

/// Largest physics step accepted by [`dynamics_step`].
pub const MAX_PHYSICS_DT: f64 = 0.01;

/// Semi-implicit Euler step of the Newton-Euler equations.
///
/// Velocities are updated first from the forces at the current pose, then
/// position and attitude advance with the new velocities.
pub fn dynamics_step(
    params: &VehicleParams,
    state: &VehicleState,
    cmd: &BodyCommand,
    dt: f64,
) -> Result<VehicleState, VehicleError> {
    if !(dt > 0.0 && dt <= MAX_PHYSICS_DT) {
        return Err(VehicleError::BadTimeStep(dt));
    }
    if !(cmd.thrust.is_finite() && cmd.torque.is_finite()) {
        return Err(VehicleError::NonFiniteCommand);
    }
    let m = params.mass;
    let force = state.orientation.rotate(Vec3::new(0.0, 0.0, cmd.thrust))
        - Vec3::new(0.0, 0.0, m * params.gravity)
        - state.velocity * params.drag;
    let velocity = state.velocity + force * (dt / m);
    let position = state.position + velocity * dt;

    let inertia = params.inertia;
    let w = state.angular_rate;
    let gyro = w.cross(w.hadamard(inertia));
    let net = cmd.torque - gyro;
    let angular_rate = w + Vec3::new(net.x / inertia.x, net.y / inertia.y, net.z / inertia.z) * dt;

    let q = state.orientation;
    let omega = Quat { w: 0.0, x: angular_rate.x, y: angular_rate.y, z: angular_rate.z };
    let dq = q.hamilton(omega);
    let h = 0.5 * dt;
    let orientation = Quat { w: q.w + h * dq.w, x: q.x + h * dq.x, y: q.y + h * dq.y, z: q.z + h * dq.z }.normalized();

    let next = VehicleState { position, velocity, orientation, angular_rate };
    if !next.is_finite() {
        return Err(VehicleError::NonFiniteCommand);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_proportional() {
        let mut pid = Pid::default();
        let out = pid.step(&Gains::new(1.0, 0.0, 0.0), 10.0, 0.5, 0.0, 0.01).unwrap();
        assert_eq!(out, 0.5);
    }

    #[test]
    fn rectangle_rule_integral() {
        let mut pid = Pid::default();
        let mut out = 0.0;
        for _ in 0..10 {
            out = pid.step(&Gains::new(0.0, 1.0, 0.0), 10.0, 1.0, 0.0, 0.1).unwrap();
        }
        assert!((out - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_on_measurement_ignores_setpoint_steps() {
        let mut pid = Pid::default();
        let g = Gains::new(0.0, 0.0, 1.0);
        for e in [0.0, 5.0, -3.0, 1.0] {
            assert_eq!(pid.step(&g, 10.0, e, 0.7, 0.01).unwrap(), 0.0);
        }
        assert!((pid.step(&g, 10.0, 0.0, 0.8, 0.01).unwrap() + 10.0).abs() < 1e-9);
    }

    #[test]
    fn integral_clamped() {
        let mut pid = Pid::default();
        for _ in 0..100 {
            pid.step(&Gains::new(0.0, 1.0, 0.0), 0.3, 1.0, 0.0, 0.1).unwrap();
        }
        assert_eq!(pid.integral(), 0.3);
    }

    #[test]
    fn non_finite_error_freezes_state() {
        let mut pid = Pid::default();
        pid.step(&Gains::new(1.0, 1.0, 1.0), 10.0, 0.2, 0.1, 0.1).unwrap();
        let before = pid;
        assert!(pid.step(&Gains::new(1.0, 1.0, 1.0), 10.0, f64::NAN, 0.1, 0.1).is_err());
        assert_eq!(pid, before);
    }

    fn cascade() -> Cascade {
        Cascade::new(PidGains::default(), IntegralLimits::default(), VehicleParams::default())
    }

    #[test]
    fn equilibrium_command_is_hover() {
        let mut c = cascade();
        let s = VehicleState::hover_at(Vec3::new(1.0, 2.0, 1.5), 0.0);
        let sp = Setpoints { phi: 0.0, theta: 0.0, psi: 0.0, z: 1.5 };
        let cmd = c.tick(&s, &sp, 0.01).unwrap();
        assert_eq!(cmd.thrust, VehicleParams::default().hover_thrust());
        assert_eq!(cmd.torque, Vec3::ZERO);
    }

    #[test]
    fn roll_step_gives_positive_roll_torque() {
        let mut c = cascade();
        let s = VehicleState::hover_at(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let sp = Setpoints { phi: 0.15, theta: 0.0, psi: 0.0, z: 1.0 };
        let cmd = c.tick(&s, &sp, 0.01).unwrap();
        assert!(cmd.torque.x > 0.0);
        assert_eq!(cmd.torque.y, 0.0);
    }

    #[test]
    fn climb_setpoint_raises_thrust() {
        let mut c = cascade();
        let s = VehicleState::hover_at(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let sp = Setpoints { phi: 0.0, theta: 0.0, psi: 0.0, z: 2.0 };
        let cmd = c.tick(&s, &sp, 0.01).unwrap();
        assert!(cmd.thrust > VehicleParams::default().hover_thrust());
    }

    #[test]
    fn yaw_error_takes_short_way_round() {
        let mut c = cascade();
        let s = VehicleState::hover_at(Vec3::new(0.0, 0.0, 1.0), 3.0);
        // 3.0 -> -3.0 is +0.283 rad the short way
        let sp = Setpoints { phi: 0.0, theta: 0.0, psi: -3.0, z: 1.0 };
        let cmd = c.tick(&s, &sp, 0.01).unwrap();
        assert!(cmd.torque.z > 0.0);
    }

    #[test]
    fn hover_step_is_exact() {
        let p = VehicleParams::default();
        let s = VehicleState::hover_at(Vec3::new(0.5, -0.5, 1.0), 0.0);
        let cmd = BodyCommand { thrust: p.hover_thrust(), torque: Vec3::ZERO };
        let next = dynamics_step(&p, &s, &cmd, 0.001).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn rejects_bad_dt_and_command() {
        let p = VehicleParams::default();
        let s = VehicleState::default();
        let cmd = BodyCommand::default();
        assert_eq!(dynamics_step(&p, &s, &cmd, 0.02), Err(VehicleError::BadTimeStep(0.02)));
        assert_eq!(dynamics_step(&p, &s, &cmd, 0.0), Err(VehicleError::BadTimeStep(0.0)));
        let nan = BodyCommand { thrust: f64::NAN, torque: Vec3::ZERO };
        assert_eq!(dynamics_step(&p, &s, &nan, 0.001), Err(VehicleError::NonFiniteCommand));
    }

    #[test]
    fn default_gains() {
        let g = PidGains::default();
        assert_eq!((g.yaw.p, g.yaw.i, g.yaw.d), (2.5, 1.0, 0.1));
        assert_eq!((g.z_rate.p, g.z_rate.i, g.z_rate.d), (75.0, 10.0, 0.41));
        assert!(VehicleParams::default().validate().is_ok());
    }
}
