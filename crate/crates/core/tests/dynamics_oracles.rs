use posepilot_core::math::{Quat, Vec3};
use posepilot_core::vehicle::{dynamics_step, BodyCommand, VehicleParams, VehicleState};
use proptest::prelude::*;

const DT: f64 = 1e-3;

fn run(params: &VehicleParams, mut s: VehicleState, cmd: BodyCommand, steps: usize) -> VehicleState {
    for _ in 0..steps {
        s = dynamics_step(params, &s, &cmd, DT).unwrap();
    }
    s
}

#[test]
fn free_fall_matches_closed_form() {
    let params = VehicleParams { drag: 0.0, ..VehicleParams::default() };
    let s0 = VehicleState::hover_at(Vec3::new(0.0, 0.0, 100.0), 0.0);
    let s = run(&params, s0, BodyCommand::default(), 2000);
    let t = 2.0;
    let drop = 0.5 * params.gravity * t * t;
    let v = params.gravity * t;
    assert!(((100.0 - s.position.z) - drop).abs() / drop < 1e-3, "drop {}", 100.0 - s.position.z);
    assert!((-s.velocity.z - v).abs() / v < 1e-3);
    assert_eq!((s.position.x, s.position.y), (0.0, 0.0));
}

#[test]
fn free_fall_with_linear_drag() {
    let params = VehicleParams::default();
    let s = run(&params, VehicleState::hover_at(Vec3::new(0.0, 0.0, 100.0), 0.0), BodyCommand::default(), 2000);
    let (m, c, g, t) = (params.mass, params.drag, params.gravity, 2.0);
    let tau = m / c;
    let v = g * tau * (1.0 - (-t / tau).exp());
    let drop = g * tau * (t - tau * (1.0 - (-t / tau).exp()));
    assert!((-s.velocity.z - v).abs() / v < 1e-3);
    assert!(((100.0 - s.position.z) - drop).abs() / drop < 1e-3);
}

#[test]
fn spin_up_about_yaw_axis() {
    let params = VehicleParams::default();
    let tau = 0.01;
    let cmd = BodyCommand { thrust: params.hover_thrust(), torque: Vec3::new(0.0, 0.0, tau) };
    let s = run(&params, VehicleState::hover_at(Vec3::new(0.0, 0.0, 1.0), 0.0), cmd, 1000);
    let expected = tau * 1.0 / params.inertia.z;
    assert!((s.angular_rate.z - expected).abs() < 1e-6, "{} vs {}", s.angular_rate.z, expected);
    assert_eq!((s.angular_rate.x, s.angular_rate.y), (0.0, 0.0));
}

#[test]
fn hover_thrust_holds_position() {
    let params = VehicleParams::default();
    let s0 = VehicleState::hover_at(Vec3::new(1.0, -2.0, 1.0), 0.7);
    let cmd = BodyCommand { thrust: params.hover_thrust(), torque: Vec3::ZERO };
    let s = run(&params, s0, cmd, 100);
    assert!((s.position - s0.position).norm() < 1e-6);
}

#[test]
fn attitude_stays_unit_over_a_million_steps() {
    let params = VehicleParams::default();
    let mut s = VehicleState::hover_at(Vec3::new(0.0, 0.0, 1e6), 0.0);
    s.angular_rate = Vec3::new(0.3, -0.2, 0.5);
    let cmd = BodyCommand { thrust: params.hover_thrust(), torque: Vec3::ZERO };
    let s = run(&params, s, cmd, 1_000_000);
    assert!((s.orientation.norm() - 1.0).abs() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torque_free_spin_keeps_momentum_magnitude(
        w in prop::array::uniform3(-2.0f64..2.0),
        roll in -0.5f64..0.5, pitch in -0.5f64..0.5, yaw in -3.0f64..3.0,
    ) {
        let params = VehicleParams { gravity: 0.0, drag: 0.0, ..VehicleParams::default() };
        let mut s = VehicleState::hover_at(Vec3::ZERO, 0.0);
        s.orientation = Quat::from_euler(roll, pitch, yaw);
        s.angular_rate = Vec3::new(w[0], w[1], w[2]);
        let h0 = s.angular_rate.hadamard(params.inertia).norm();
        let s = run(&params, s, BodyCommand::default(), 1000);
        let h1 = s.angular_rate.hadamard(params.inertia).norm();
        prop_assert!((h1 - h0).abs() <= 1e-2 * h0.max(1e-12), "{} -> {}", h0, h1);
    }

    #[test]
    fn thrust_along_tilted_body_axis(roll in -0.6f64..0.6, pitch in -0.6f64..0.6) {
        let params = VehicleParams { gravity: 0.0, drag: 0.0, ..VehicleParams::default() };
        let mut s = VehicleState::hover_at(Vec3::ZERO, 0.0);
        s.orientation = Quat::from_euler(roll, pitch, 0.0);
        let cmd = BodyCommand { thrust: 2.0, torque: Vec3::ZERO };
        let s1 = dynamics_step(&params, &s, &cmd, DT).unwrap();
        let dir = s.orientation.rotate(Vec3::new(0.0, 0.0, 1.0));
        let expect = dir * (2.0 / params.mass * DT);
        prop_assert!((s1.velocity - expect).norm() < 1e-15);
    }
}

#[test]
fn rejects_oversized_steps() {
    let params = VehicleParams::default();
    let s = VehicleState::hover_at(Vec3::ZERO, 0.0);
    assert!(dynamics_step(&params, &s, &BodyCommand::default(), 0.02).is_err());
    assert!(dynamics_step(&params, &s, &BodyCommand::default(), 0.0).is_err());
}
