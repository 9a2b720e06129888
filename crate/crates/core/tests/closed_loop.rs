use posepilot_core::math::Vec3;
use posepilot_core::refgen::Setpoints;
use posepilot_core::vehicle::{dynamics_step, Cascade, IntegralLimits, PidGains, VehicleParams, VehicleState};

const PHYSICS_DT: f64 = 1e-3;
const PER_CASCADE: usize = 10;

/// Runs the cascade at 100 Hz over 1 ms physics for `seconds`, returning the state after each cascade period.
fn fly(sp: Setpoints, start: VehicleState, seconds: f64) -> Vec<VehicleState> {
    let params = VehicleParams::default();
    let mut cascade = Cascade::new(PidGains::default(), IntegralLimits::default(), params);
    let mut s = start;
    let n = (seconds / (PHYSICS_DT * PER_CASCADE as f64)).round() as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let cmd = cascade.tick(&s, &sp, PHYSICS_DT * PER_CASCADE as f64).unwrap();
        for _ in 0..PER_CASCADE {
            s = dynamics_step(&params, &s, &cmd, PHYSICS_DT).unwrap();
        }
        out.push(s);
    }
    out
}

fn hover() -> VehicleState {
    VehicleState::hover_at(Vec3::new(0.0, 0.0, 1.0), 0.0)
}

fn level(z: f64) -> Setpoints {
    Setpoints { phi: 0.0, theta: 0.0, psi: 0.0, z }
}

#[test]
fn roll_step_settles_within_two_seconds() {
    let track = fly(Setpoints { phi: 0.15, ..level(1.0) }, hover(), 4.0);
    // 2 s = 200 cascade periods; stays settled afterwards
    for s in &track[199..] {
        assert!((s.euler().0 - 0.15).abs() < 0.01, "roll {}", s.euler().0);
    }
}

#[test]
fn pitch_step_settles_like_roll() {
    let track = fly(Setpoints { theta: -0.15, ..level(1.0) }, hover(), 4.0);
    for s in &track[199..] {
        assert!((s.euler().1 + 0.15).abs() < 0.01);
    }
}

#[test]
fn height_step_settles_within_five_seconds() {
    let track = fly(level(2.0), hover(), 60.0);
    for s in &track[499..] {
        assert!((s.position.z - 2.0).abs() < 0.05, "z {}", s.position.z);
    }
}

#[test]
fn yaw_step_converges() {
    let track = fly(Setpoints { psi: 1.0, ..level(1.0) }, hover(), 20.0);
    let last = track.last().unwrap();
    assert!((last.euler().2 - 1.0).abs() < 0.02);
}

#[test]
fn combined_setpoints_stay_bounded_for_sixty_seconds() {
    let sp = Setpoints { phi: 0.1, theta: -0.1, psi: 2.0, z: 3.0 };
    let track = fly(sp, hover(), 60.0);
    for s in &track {
        assert!(s.is_finite());
        let (r, p, _) = s.euler();
        assert!(r.abs() < 0.5 && p.abs() < 0.5);
        assert!(s.angular_rate.norm() < 10.0);
    }
    let (r, p, _) = track.last().unwrap().euler();
    assert!((r - 0.1).abs() < 0.01 && (p + 0.1).abs() < 0.01);
    assert!((track.last().unwrap().position.z - 3.0).abs() < 0.05);
}
