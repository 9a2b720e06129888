use posepilot_core::pose::{KeypointFrame, Point2, LEFT_HAND_ROW, RIGHT_HAND_ROW};
use posepilot_core::session::{replay, InputSource, LogHeader, Session, SessionConfig, TickInput};
use posepilot_core::world::Maze;
use posepilot_core::{ReferenceVector, Zone};
use proptest::prelude::*;

const OPEN: &str = "cell_size=4\nwall_height=6\n#######\n#S....#\n#.....#\n#.....#\n#....F#\n#######\n";

fn session(source: InputSource) -> Session {
    let mut config = SessionConfig::default();
    config.input.source = source;
    let maze = Maze::parse(OPEN).unwrap();
    let header = LogHeader::new("digest", &config, &maze);
    Session::new(config, maze, header).unwrap()
}

fn joy(a: [f64; 4]) -> TickInput {
    TickInput { joy: Some(a), ..TickInput::default() }
}

fn frame(left: Point2, right: Point2) -> KeypointFrame {
    let mut f = KeypointFrame::uniform(Point2::new(0.5, 0.5), 0.0);
    f.points[LEFT_HAND_ROW] = left;
    f.points[RIGHT_HAND_ROW] = right;
    f
}

#[test]
fn held_axes_integrate_exactly() {
    for k in [1u32, 10, 100] {
        let mut s = session(InputSource::Joystick);
        let psi0 = s.setpoints().psi;
        for _ in 0..k {
            s.tick(joy([0.0, 1.0, 0.0, 0.0]));
        }
        assert!((s.setpoints().psi - psi0 - 0.06 * f64::from(k)).abs() <= 1e-12);

        let mut s = session(InputSource::Joystick);
        let z0 = s.setpoints().z;
        for _ in 0..k {
            s.tick(joy([1.0, 0.0, 0.0, 0.0]));
        }
        assert!((s.setpoints().z - z0 - 0.01 * f64::from(k)).abs() <= 1e-12);
    }
}

#[test]
fn rates_decimate_by_whole_ratios() {
    let mut s = session(InputSource::Joystick);
    for _ in 0..37 {
        s.tick(TickInput::default());
    }
    let st = s.stats();
    assert_eq!((st.reference_ticks, st.cascade_evals, st.physics_steps), (37, 185, 1850));
    assert_eq!(s.time(), 1850.0 * 1e-3);
}

#[test]
fn hover_without_input_does_not_drift() {
    let mut s = session(InputSource::Trace);
    let p0 = s.state().position;
    for _ in 0..200 {
        s.tick(TickInput::default());
    }
    assert!((s.state().position - p0).norm() < 1e-6);
}

#[test]
fn pose_and_joystick_agree_on_equal_references() {
    let (z1, z2) = (Zone::default_zone1(), Zone::default_zone2());
    let mut pose = session(InputSource::Pose);
    let mut refs = Vec::new();
    let snap = pose.tick(TickInput { pose: Some(frame(z1.center(), z2.center())), ..TickInput::default() });
    refs.push(snap.reference);
    for k in 0..80 {
        let t = k as f64 / 80.0;
        let left = Point2::new(z1.center().x + 0.05 * (6.0 * t).sin(), 0.22 + 0.05 * t);
        let right = Point2::new(0.9 - 0.2 * t, z2.center().y);
        let snap = pose.tick(TickInput { pose: Some(frame(left, right)), ..TickInput::default() });
        refs.push(snap.reference);
    }
    assert!(refs.iter().any(|r| *r != ReferenceVector::ZERO));

    let mut stick = session(InputSource::Joystick);
    for r in &refs {
        stick.tick(joy([r.r1, r.r2, r.r3, r.r4]));
    }
    let a = pose.into_log();
    let b = stick.into_log();
    assert_eq!(a.records, b.records);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identical_inputs_identical_logs_and_exact_replay(
        axes in prop::collection::vec(prop::option::of(prop::array::uniform4(-1.0f64..1.0)), 1..120),
        reset_at in prop::option::of(0usize..120),
    ) {
        let run = || {
            let mut s = session(InputSource::Joystick);
            for (k, a) in axes.iter().enumerate() {
                s.tick(TickInput { joy: *a, reset: Some(k) == reset_at, ..TickInput::default() });
            }
            s
        };
        let first = run();
        let config = first.config().clone();
        let maze = first.maze().clone();
        let first = first.into_log();
        let second = run().into_log();
        prop_assert_eq!(&first, &second);
        let r = replay(&first, &config, &maze, "digest").unwrap();
        prop_assert!(r.bit_identical);
        prop_assert_eq!(r.max_deviation, 0.0);
        prop_assert_eq!(r.events, first.events);
    }

    #[test]
    fn references_stay_in_unit_box(axes in prop::collection::vec(prop::array::uniform4(-3.0f64..3.0), 1..40)) {
        let mut s = session(InputSource::Joystick);
        for a in &axes {
            let r = s.tick(joy(*a)).reference;
            for v in [r.r1, r.r2, r.r3, r.r4] {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }
}
