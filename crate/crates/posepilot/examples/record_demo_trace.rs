//! Fly the reference maze with a simple waypoint autopilot and print the
//! joystick trace it produced. This is how `assets/traces/demo_60s.jsonl`
//! was recorded:
//!
//! ```text
//! cargo run --example record_demo_trace > assets/traces/demo_60s.jsonl
//! ```

use std::collections::{HashMap, VecDeque};

use posepilot::gateway::{Inbound, InboundMessage};
use posepilot::LoadedConfig;
use posepilot_core::math::wrap_angle;
use posepilot_core::session::{InputSource, LogHeader};
use posepilot_core::world::Cell;
use posepilot_core::{Maze, Session, TickInput, Vec3};

const DURATION: f64 = 60.0;
const CRUISE: f64 = 2.0;

/// Corner cell centers along the shortest path from S to F.
fn waypoints(maze: &Maze) -> Vec<Vec3> {
    let cells: Vec<(usize, usize)> = (0..maze.rows).flat_map(|r| (0..maze.cols).map(move |c| (r, c))).collect();
    let start = *cells.iter().find(|&&(r, c)| maze.cell(r, c) == Cell::Start).expect("maze has a start");
    let mut prev = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut goal = None;
    while let Some((r, c)) = queue.pop_front() {
        if maze.cell(r, c) == Cell::Finish {
            goal = Some((r, c));
            break;
        }
        for (dr, dc) in [(0i64, 1i64), (1, 0), (0, -1), (-1, 0)] {
            let (nr, nc) = ((r as i64 + dr) as usize, (c as i64 + dc) as usize);
            if nr < maze.rows && nc < maze.cols && maze.cell(nr, nc) != Cell::Wall && !prev.contains_key(&(nr, nc)) {
                prev.insert((nr, nc), (r, c));
                queue.push_back((nr, nc));
            }
        }
    }
    let mut path = vec![goal.expect("finish reachable")];
    while let Some(&p) = prev.get(path.last().unwrap()) {
        if p == start {
            break;
        }
        path.push(p);
    }
    path.push(start);
    path.reverse();
    // keep only the corners and the finish
    let turns: Vec<(usize, usize)> = (1..path.len())
        .filter(|&i| {
            let Some(n) = path.get(i + 1) else { return true };
            let (a, b) = (path[i - 1], path[i]);
            (b.0 as i64 - a.0 as i64, b.1 as i64 - a.1 as i64) != (n.0 as i64 - b.0 as i64, n.1 as i64 - b.1 as i64)
        })
        .map(|i| path[i])
        .collect();
    turns
        .into_iter()
        .map(|(r, c)| {
            let b = maze.cell_box(r, c);
            Vec3::new((b.min.x + b.max.x) / 2.0, (b.min.y + b.max.y) / 2.0, maze.spawn_position.z)
        })
        .collect()
}

fn main() {
    let loaded = LoadedConfig::defaults();
    let mut config = loaded.config.clone();
    config.input.source = InputSource::Joystick;
    let header = LogHeader::new(loaded.digest.clone(), &config, &loaded.maze);
    let tilt = config.vehicle.gravity * config.scaling.s_theta.tan();
    let (s_psi, s_z) = (config.scaling.s_psi, config.scaling.s_z);
    let period = config.reference_period();
    let mut session = Session::new(config, loaded.maze.clone(), header).expect("default config is valid");

    let route = waypoints(&loaded.maze);
    let mut next = 0;
    println!("# Joystick trace recorded by the waypoint autopilot in examples/record_demo_trace.rs");
    println!("# on the reference maze with the default config. One joy_axes message per reference tick.");
    let ticks = (DURATION / period).round() as u64;
    for k in 0..ticks {
        let st = *session.state();
        let sp = *session.setpoints();
        let mut axes = [0.0; 4];
        if let Some(target) = route.get(next) {
            let d = *target - st.position;
            let dist = (d.x * d.x + d.y * d.y).sqrt();
            let last = next + 1 == route.len();
            if dist < 0.6 && !last {
                next += 1;
            }
            let yaw_err = wrap_angle(d.y.atan2(d.x) - sp.psi);
            let (sin, cos) = sp.psi.sin_cos();
            let fwd = d.x * cos + d.y * sin;
            let lat = -d.x * sin + d.y * cos;
            let v_fwd = st.velocity.x * cos + st.velocity.y * sin;
            let v_lat = -st.velocity.x * sin + st.velocity.y * cos;
            // turn on the spot first, then fly
            let aligned = yaw_err.abs() < 0.25;
            let v_goal = if aligned { (0.8 * fwd).clamp(-CRUISE, CRUISE) } else { 0.0 };
            let yaw_rate = if dist > 0.3 { (yaw_err / (3.0 * s_psi)).clamp(-1.0, 1.0) } else { 0.0 };
            axes[0] = ((target.z - sp.z) / (5.0 * s_z)).clamp(-1.0, 1.0);
            axes[1] = yaw_rate;
            axes[2] = (1.2 * (v_goal - v_fwd) / tilt).clamp(-1.0, 1.0);
            axes[3] = (-(1.0 * lat - 1.5 * v_lat) / tilt).clamp(-1.0, 1.0);
        }
        let t = k as f64 * period;
        let msg = InboundMessage::new(k, t, Inbound::JoyAxes { axes: axes.to_vec() });
        println!("{}", msg.to_json());
        session.tick(TickInput { joy: Some(axes), input_seq: Some(k), ..TickInput::default() });
    }
    let log = session.into_log();
    eprintln!(
        "traversal {:?} s, {} collisions, waypoint {}/{}",
        log.traversal_time(),
        log.collision_count(),
        next,
        route.len()
    );
}
