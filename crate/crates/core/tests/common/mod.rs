//! Shared helpers and independent oracles for the integration tests.
#![allow(dead_code)]

use posepilot_core::pose::{KeypointFrame, Point2, KEYPOINT_ROWS};
use posepilot_core::world::Maze;
use posepilot_core::Vec3;
use rand::Rng;

/// Random keypoint frame; each row is dropped with probability `p_missing`.
pub fn random_frame<R: Rng>(rng: &mut R, p_missing: f64) -> KeypointFrame {
    let rows: Vec<Option<[f64; 2]>> =
        (0..KEYPOINT_ROWS).map(|_| (!rng.gen_bool(p_missing)).then(|| [rng.gen::<f64>(), rng.gen::<f64>()])).collect();
    KeypointFrame::from_rows(&rows, 0.0).unwrap()
}

/// Brute force: textbook mean over the last `n` frames, per row, over the
/// frames that detected the row.
pub fn window_mean(history: &[KeypointFrame], n: usize, row: usize) -> Option<Point2> {
    let start = history.len().saturating_sub(n);
    let samples: Vec<Point2> = history[start..].iter().filter(|f| f.valid[row]).map(|f| f.points[row]).collect();
    if samples.is_empty() {
        return None;
    }
    let k = samples.len() as f64;
    Some(Point2::new(samples.iter().map(|p| p.x).sum::<f64>() / k, samples.iter().map(|p| p.y).sum::<f64>() / k))
}

/// Random maze text: border of walls, interior walls with probability
/// `density`, S top-left and F bottom-right of the interior.
pub fn random_maze_text<R: Rng>(rng: &mut R, rows: usize, cols: usize, density: f64) -> String {
    let cell = rng.gen_range(0.5..3.0);
    let height = rng.gen_range(1.0..4.0);
    let mut s = format!("cell_size={cell}\nwall_height={height}\n");
    for r in 0..rows {
        for c in 0..cols {
            let border = r == 0 || c == 0 || r == rows - 1 || c == cols - 1;
            let ch = if border {
                '#'
            } else if (r, c) == (1, 1) {
                'S'
            } else if (r, c) == (rows - 2, cols - 2) {
                'F'
            } else if rng.gen_bool(density) {
                '#'
            } else {
                '.'
            };
            s.push(ch);
        }
        s.push('\n');
    }
    s
}

/// Point-in-solid test using only grid lookup: below ground, or inside a
/// wall cell between ground and wall top (closed).
pub fn point_in_solid(maze: &Maze, p: Vec3) -> bool {
    let rel = p - maze.origin;
    if rel.z < 0.0 {
        return true;
    }
    if rel.z > maze.wall_height {
        return false;
    }
    let fx = rel.x / maze.cell_size;
    let fy = rel.y / maze.cell_size;
    // closed boxes: a point on a shared face belongs to both neighbors
    let cols = [fx.floor(), if fx.fract() == 0.0 { fx - 1.0 } else { fx.floor() }];
    let rows = [fy.floor(), if fy.fract() == 0.0 { fy - 1.0 } else { fy.floor() }];
    for cx in cols {
        for sy in rows {
            if cx < 0.0 || sy < 0.0 || cx >= maze.cols as f64 || sy >= maze.rows as f64 {
                continue;
            }
            let row = maze.rows - 1 - sy as usize;
            if maze.cell(row, cx as usize) == posepilot_core::world::Cell::Wall {
                return true;
            }
        }
    }
    false
}

/// `n` nearly uniform unit vectors (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            Vec3::new(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

/// Monte-Carlo oracle: the ball touches solid if its center or any sampled
/// surface point does.
pub fn sampled_contact(maze: &Maze, center: Vec3, radius: f64, dirs: &[Vec3]) -> bool {
    point_in_solid(maze, center) || dirs.iter().any(|d| point_in_solid(maze, center + *d * radius))
}
