//! Maze environment: ASCII map loading, sphere-vs-wall collision and
//! traversal timing.
//!
//! Map grammar (see `docs/maze-format.md`):
//!
//! ```text
//! cell_size=1.0
//! wall_height=2.5
//! name=corridor
//! spawn_height=1.0
//! spawn_yaw=0.0
//! #####
//! #S.F#
//! #####
//! ```
//!
//! `cell_size` and `wall_height` are required (meters). `name`, `spawn_height`
//! (meters above ground, default 1.0) and `spawn_yaw` (radians, default 0)
//! are optional. Header lines come before the grid. Lines starting with `;`
//! are comments.
//!
//! Grid characters: `#` wall, `.` free, `S` start gate (spawn at the first
//! one in reading order), `F` finish gate. Row 0 is the northernmost row;
//! column `c`, row `r` occupies `x in [c, c+1) * cell_size`,
//! `y in [rows-1-r, rows-r) * cell_size`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("maze line {line}, column {column}: {kind}")]
pub struct MazeError {
    pub line: usize,
    pub column: usize,
    pub kind: MazeErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MazeErrorKind {
    #[error("unknown header key `{0}`")]
    UnknownKey(String),
    #[error("header `{0}` is not a positive number")]
    BadNumber(String),
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error("unexpected character `{0}` in grid")]
    BadCell(char),
    #[error("row has {found} cells, expected {expected}")]
    Ragged { expected: usize, found: usize },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("no `{0}` marker in grid")]
    MissingMarker(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Wall,
    Free,
    Start,
    Finish,
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn closest_point(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn distance_squared(&self, p: Vec3) -> f64 {
        let d = p - self.closest_point(p);
        d.dot(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maze {
    pub name: String,
    pub cell_size: f64,
    pub wall_height: f64,
    pub rows: usize,
    pub cols: usize,
    cells: Vec<Cell>,
    /// World position of the south-west ground corner of the grid.
    pub origin: Vec3,
    pub spawn_position: Vec3,
    pub spawn_yaw: f64,
}

impl Maze {
    /// Parse the ASCII map document.
    pub fn parse(text: &str) -> Result<Maze, MazeError> {
        let mut cell_size = None;
        let mut wall_height = None;
        let mut name = String::new();
        let mut spawn_height = 1.0;
        let mut spawn_yaw = 0.0;
        let mut grid: Vec<(usize, &str)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.is_empty() || line.trim_start().starts_with(';') {
                continue;
            }
            if grid.is_empty() {
                if let Some((key, value)) = line.split_once('=') {
                    let (key, value) = (key.trim(), value.trim());
                    let err = |kind| MazeError { line: line_no, column: 1, kind };
                    let number = |allow_zero: bool| -> Result<f64, MazeError> {
                        match value.parse::<f64>() {
                            Ok(v) if v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0)) => Ok(v),
                            _ => Err(err(MazeErrorKind::BadNumber(key.to_string()))),
                        }
                    };
                    match key {
                        "cell_size" => cell_size = Some(number(false)?),
                        "wall_height" => wall_height = Some(number(false)?),
                        "spawn_height" => spawn_height = number(false)?,
                        "spawn_yaw" => {
                            spawn_yaw = value
                                .parse::<f64>()
                                .ok()
                                .filter(|v| v.is_finite())
                                .ok_or_else(|| err(MazeErrorKind::BadNumber(key.to_string())))?
                        }
                        "name" => name = value.to_string(),
                        _ => return Err(err(MazeErrorKind::UnknownKey(key.to_string()))),
                    }
                    continue;
                }
            }
            grid.push((line_no, line));
        }

        let last_line = text.lines().count().max(1);
        let cell_size =
            cell_size.ok_or(MazeError { line: 1, column: 1, kind: MazeErrorKind::MissingHeader("cell_size") })?;
        let wall_height =
            wall_height.ok_or(MazeError { line: 1, column: 1, kind: MazeErrorKind::MissingHeader("wall_height") })?;
        if grid.is_empty() {
            return Err(MazeError { line: last_line, column: 1, kind: MazeErrorKind::EmptyGrid });
        }

        let cols = grid[0].1.chars().count();
        let rows = grid.len();
        let mut cells = Vec::with_capacity(rows * cols);
        for &(line_no, line) in &grid {
            let found = line.chars().count();
            if found != cols {
                return Err(MazeError {
                    line: line_no,
                    column: found.min(cols) + 1,
                    kind: MazeErrorKind::Ragged { expected: cols, found },
                });
            }
            for (col, ch) in line.chars().enumerate() {
                let cell = match ch {
                    '#' => Cell::Wall,
                    '.' => Cell::Free,
                    'S' => Cell::Start,
                    'F' => Cell::Finish,
                    other => {
                        return Err(MazeError { line: line_no, column: col + 1, kind: MazeErrorKind::BadCell(other) })
                    }
                };
                cells.push(cell);
            }
        }

        let start = cells.iter().position(|c| *c == Cell::Start);
        let Some(start) = start else {
            return Err(MazeError { line: last_line, column: 1, kind: MazeErrorKind::MissingMarker('S') });
        };
        let has_finish = cells.contains(&Cell::Finish);
        // A lone `S` cell is a degenerate maze whose start gate is also the finish.
        if !has_finish && !(rows == 1 && cols == 1) {
            return Err(MazeError { line: last_line, column: 1, kind: MazeErrorKind::MissingMarker('F') });
        }

        let mut maze = Maze {
            name,
            cell_size,
            wall_height,
            rows,
            cols,
            cells,
            origin: Vec3::ZERO,
            spawn_position: Vec3::ZERO,
            spawn_yaw,
        };
        let (r, c) = (start / cols, start % cols);
        let center = maze.cell_center(r, c);
        maze.spawn_position = Vec3::new(center.x, center.y, spawn_height);
        Ok(maze)
    }

    /// The same maze shifted rigidly by `offset` (ground plane included).
    pub fn translated(&self, offset: Vec3) -> Maze {
        let mut m = self.clone();
        m.origin += offset;
        m.spawn_position += offset;
        m
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.cols + col]
    }

    pub fn wall_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == Cell::Wall).count()
    }

    fn cell_center(&self, row: usize, col: usize) -> Vec3 {
        let b = self.cell_box(row, col);
        Vec3::new(0.5 * (b.min.x + b.max.x), 0.5 * (b.min.y + b.max.y), self.origin.z)
    }

    /// Box of one grid cell, ground to wall top.
    pub fn cell_box(&self, row: usize, col: usize) -> Aabb {
        let cs = self.cell_size;
        let x0 = self.origin.x + col as f64 * cs;
        let y0 = self.origin.y + (self.rows - 1 - row) as f64 * cs;
        Aabb {
            min: Vec3::new(x0, y0, self.origin.z),
            max: Vec3::new(x0 + cs, y0 + cs, self.origin.z + self.wall_height),
        }
    }

    /// All wall boxes.
    pub fn wall_boxes(&self) -> Vec<Aabb> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.cell(r, c) == Cell::Wall {
                    out.push(self.cell_box(r, c));
                }
            }
        }
        out
    }

    /// Grid cell containing the horizontal position, if inside the grid.
    pub fn cell_at(&self, p: Vec3) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (col, from_south) = (libm::floor(fx) as usize, libm::floor(fy) as usize);
        if col >= self.cols || from_south >= self.rows {
            return None;
        }
        Some((self.rows - 1 - from_south, col))
    }

    pub fn in_start_gate(&self, p: Vec3) -> bool {
        matches!(self.cell_at(p).map(|(r, c)| self.cell(r, c)), Some(Cell::Start))
    }

    pub fn in_finish_gate(&self, p: Vec3) -> bool {
        match self.cell_at(p).map(|(r, c)| self.cell(r, c)) {
            Some(Cell::Finish) => true,
            Some(Cell::Start) => !self.cells.contains(&Cell::Finish),
            _ => false,
        }
    }

    /// Sphere vs ground plane and wall boxes. Wall contact is closed: a
    /// center exactly `radius` from a face collides.
    pub fn check_collision(&self, position: Vec3, radius: f64) -> bool {
        if position.z - radius < self.origin.z {
            return true;
        }
        let cs = self.cell_size;
        let col_range = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
            // one extra cell each side keeps touching faces in range despite rounding
            let a = libm::floor(lo / cs) - 1.0;
            let b = libm::floor(hi / cs) + 1.0;
            if b < 0.0 || a >= n as f64 {
                return None;
            }
            Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
        };
        let rel = position - self.origin;
        let Some((c0, c1)) = col_range(rel.x - radius, rel.x + radius, self.cols) else { return false };
        let Some((s0, s1)) = col_range(rel.y - radius, rel.y + radius, self.rows) else { return false };
        let r2 = radius * radius;
        for from_south in s0..=s1 {
            let row = self.rows - 1 - from_south;
            for col in c0..=c1 {
                if self.cell(row, col) == Cell::Wall && self.cell_box(row, col).distance_squared(position) <= r2 {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunEventKind {
    RunStarted,
    Collision,
    Finished,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub kind: RunEventKind,
    /// Seconds since session start.
    pub time: f64,
    pub position: Vec3,
}

pub type RunEvents = ArrayVec<RunEvent, 4>;

/// Start/finish and contact bookkeeping for one traversal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunTracker {
    started: Option<f64>,
    finished: Option<f64>,
    in_contact: bool,
    collisions: usize,
}

impl RunTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feed one sample; `t` must be non-decreasing.
    pub fn advance(&mut self, maze: &Maze, position: Vec3, radius: f64, t: f64) -> RunEvents {
        let mut events = RunEvents::new();
        let event = |kind| RunEvent { kind, time: t, position };
        if self.started.is_none() && (!maze.in_start_gate(position) || maze.in_finish_gate(position)) {
            self.started = Some(t);
            events.push(event(RunEventKind::RunStarted));
        }
        let contact = maze.check_collision(position, radius);
        if contact && !self.in_contact {
            self.collisions += 1;
            events.push(event(RunEventKind::Collision));
        }
        self.in_contact = contact;
        if self.started.is_some() && self.finished.is_none() && maze.in_finish_gate(position) {
            self.finished = Some(t);
            events.push(event(RunEventKind::Finished));
        }
        events
    }

    pub fn started_at(&self) -> Option<f64> {
        self.started
    }

    pub fn finished_at(&self) -> Option<f64> {
        self.finished
    }

    pub fn collision_count(&self) -> usize {
        self.collisions
    }

    pub fn in_contact(&self) -> bool {
        self.in_contact
    }

    /// `finished - started` once the finish gate has been reached.
    pub fn traversal_time(&self) -> Option<f64> {
        Some(self.finished? - self.started?)
    }
}
