//! Keypoint ingestion: frame validation, moving-average smoothing and hand
//! extraction.
//!
//! Frames use normalized image coordinates with x growing rightward and y
//! growing downward. The skeleton follows the 16-row MPII ordering; only the
//! two wrist rows drive control, the others are carried through untouched.

use alloc::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of keypoint rows in a frame.
pub const KEYPOINT_ROWS: usize = 16;
/// Row of the right wrist.
pub const RIGHT_HAND_ROW: usize = 10;
/// Row of the left wrist.
pub const LEFT_HAND_ROW: usize = 15;

/// Default averaging window length.
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseError {
    #[error("keypoint frame must have {KEYPOINT_ROWS} rows, got {0}")]
    RowCount(usize),
    #[error("keypoint row {row} coordinate ({x}, {y}) outside [0, 1]")]
    OutOfRange { row: usize, x: f64, y: f64 },
    #[error("hand keypoint row {0} is not valid")]
    MissingHand(usize),
}

/// One normalized pose sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFrame {
    pub points: [Point2; KEYPOINT_ROWS],
    pub valid: [bool; KEYPOINT_ROWS],
    /// Monotonic seconds.
    pub timestamp: f64,
}

impl KeypointFrame {
    /// Build a frame from rows where `None` marks an undetected keypoint.
    pub fn from_rows(rows: &[Option<[f64; 2]>], timestamp: f64) -> Result<Self, PoseError> {
        if rows.len() != KEYPOINT_ROWS {
            return Err(PoseError::RowCount(rows.len()));
        }
        let mut frame =
            KeypointFrame { points: [Point2::default(); KEYPOINT_ROWS], valid: [false; KEYPOINT_ROWS], timestamp };
        for (i, row) in rows.iter().enumerate() {
            if let Some([x, y]) = *row {
                frame.points[i] = Point2::new(x, y);
                frame.valid[i] = true;
            }
        }
        frame.validate()?;
        Ok(frame)
    }

    /// Every row set to the same point, all valid.
    pub fn uniform(p: Point2, timestamp: f64) -> Self {
        KeypointFrame { points: [p; KEYPOINT_ROWS], valid: [true; KEYPOINT_ROWS], timestamp }
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        for (row, (p, &v)) in self.points.iter().zip(self.valid.iter()).enumerate() {
            if v && !p.in_unit_square() {
                return Err(PoseError::OutOfRange { row, x: p.x, y: p.y });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> [Option<[f64; 2]>; KEYPOINT_ROWS] {
        core::array::from_fn(|i| self.valid[i].then(|| [self.points[i].x, self.points[i].y]))
    }
}

/// Output of the averaging filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredPose {
    pub points: [Point2; KEYPOINT_ROWS],
    /// A row is valid when the newest frame in the window detected it.
    pub valid: [bool; KEYPOINT_ROWS],
    /// Number of frames that were averaged (1..=window).
    pub window_fill: usize,
}

/// Wrist positions used for control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandPair {
    pub left: Point2,
    pub right: Point2,
}

/// Arithmetic moving average over the last `n` keypoint frames.
///
/// Each coordinate is averaged over the frames of the window in which that
/// row was detected, so undetected rows never drag the mean toward zero.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    frames: VecDeque<KeypointFrame>,
}

impl MovingAverage {
    /// Panics if `window` is zero.
    pub fn new(window: usize) -> Self {
        assert!(window >= 1, "averaging window must be at least 1");
        Self { window, frames: VecDeque::with_capacity(window) }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    /// Push one frame and return the average of the retained window. A frame
    /// failing validation leaves the filter untouched.
    pub fn push_frame(&mut self, frame: KeypointFrame) -> Result<FilteredPose, PoseError> {
        frame.validate()?;
        if self.frames.len() == self.window {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(self.current().expect("window holds at least the frame just pushed"))
    }

    /// Average of the current window, if any frame has been seen.
    pub fn current(&self) -> Option<FilteredPose> {
        let newest = self.frames.back()?;
        let mut points = [Point2::default(); KEYPOINT_ROWS];
        for (row, out) in points.iter_mut().enumerate() {
            let mut samples = self.frames.iter().filter(|f| f.valid[row]).map(|f| f.points[row]);
            let Some(anchor) = samples.next() else { continue };
            // Deviations from the first sample are summed so a constant window
            // reproduces its input exactly.
            let (mut dx, mut dy, mut count) = (0.0, 0.0, 1usize);
            for p in samples {
                dx += p.x - anchor.x;
                dy += p.y - anchor.y;
                count += 1;
            }
            let n = count as f64;
            *out = Point2::new((anchor.x + dx / n).clamp(0.0, 1.0), (anchor.y + dy / n).clamp(0.0, 1.0));
        }
        Some(FilteredPose { points, valid: newest.valid, window_fill: self.frames.len() })
    }
}

/// Select the wrist rows: left from row 15, right from row 10.
pub fn extract_hands(pose: &FilteredPose) -> Result<HandPair, PoseError> {
    for row in [RIGHT_HAND_ROW, LEFT_HAND_ROW] {
        if !pose.valid[row] {
            return Err(PoseError::MissingHand(row));
        }
    }
    Ok(HandPair { left: pose.points[LEFT_HAND_ROW], right: pose.points[RIGHT_HAND_ROW] })
}
