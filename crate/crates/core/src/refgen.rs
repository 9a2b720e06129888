//! Zone-based reference generation and setpoint integration.
//!
//! Zone one (left wrist) carries height on its vertical axis and yaw on its
//! horizontal axis; zone two (right wrist) carries pitch vertically and roll
//! horizontally. Each axis is a 1-D band `outer_lo < dead_lo < dead_hi <
//! outer_hi`; inside the dead interval the output is zero, in the active
//! bands it is proportional to the distance from the zone center normalized
//! by the outer half-width.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{HandPair, Point2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefgenError {
    #[error("rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}] must be non-empty and inside the unit square")]
    BadRect { x_min: f64, y_min: f64, x_max: f64, y_max: f64 },
    #[error("dead zone must be strictly nested inside the outer zone")]
    NotNested,
    #[error("scaling factor {0} must be strictly positive")]
    BadScale(&'static str),
    #[error("expected 4 joystick axes, got {0}")]
    AxisCount(usize),
    #[error("joystick axis {0} is not finite")]
    NonFiniteAxis(usize),
    #[error("axis map entry {0} is out of range")]
    BadAxisMap(usize),
    #[error("reference component r{index} = {value} outside [-1, 1]")]
    ReferenceRange { index: usize, value: f64 },
}

/// Axis-aligned rectangle in normalized image coordinates, given by its
/// upper-left `(x_min, y_min)` and lower-right `(x_max, y_max)` corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, RefgenError> {
        let r = Rect { x_min, y_min, x_max, y_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), RefgenError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.x_min < self.x_max
            && self.y_min < self.y_max
            && [self.x_min, self.y_min, self.x_max, self.y_max].into_iter().all(unit)
        {
            Ok(())
        } else {
            Err(RefgenError::BadRect { x_min: self.x_min, y_min: self.y_min, x_max: self.x_max, y_max: self.y_max })
        }
    }

    /// Closed containment.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }
}

/// Control zone: outer rectangle with a strictly nested dead zone. The center
/// is the outer midpoint, so the reference reaches magnitude one on the outer
/// edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZoneSpec", into = "ZoneSpec")]
pub struct Zone {
    outer: Rect,
    dead: Rect,
    center: Point2,
}

#[derive(Serialize, Deserialize)]
struct ZoneSpec {
    outer: Rect,
    dead: Rect,
}

impl TryFrom<ZoneSpec> for Zone {
    type Error = RefgenError;
    fn try_from(s: ZoneSpec) -> Result<Self, RefgenError> {
        Zone::new(s.outer, s.dead)
    }
}

impl From<Zone> for ZoneSpec {
    fn from(z: Zone) -> Self {
        ZoneSpec { outer: z.outer, dead: z.dead }
    }
}

impl Zone {
    pub fn new(outer: Rect, dead: Rect) -> Result<Self, RefgenError> {
        outer.validate()?;
        dead.validate()?;
        let nested = outer.x_min < dead.x_min
            && dead.x_max < outer.x_max
            && outer.y_min < dead.y_min
            && dead.y_max < outer.y_max;
        if !nested {
            return Err(RefgenError::NotNested);
        }
        Ok(Zone { outer, dead, center: outer.center() })
    }

    /// Left-half default zone (height / yaw).
    pub fn default_zone1() -> Zone {
        Zone::new(
            Rect { x_min: 0.05, y_min: 0.20, x_max: 0.45, y_max: 0.80 },
            Rect { x_min: 0.20, y_min: 0.45, x_max: 0.30, y_max: 0.55 },
        )
        .expect("default zone one is nested")
    }

    /// Right-half default zone (pitch / roll).
    pub fn default_zone2() -> Zone {
        Zone::new(
            Rect { x_min: 0.55, y_min: 0.20, x_max: 0.95, y_max: 0.80 },
            Rect { x_min: 0.70, y_min: 0.45, x_max: 0.80, y_max: 0.55 },
        )
        .expect("default zone two is nested")
    }

    pub fn outer(&self) -> Rect {
        self.outer
    }

    pub fn dead(&self) -> Rect {
        self.dead
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    fn map_x(&self, p: f64, mode: ZoneMode) -> f64 {
        map_axis_with(p, self.outer.x_min, self.dead.x_min, self.dead.x_max, self.outer.x_max, self.center.x, mode)
    }

    fn map_y(&self, p: f64, mode: ZoneMode) -> f64 {
        map_axis_with(p, self.outer.y_min, self.dead.y_min, self.dead.y_max, self.outer.y_max, self.center.y, mode)
    }
}

/// Shape of the active band response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandResponse {
    /// Proportional to distance from the center; jumps from 0 to a nonzero
    /// value at the dead-zone edge.
    #[default]
    Verbatim,
    /// Grows from 0 at the dead-zone edge to +-1 at the outer edge.
    RescaledContinuous,
}

/// Response outside the outer rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutsideResponse {
    #[default]
    Zero,
    ClampAtBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneMode {
    #[serde(default)]
    pub band: BandResponse,
    #[serde(default)]
    pub outside: OutsideResponse,
}

/// One axis of the zone mapping with the default (verbatim, zero outside)
/// behavior.
///
/// The outer bounds are inclusive: `p == outer_lo` is active and yields
/// `(center - outer_lo) / half_width`. The dead interval is closed.
pub fn map_axis(p: f64, outer_lo: f64, dead_lo: f64, dead_hi: f64, outer_hi: f64, center: f64) -> f64 {
    map_axis_with(p, outer_lo, dead_lo, dead_hi, outer_hi, center, ZoneMode::default())
}

pub fn map_axis_with(
    p: f64,
    outer_lo: f64,
    dead_lo: f64,
    dead_hi: f64,
    outer_hi: f64,
    center: f64,
    mode: ZoneMode,
) -> f64 {
    debug_assert!(outer_lo < dead_lo && dead_lo < dead_hi && dead_hi < outer_hi);
    let p = match mode.outside {
        OutsideResponse::Zero if p < outer_lo || p > outer_hi => return 0.0,
        OutsideResponse::Zero => p,
        OutsideResponse::ClampAtBoundary => p.clamp(outer_lo, outer_hi),
    };
    if !(p < dead_lo || p > dead_hi) {
        return 0.0;
    }
    let r = match mode.band {
        BandResponse::Verbatim => {
            // (center - p) / half, arranged so the outer edges map to exactly +-1
            // when the center is the outer midpoint.
            let half = 0.5 * (outer_hi - outer_lo);
            let mid = 0.5 * (outer_lo + outer_hi);
            1.0 - (p - outer_lo) / half + (center - mid) / half
        }
        BandResponse::RescaledContinuous if p < dead_lo => (dead_lo - p) / (dead_lo - outer_lo),
        BandResponse::RescaledContinuous => -(p - dead_hi) / (outer_hi - dead_hi),
    };
    r.clamp(-1.0, 1.0)
}

/// Reference tuple `(r1, r2, r3, r4)` = (height, yaw, pitch, roll), each in
/// `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceVector {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

impl ReferenceVector {
    pub const ZERO: ReferenceVector = ReferenceVector { r1: 0.0, r2: 0.0, r3: 0.0, r4: 0.0 };

    pub fn new(r1: f64, r2: f64, r3: f64, r4: f64) -> Result<Self, RefgenError> {
        let r = ReferenceVector { r1, r2, r3, r4 };
        for (i, v) in r.to_array().into_iter().enumerate() {
            if !(-1.0..=1.0).contains(&v) {
                return Err(RefgenError::ReferenceRange { index: i + 1, value: v });
            }
        }
        Ok(r)
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self, RefgenError> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }

    pub fn scaled(self, k: f64) -> Self {
        ReferenceVector { r1: self.r1 * k, r2: self.r2 * k, r3: self.r3 * k, r4: self.r4 * k }
    }
}

/// Per-tick scaling of references into setpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingFactors {
    /// Meters per reference tick.
    pub s_z: f64,
    /// Radians.
    pub s_phi: f64,
    /// Radians.
    pub s_theta: f64,
    /// Radians per reference tick.
    pub s_psi: f64,
}

impl Default for ScalingFactors {
    fn default() -> Self {
        ScalingFactors { s_z: 0.01, s_phi: 0.15, s_theta: 0.15, s_psi: 0.06 }
    }
}

impl ScalingFactors {
    pub fn validate(&self) -> Result<(), RefgenError> {
        for (name, v) in [("s_z", self.s_z), ("s_phi", self.s_phi), ("s_theta", self.s_theta), ("s_psi", self.s_psi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RefgenError::BadScale(name));
            }
        }
        Ok(())
    }
}

/// Commanded attitude and height.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Setpoints {
    /// Absolute roll, rad.
    pub phi: f64,
    /// Absolute pitch, rad.
    pub theta: f64,
    /// Integrated yaw, rad (unwrapped).
    pub psi: f64,
    /// Integrated height, m.
    pub z: f64,
}

/// One reference tick: roll and pitch are absolute, yaw and height integrate.
pub fn integrate_setpoints(prev: Setpoints, r: ReferenceVector, s: &ScalingFactors) -> Setpoints {
    Setpoints { phi: r.r4 * s.s_phi, theta: r.r3 * s.s_theta, psi: prev.psi + r.r2 * s.s_psi, z: prev.z + r.r1 * s.s_z }
}

/// Pose path: two zones plus the arming latch.
///
/// Output stays zero until both wrists have been seen inside their dead zones
/// at the same time. The latch survives hand loss and is cleared only by
/// [`ReferenceGenerator::reset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGenerator {
    pub zone1: Zone,
    pub zone2: Zone,
    pub mode: ZoneMode,
    armed: bool,
}

impl ReferenceGenerator {
    pub fn new(zone1: Zone, zone2: Zone, mode: ZoneMode) -> Self {
        Self { zone1, zone2, mode, armed: false }
    }

    pub fn is_armed(&self) -> bool {
        self.armed
    }

    pub fn reset(&mut self) {
        self.armed = false;
    }

    pub fn make_reference(&mut self, hands: &HandPair) -> ReferenceVector {
        if !self.armed {
            self.armed = self.zone1.dead().contains(hands.left) && self.zone2.dead().contains(hands.right);
            if !self.armed {
                return ReferenceVector::ZERO;
            }
        }
        reference_from_zones(hands, &self.zone1, &self.zone2, self.mode)
    }
}

/// Unlatched mapping of both wrists through their zones.
pub fn reference_from_zones(hands: &HandPair, zone1: &Zone, zone2: &Zone, mode: ZoneMode) -> ReferenceVector {
    ReferenceVector {
        r1: zone1.map_y(hands.left.y, mode),
        r2: zone1.map_x(hands.left.x, mode),
        r3: zone2.map_y(hands.right.y, mode),
        r4: zone2.map_x(hands.right.x, mode),
    }
}

/// Joystick axis assignment. `source[i]` is the input axis feeding `r(i+1)`,
/// optionally sign-inverted.
///
/// The default is Mode-2 RC order: axes arrive as (left stick vertical, left
/// stick horizontal, right stick vertical, right stick horizontal) already
/// signed so that up/left is positive, matching the zone semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisMap {
    pub source: [usize; 4],
    #[serde(default)]
    pub invert: [bool; 4],
}

impl Default for AxisMap {
    fn default() -> Self {
        AxisMap { source: [0, 1, 2, 3], invert: [false; 4] }
    }
}

impl AxisMap {
    pub fn validate(&self) -> Result<(), RefgenError> {
        match self.source.iter().position(|&s| s > 3) {
            Some(i) => Err(RefgenError::BadAxisMap(i)),
            None => Ok(()),
        }
    }

    /// Clamp each axis to `[-1, 1]` and route it to its reference slot.
    pub fn joy_to_reference(&self, axes: &[f64]) -> Result<ReferenceVector, RefgenError> {
        if axes.len() != 4 {
            return Err(RefgenError::AxisCount(axes.len()));
        }
        self.validate()?;
        if let Some(i) = axes.iter().position(|a| !a.is_finite()) {
            return Err(RefgenError::NonFiniteAxis(i));
        }
        let r: [f64; 4] = core::array::from_fn(|i| {
            let v = axes[self.source[i]].clamp(-1.0, 1.0);
            if self.invert[i] {
                -v
            } else {
                v
            }
        });
        Ok(ReferenceVector { r1: r[0], r2: r[1], r3: r[2], r4: r[3] })
    }
}
