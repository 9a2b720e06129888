//! Core of the posepilot teleoperation workbench.
//!
//! Everything in this crate is pure computation over owned values: keypoint
//! filtering, zone-based reference generation, setpoint integration, the
//! cascaded PID quadrotor model, maze collision and run timing, the
//! fixed-timestep session loop and raw TLX workload scoring. It builds
//! without `std` (only `alloc`), so IO, file formats and networking live in
//! the companion `posepilot` crate.
//!
//! The data flow of one reference tick:
//!
//! ```text
//! KeypointFrame -> MovingAverage -> HandPair -> ReferenceGenerator ─┐
//! joystick axes -> AxisMap ──────────────────────────────────────────┤
//!                                                                    v
//!                       ReferenceVector -> Setpoints -> Cascade -> dynamics_step
//!                                                                    |
//!                                              RunTracker <- position┘
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod math;
pub mod metrics;
pub mod pose;
pub mod refgen;
pub mod session;
pub mod vehicle;
pub mod world;

pub use math::{Quat, Vec3};
pub use pose::{FilteredPose, HandPair, KeypointFrame, MovingAverage, Point2, PoseError};
pub use refgen::{AxisMap, Rect, ReferenceGenerator, ReferenceVector, ScalingFactors, Setpoints, Zone, ZoneMode};

pub use session::{RunLog, Session, SessionConfig, TelemetrySnapshot, TickInput};
pub use vehicle::{BodyCommand, Cascade, PidGains, VehicleParams, VehicleState};
pub use world::{Maze, RunEvent, RunEventKind, RunTracker};
