//! Landmark-based featurization, distances and classification of planar
//! trajectories.
//!
//! A trajectory is a polyline of (optionally timed) waypoints. The crate turns
//! trajectories into fixed-length vectors through a set of landmark points
//! ([`featurize`]), chooses landmarks at random or by a mistake-driven loop
//! ([`landmarks`]), offers the usual trajectory distances ([`distances`]),
//! native classifiers and an evaluation protocol ([`classify`]), and a JSON
//! driven experiment runner ([`harness`]).

pub mod classify;
pub mod distances;
pub mod error;
pub mod featurize;
pub mod geometry;
pub mod harness;
pub mod landmarks;
pub mod rng;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::Point;
pub use trajectory::{Dataset, Label, LabeledTrajectory, Trajectory, Waypoint};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
