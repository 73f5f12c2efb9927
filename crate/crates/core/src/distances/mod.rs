//! Trajectory distances: the landmark distances, elastic and shape baselines,
//! LSH sketches, and pairwise matrices.

mod elastic;
mod lsh;
mod matrix;

pub use elastic::{discrete_frechet, dtw, edr_dist, erp_dist, lcss_dist};
pub use lsh::{lsh_distance, lsh_sketch, random_circles, Circle, Sketch};
pub use matrix::{distance_matrix, write_matrix_csv, FittedMeasure, Measure};

use crate::error::{Error, Result};
use crate::featurize::FeatureVector;
use crate::geometry::{distance_to_polyline, nearest_on_trajectory, Point};
use crate::landmarks::LandmarkSet;
use crate::trajectory::Trajectory;

/// Default matching threshold for LCSS and EDR.
pub const DEFAULT_EPSILON: f64 = 0.02;

/// Scaled Euclidean distance `|u - v| / sqrt(n)` between landmark vectors.
pub fn d_q(u: &FeatureVector, v: &FeatureVector) -> Result<f64> {
    if u.kind != v.kind {
        return Err(Error::IncompatibleFeatures(u.kind, v.kind));
    }
    d_q_values(&u.values, &v.values)
}

pub(crate) fn d_q_values(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::EmptyLandmarks);
    }
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / u.len() as f64).sqrt())
}

/// Mean distance between the nearest points of `a` and `b` to each landmark.
pub fn d_q_pi(a: &Trajectory, b: &Trajectory, landmarks: &LandmarkSet) -> f64 {
    let qs = landmarks.points();
    let total: f64 = qs
        .iter()
        .map(|&q| nearest_on_trajectory(q, a).point.dist(nearest_on_trajectory(q, b).point))
        .sum();
    total / qs.len() as f64
}

pub(crate) fn nearest_points(t: &Trajectory, landmarks: &LandmarkSet) -> Vec<Point> {
    landmarks.points().iter().map(|&q| nearest_on_trajectory(q, t).point).collect()
}

fn directed_hausdorff(a: &Trajectory, b: &Trajectory) -> f64 {
    a.positions()
        .map(|p| distance_to_polyline(p, b.points()))
        .fold(0.0, f64::max)
}

/// Waypoints of each curve against the polyline of the other, worst case.
pub fn hausdorff(a: &Trajectory, b: &Trajectory) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn segment_path(a: &Trajectory, b: &Trajectory) -> f64 {
    a.positions().map(|p| distance_to_polyline(p, b.points())).sum::<f64>() / a.len() as f64
}

/// Symmetric segment-path distance.
pub fn sspd(a: &Trajectory, b: &Trajectory) -> f64 {
    (segment_path(a, b) + segment_path(b, a)) / 2.0
}
