//! Binary sketches from random circles.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_polyline, Point};
use crate::landmarks::eta_for_dataset;
use crate::rng;
use crate::trajectory::{Dataset, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sketch {
    pub bits: Vec<bool>,
}

/// Bit `j` is set when the curve passes within circle `j`.
pub fn lsh_sketch(traj: &Trajectory, circles: &[Circle]) -> Result<Sketch> {
    if circles.is_empty() {
        return Err(Error::invalid("circles", "need at least one circle"));
    }
    Ok(Sketch {
        bits: circles
            .iter()
            .map(|c| distance_to_polyline(c.center, traj.points()) <= c.radius)
            .collect(),
    })
}

/// Hamming distance between two sketches.
pub fn lsh_distance(a: &Sketch, b: &Sketch) -> Result<f64> {
    if a.bits.len() != b.bits.len() {
        return Err(Error::DimensionMismatch {
            left: a.bits.len(),
            right: b.bits.len(),
        });
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count() as f64)
}

/// `count` circles with centres uniform over the bounding box of the training
/// waypoints and the radius given by the `eta` rule on the same data.
pub fn random_circles(train: &Dataset, count: usize, seed: u64) -> Result<Vec<Circle>> {
    if count == 0 {
        return Err(Error::invalid("circles", "need at least one circle"));
    }
    let radius = eta_for_dataset(train)?;
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in train.trajectories().flat_map(Trajectory::positions) {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let mut rng = rng::rng(seed);
    Ok((0..count)
        .map(|_| Circle {
            center: Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y)),
            radius,
        })
        .collect())
}
