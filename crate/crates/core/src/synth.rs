//! Synthetic labeled datasets for tests, demos and the determinism check.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng;
use crate::trajectory::{Dataset, LabeledTrajectory, Trajectory, Waypoint};

/// Two overlapping classes of timed random walks.
///
/// Class 0 drifts east quickly with few stops; class 1 drifts north-east more
/// slowly and pauses often. Start points share one region so the classes are
/// separable only in part.
pub fn two_class(per_class: usize, seed: u64) -> Dataset {
    let mut rng = rng::rng(seed);
    let mut items = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let label = (i % 2) as u32;
        let n = rng.random_range(12..40);
        let (heading, speed, stop_p) = if label == 0 { (0.0f64, 1.0, 0.05) } else { (0.6f64, 0.6, 0.3) };
        let mut x: f64 = rng.random_range(-3.0..3.0);
        let mut y: f64 = rng.random_range(-3.0..3.0);
        let mut t = 0.0;
        let mut angle = heading;
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            pts.push(Waypoint::timed(t, x, y));
            t += rng.random_range(5.0..15.0);
            let turn: f64 = rng.sample(StandardNormal);
            angle += 0.4 * turn;
            angle = heading + 0.7 * (angle - heading);
            if !rng.random_bool(stop_p) {
                let step = speed * rng.random_range(0.5..1.5);
                x += step * angle.cos();
                y += step * angle.sin();
            }
        }
        let traj = Trajectory::new(format!("s{i}"), pts).expect("finite, ordered waypoints");
        items.push(LabeledTrajectory::new(traj, label));
    }
    Dataset::new("synthetic", items).expect("unique ids")
}
