#![allow(dead_code, clippy::too_many_arguments)]

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use trajclass::geometry::Point;
use trajclass::landmarks::{LandmarkSet, Provenance};
use trajclass::Trajectory;

pub fn traj(id: &str, pts: &[(f64, f64)]) -> Trajectory {
    Trajectory::from_xy(id, pts).unwrap()
}

pub fn random_traj(rng: &mut ChaCha8Rng, max_len: usize) -> Trajectory {
    let n = rng.random_range(1..=max_len);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
        .collect();
    traj("r", &pts)
}

pub fn random_landmarks(rng: &mut ChaCha8Rng, n: usize) -> LandmarkSet {
    let pts = (0..n)
        .map(|_| Point::new(rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0)))
        .collect();
    LandmarkSet::new(pts, Provenance::User).unwrap()
}

pub fn traj_strategy(max_len: usize) -> impl Strategy<Value = Trajectory> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..=max_len).prop_map(|p| traj("p", &p))
}

/// Every monotone coupling of index sequences `0..n` and `0..m`, visited by
/// depth-first enumeration; `fold` combines pair costs along a path and the
/// smallest path value is returned.
fn enumerate_couplings(n: usize, m: usize, cost: &dyn Fn(usize, usize) -> f64, fold: fn(f64, f64) -> f64) -> f64 {
    fn walk(
        i: usize,
        j: usize,
        acc: f64,
        n: usize,
        m: usize,
        cost: &dyn Fn(usize, usize) -> f64,
        fold: fn(f64, f64) -> f64,
        best: &mut f64,
    ) {
        let acc = fold(acc, cost(i, j));
        if i == n - 1 && j == m - 1 {
            *best = best.min(acc);
            return;
        }
        if i + 1 < n {
            walk(i + 1, j, acc, n, m, cost, fold, best);
        }
        if j + 1 < m {
            walk(i, j + 1, acc, n, m, cost, fold, best);
        }
        if i + 1 < n && j + 1 < m {
            walk(i + 1, j + 1, acc, n, m, cost, fold, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(0, 0, 0.0, n, m, cost, fold, &mut best);
    best
}

/// Minimum over all monotone couplings of the largest paired distance.
pub fn brute_frechet(a: &Trajectory, b: &Trajectory) -> f64 {
    let (pa, pb): (Vec<Point>, Vec<Point>) = (a.positions().collect(), b.positions().collect());
    enumerate_couplings(pa.len(), pb.len(), &|i, j| pa[i].dist(pb[j]), f64::max)
}

/// Minimum over all warping paths of the summed paired distances.
pub fn brute_dtw(a: &Trajectory, b: &Trajectory) -> f64 {
    let (pa, pb): (Vec<Point>, Vec<Point>) = (a.positions().collect(), b.positions().collect());
    enumerate_couplings(pa.len(), pb.len(), &|i, j| pa[i].dist(pb[j]), |x, y| x + y)
}
