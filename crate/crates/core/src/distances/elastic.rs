//! Alignment-based distances computed by dynamic programming over waypoints.

use crate::geometry::Point;
use crate::trajectory::Trajectory;

fn pts(t: &Trajectory) -> Vec<Point> {
    t.positions().collect()
}

/// Two-row DP over the `|a| x |b|` grid. `cell(i, j, diag, up, left)` fills
/// entry `(i, j)`; out-of-grid neighbours are passed as `None`.
fn grid_dp(
    a: &[Point],
    b: &[Point],
    mut cell: impl FnMut(usize, usize, Option<f64>, Option<f64>, Option<f64>) -> f64,
) -> f64 {
    let mut prev = vec![0.0; b.len()];
    let mut cur = vec![0.0; b.len()];
    for i in 0..a.len() {
        for j in 0..b.len() {
            let diag = (i > 0 && j > 0).then(|| prev[j - 1]);
            let up = (i > 0).then(|| prev[j]);
            let left = (j > 0).then(|| cur[j - 1]);
            cur[j] = cell(i, j, diag, up, left);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len() - 1]
}

fn min3(a: Option<f64>, b: Option<f64>, c: Option<f64>) -> Option<f64> {
    [a, b, c].into_iter().flatten().reduce(f64::min)
}

/// Discrete Fréchet distance: the smallest achievable maximum pair distance over
/// monotone couplings of the two waypoint sequences.
pub fn discrete_frechet(a: &Trajectory, b: &Trajectory) -> f64 {
    let (a, b) = (pts(a), pts(b));
    grid_dp(&a, &b, |i, j, diag, up, left| {
        let d = a[i].dist(b[j]);
        min3(diag, up, left).map_or(d, |m| m.max(d))
    })
}

/// Dynamic time warping with the sum of Euclidean pair distances as cost.
pub fn dtw(a: &Trajectory, b: &Trajectory) -> f64 {
    let (a, b) = (pts(a), pts(b));
    grid_dp(&a, &b, |i, j, diag, up, left| a[i].dist(b[j]) + min3(diag, up, left).unwrap_or(0.0))
}

/// Full-table DP for edit-style recurrences with a base row and column.
fn edit_dp(
    a: &[Point],
    b: &[Point],
    base_row: impl Fn(usize) -> f64,
    base_col: impl Fn(usize) -> f64,
    mut step: impl FnMut(usize, usize, f64, f64, f64) -> f64,
) -> f64 {
    let mut prev: Vec<f64> = (0..=b.len()).map(&base_row).collect();
    let mut cur = vec![0.0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = base_col(i);
        for j in 1..=b.len() {
            cur[j] = step(i - 1, j - 1, prev[j - 1], prev[j], cur[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - LCSS / min(|a|, |b|)`, where waypoints match within `epsilon`.
pub fn lcss_dist(a: &Trajectory, b: &Trajectory, epsilon: f64) -> f64 {
    let (a, b) = (pts(a), pts(b));
    let lcss = edit_dp(&a, &b, |_| 0.0, |_| 0.0, |i, j, diag, up, left| {
        if a[i].dist(b[j]) <= epsilon {
            diag + 1.0
        } else {
            up.max(left)
        }
    });
    1.0 - lcss / a.len().min(b.len()) as f64
}

/// Edit distance on real sequences, normalized by the longer length.
pub fn edr_dist(a: &Trajectory, b: &Trajectory, epsilon: f64) -> f64 {
    let (a, b) = (pts(a), pts(b));
    let edits = edit_dp(&a, &b, |j| j as f64, |i| i as f64, |i, j, diag, up, left| {
        let sub = if a[i].dist(b[j]) <= epsilon { 0.0 } else { 1.0 };
        (diag + sub).min(up + 1.0).min(left + 1.0)
    });
    edits / a.len().max(b.len()) as f64
}

/// Edit distance with real penalty: gaps cost the distance to `gap`.
pub fn erp_dist(a: &Trajectory, b: &Trajectory, gap: Point) -> f64 {
    let (a, b) = (pts(a), pts(b));
    let prefix = |s: &[Point]| -> Vec<f64> {
        let mut acc = vec![0.0];
        for p in s {
            acc.push(acc[acc.len() - 1] + p.dist(gap));
        }
        acc
    };
    let (ga, gb) = (prefix(&a), prefix(&b));
    edit_dp(&a, &b, |j| gb[j], |i| ga[i], |i, j, diag, up, left| {
        (diag + a[i].dist(b[j]))
            .min(up + a[i].dist(gap))
            .min(left + b[j].dist(gap))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::from_xy("t", pts).unwrap()
    }

    #[test]
    fn frechet_examples() {
        let a = t(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(discrete_frechet(&a, &a), 0.0);
        assert_eq!(discrete_frechet(&a, &t(&[(0.0, 1.0), (1.0, 1.0)])), 1.0);
        assert_eq!(discrete_frechet(&t(&[(0.0, 0.0)]), &t(&[(0.0, 3.0)])), 3.0);
    }

    #[test]
    fn dtw_examples() {
        let a = t(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(dtw(&a, &a), 0.0);
        assert_eq!(dtw(&t(&[(0.0, 0.0)]), &t(&[(3.0, 4.0)])), 5.0);
        assert!((dtw(&a, &t(&[(0.0, 1.0)])) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn lcss_examples() {
        let a = t(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(lcss_dist(&a, &a, 1e-9), 0.0);
        assert_eq!(lcss_dist(&a, &t(&[(9.0, 9.0), (8.0, 8.0)]), 0.5), 1.0);
        assert_eq!(lcss_dist(&a, &t(&[(0.0, 0.1), (5.0, 5.0)]), 0.5), 0.5);
    }

    #[test]
    fn edr_examples() {
        let a = t(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(edr_dist(&a, &a, 0.1), 0.0);
        assert_eq!(edr_dist(&a, &t(&[(9.0, 9.0), (8.0, 8.0)]), 0.1), 1.0);
        assert_eq!(edr_dist(&a, &t(&[(0.0, 0.05)]), 0.1), 0.5);
    }

    #[test]
    fn erp_examples() {
        let a = t(&[(1.0, 0.0), (0.0, 2.0)]);
        let g = Point::new(0.0, 0.0);
        assert_eq!(erp_dist(&a, &a, g), 0.0);
        assert_eq!(erp_dist(&t(&[(1.0, 0.0)]), &t(&[(2.0, 0.0)]), g), 1.0);
        // deleting every point of `a` costs its total distance to the gap
        assert_eq!(erp_dist(&t(&[(3.0, 4.0)]), &t(&[(0.0, 0.0)]), g), 5.0);
    }
}
