//! Point-to-polyline projection and local frames along a trajectory.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Trajectory, Waypoint};

/// Relative distance difference below which two candidates count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Rotation by +90 degrees (counterclockwise).
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Closest point of a curve to a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearestPoint {
    pub point: Point,
    pub segment_index: usize,
    /// Position along the segment, in `[0, 1]`.
    pub param: f64,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub tangent: Point,
    /// `tangent` rotated by +90 degrees.
    pub normal: Point,
    pub at_endpoint: bool,
}

#[inline]
fn project(q: Point, a: Point, b: Point) -> NearestPoint {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let param = if len_sq > 0.0 {
        ((q - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let point = if param == 1.0 { b } else { a + ab * param };
    NearestPoint {
        point,
        segment_index: 0,
        param,
        distance: q.dist(point),
    }
}

/// Closest point of the segment `[a, b]` to `q`.
pub fn nearest_on_segment(q: Point, a: Point, b: Point) -> Result<NearestPoint> {
    if a == b {
        return Err(Error::DegenerateSegment);
    }
    Ok(project(q, a, b))
}

/// Closest point of the polyline through `pts` to `q`.
///
/// Ties (within [`TIE_TOLERANCE`] relative) go to the earliest position along the
/// curve. Zero-length segments behave like their start point.
pub fn nearest_on_waypoints(q: Point, pts: &[Waypoint]) -> NearestPoint {
    assert!(!pts.is_empty(), "polyline needs at least one point");
    if pts.len() == 1 {
        let p = pts[0].pos();
        return NearestPoint {
            point: p,
            segment_index: 0,
            param: 0.0,
            distance: q.dist(p),
        };
    }
    let mut best = project(q, pts[0].pos(), pts[1].pos());
    for (i, w) in pts.windows(2).enumerate().skip(1) {
        let cand = project(q, w[0].pos(), w[1].pos());
        if cand.distance < best.distance - TIE_TOLERANCE * best.distance {
            best = NearestPoint {
                segment_index: i,
                ..cand
            };
        }
    }
    best
}

pub fn nearest_on_trajectory(q: Point, traj: &Trajectory) -> NearestPoint {
    nearest_on_waypoints(q, traj.points())
}

/// Euclidean distance from `q` to the polyline through `pts`.
pub fn distance_to_polyline(q: Point, pts: &[Waypoint]) -> f64 {
    if pts.len() == 1 {
        return q.dist(pts[0].pos());
    }
    pts.windows(2)
        .map(|w| project(q, w[0].pos(), w[1].pos()).distance)
        .fold(f64::INFINITY, f64::min)
}

/// Unit direction of segment `i`, or `None` when it has zero length.
fn segment_dir(pts: &[Waypoint], i: usize) -> Option<Point> {
    let d = pts[i + 1].pos() - pts[i].pos();
    let n = d.norm();
    (n > 0.0).then(|| d * (1.0 / n))
}

/// Direction of the nearest non-degenerate segment at or before `i`, else after it.
fn dir_backward(pts: &[Waypoint], i: usize) -> Option<Point> {
    (0..=i).rev().find_map(|j| segment_dir(pts, j)).or_else(|| dir_forward(pts, i))
}

fn dir_forward(pts: &[Waypoint], i: usize) -> Option<Point> {
    (i..pts.len() - 1).find_map(|j| segment_dir(pts, j)).or_else(|| {
        (0..i.min(pts.len() - 1)).rev().find_map(|j| segment_dir(pts, j))
    })
}

fn frame(tangent: Point, at_endpoint: bool) -> LocalFrame {
    LocalFrame {
        tangent,
        normal: tangent.perp(),
        at_endpoint,
    }
}

/// Tangent/normal frame of `traj` at a nearest point computed on it.
///
/// Inside a segment the tangent is the segment direction; at an interior vertex it
/// is the bisector of the two adjacent directions (the earlier one if they cancel);
/// at either end of the curve the adjacent segment is used and `at_endpoint` is set.
/// A single-point trajectory gets the axis-aligned frame.
pub fn frame_at(traj: &Trajectory, np: &NearestPoint) -> LocalFrame {
    let pts = traj.points();
    let nseg = pts.len().saturating_sub(1);
    if nseg == 0 {
        return frame(Point::new(1.0, 0.0), true);
    }
    let i = np.segment_index.min(nseg - 1);
    let axis = || Point::new(1.0, 0.0);

    let at_start = i == 0 && np.param <= 0.0;
    let at_end = i == nseg - 1 && np.param >= 1.0;
    if at_start {
        return frame(dir_forward(pts, 0).unwrap_or_else(axis), true);
    }
    if at_end {
        return frame(dir_backward(pts, nseg - 1).unwrap_or_else(axis), true);
    }

    // interior vertex between segments `before` and `before + 1`
    let vertex = if np.param >= 1.0 {
        Some(i)
    } else if np.param <= 0.0 {
        Some(i - 1)
    } else {
        None
    };
    match vertex {
        None => frame(dir_backward(pts, i).unwrap_or_else(axis), false),
        Some(before) => {
            let u = dir_backward(pts, before).unwrap_or_else(axis);
            let v = dir_forward(pts, before + 1).unwrap_or(u);
            let s = u + v;
            let n = s.norm();
            let t = if n > 1e-12 { s * (1.0 / n) } else { u };
            frame(t, false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(xy: &[(f64, f64)]) -> Trajectory {
        Trajectory::from_xy("t", xy).unwrap()
    }

    /// Dense-sampling oracle for the distance from `q` to a segment.
    fn sampled_segment_distance(q: Point, a: Point, b: Point, samples: usize) -> f64 {
        (0..=samples)
            .map(|k| {
                let s = k as f64 / samples as f64;
                q.dist(a + (b - a) * s)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn segment_perpendicular_foot() {
        let np = nearest_on_segment(Point::new(0.0, 1.0), Point::new(-1.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert_eq!(np.point, Point::new(0.0, 0.0));
        assert_eq!(np.param, 0.5);
        assert_eq!(np.distance, 1.0);
    }

    #[test]
    fn segment_clamped_matches_sampling() {
        let (q, a, b) = (Point::new(3.0, 4.0), Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        let np = nearest_on_segment(q, a, b).unwrap();
        let oracle = sampled_segment_distance(q, a, b, 1_000_000);
        assert_eq!(np.point, b);
        assert!((np.distance - 20f64.sqrt()).abs() < 1e-12);
        assert!((np.distance - oracle).abs() < 1e-9);
    }

    #[test]
    fn segment_at_start_and_degenerate() {
        let a = Point::new(2.0, 3.0);
        let np = nearest_on_segment(a, a, Point::new(5.0, 3.0)).unwrap();
        assert_eq!((np.distance, np.param), (0.0, 0.0));
        assert!(matches!(nearest_on_segment(a, a, a), Err(Error::DegenerateSegment)));
    }

    #[test]
    fn trajectory_on_curve() {
        let t = traj(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)]);
        let q = Point::new(2.0, 1.5);
        let np = nearest_on_trajectory(q, &t);
        assert_eq!(np.distance, 0.0);
        assert_eq!(np.point, q);
        assert_eq!(np.segment_index, 1);
    }

    #[test]
    fn v_shape_tie_goes_to_first_segment() {
        let t = traj(&[(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]);
        let q = Point::new(0.0, 2.0);
        // dense oracle: both arms reach the same minimum
        let arm0 = sampled_segment_distance(q, Point::new(-1.0, 1.0), Point::new(0.0, 0.0), 200_000);
        let arm1 = sampled_segment_distance(q, Point::new(0.0, 0.0), Point::new(1.0, 1.0), 200_000);
        assert!((arm0 - arm1).abs() < 1e-12);
        let np = nearest_on_trajectory(q, &t);
        assert_eq!(np.segment_index, 0);
        assert_eq!(np.point, Point::new(-1.0, 1.0));
        assert!((np.distance - arm0).abs() < 1e-9);
    }

    #[test]
    fn far_query_hits_endpoint() {
        let np = nearest_on_trajectory(Point::new(5.0, 5.0), &traj(&[(0.0, 0.0), (1.0, 0.0)]));
        assert_eq!(np.point, Point::new(1.0, 0.0));
        assert_eq!(np.param, 1.0);
    }

    #[test]
    fn single_point_trajectory() {
        let np = nearest_on_trajectory(Point::new(3.0, 4.0), &traj(&[(0.0, 0.0)]));
        assert_eq!(np.distance, 5.0);
        assert_eq!(np.point, Point::new(0.0, 0.0));
    }

    #[test]
    fn frames() {
        let t = traj(&[(0.0, 0.0), (1.0, 0.0)]);
        let f = frame_at(&t, &nearest_on_trajectory(Point::new(0.3, 0.7), &t));
        assert_eq!((f.tangent, f.normal, f.at_endpoint), (Point::new(1.0, 0.0), Point::new(0.0, 1.0), false));

        let t = traj(&[(0.0, 0.0), (0.0, 1.0)]);
        let f = frame_at(&t, &nearest_on_trajectory(Point::new(0.5, 0.5), &t));
        assert_eq!(f.normal, Point::new(-1.0, 0.0));

        let t = traj(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let np = nearest_on_trajectory(Point::new(2.0, -1.0), &t);
        assert_eq!(np.point, Point::new(1.0, 0.0));
        let f = frame_at(&t, &np);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.tangent.x - r).abs() < 1e-12 && (f.tangent.y - r).abs() < 1e-12);
        assert!(!f.at_endpoint);

        let f = frame_at(&t, &nearest_on_trajectory(Point::new(-1.0, -1.0), &t));
        assert!(f.at_endpoint);
        assert_eq!(f.tangent, Point::new(1.0, 0.0));
        let f = frame_at(&t, &nearest_on_trajectory(Point::new(1.0, 3.0), &t));
        assert!(f.at_endpoint);
        assert_eq!(f.tangent, Point::new(0.0, 1.0));
    }

    #[test]
    fn reversal_vertex_falls_back_to_earlier_direction() {
        let t = traj(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        let np = NearestPoint {
            point: Point::new(1.0, 0.0),
            segment_index: 0,
            param: 1.0,
            distance: 0.0,
        };
        assert_eq!(frame_at(&t, &np).tangent, Point::new(1.0, 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coords() -> impl Strategy<Value = Vec<(f64, f64)>> {
            prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..8)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn nearest_is_global_min(xy in coords(), qx in -15.0..15.0f64, qy in -15.0..15.0f64) {
                let t = Trajectory::from_xy("p", &xy).unwrap();
                let q = Point::new(qx, qy);
                let np = nearest_on_trajectory(q, &t);
                let seg_min = if xy.len() == 1 {
                    q.dist(t.first())
                } else {
                    t.points().windows(2).map(|w| {
                        if w[0].pos() == w[1].pos() { q.dist(w[0].pos()) }
                        else { nearest_on_segment(q, w[0].pos(), w[1].pos()).unwrap().distance }
                    }).fold(f64::INFINITY, f64::min)
                };
                prop_assert!((np.distance - seg_min).abs() <= TIE_TOLERANCE * seg_min);
                prop_assert!((np.distance - q.dist(np.point)).abs() < 1e-12);
                for p in t.positions() {
                    prop_assert!(np.distance <= q.dist(p) + 1e-12);
                }
                let f = frame_at(&t, &np);
                prop_assert_eq!(f.normal, f.tangent.perp());
                prop_assert!((f.tangent.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
