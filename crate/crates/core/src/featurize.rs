//! Fixed-dimension feature maps for trajectories.
//!
//! Landmark features evaluate one coordinate per landmark `q`:
//!
//! * `vq`: the distance from `q` to the curve,
//! * `vq_exp`: `exp(-dist^2 / eta^2)`, a Gaussian-localized distance,
//! * `vq_sigma`: a signed, localized distance that records on which side of the
//!   oriented curve `q` lies, with a separate formula when the nearest point is
//!   an end of the curve.
//!
//! `endpoints` and `physical` are landmark-free 4-vectors; the `*_plus` kinds
//! append the physical features to a landmark vector.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::FeatureMatrix;
use crate::error::{Error, Result};
use crate::geometry::{frame_at, nearest_on_trajectory, Point};
use crate::landmarks::LandmarkSet;
use crate::trajectory::{Dataset, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Vq,
    VqExp,
    VqSigma,
    Endpoints,
    Physical,
    VqPlus,
    VqSigmaPlus,
}

impl FeatureKind {
    pub fn uses_landmarks(self) -> bool {
        !matches!(self, FeatureKind::Endpoints | FeatureKind::Physical)
    }

    /// Kind of the geometric part of a "+" kind, and the "+" kind of a geometric one.
    pub fn base(self) -> FeatureKind {
        match self {
            FeatureKind::VqPlus => FeatureKind::Vq,
            FeatureKind::VqSigmaPlus => FeatureKind::VqSigma,
            k => k,
        }
    }

    pub fn with_physical(self) -> Option<FeatureKind> {
        match self {
            FeatureKind::Vq | FeatureKind::VqPlus => Some(FeatureKind::VqPlus),
            FeatureKind::VqSigma | FeatureKind::VqSigmaPlus => Some(FeatureKind::VqSigmaPlus),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Vq => "vq",
            FeatureKind::VqExp => "vq_exp",
            FeatureKind::VqSigma => "vq_sigma",
            FeatureKind::Endpoints => "endpoints",
            FeatureKind::Physical => "physical",
            FeatureKind::VqPlus => "vq_plus",
            FeatureKind::VqSigmaPlus => "vq_sigma_plus",
        }
    }
}

/// Scales for the localized feature maps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub eta: f64,
    pub sigma: f64,
}

impl FeatureParams {
    pub fn new(eta: f64, sigma: f64) -> Result<Self> {
        check_scale("eta", eta)?;
        check_scale("sigma", sigma)?;
        Ok(FeatureParams { eta, sigma })
    }
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { eta: 1.0, sigma: 1.0 }
    }
}

fn check_scale(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Distance from landmark `q` to the curve.
pub fn landmark_distance(traj: &Trajectory, q: Point) -> f64 {
    nearest_on_trajectory(q, traj).distance
}

fn landmark_map(
    landmarks: &LandmarkSet,
    kind: FeatureKind,
    f: impl Fn(Point) -> f64,
) -> Result<FeatureVector> {
    if landmarks.is_empty() {
        return Err(Error::EmptyLandmarks);
    }
    Ok(FeatureVector {
        values: landmarks.points().iter().map(|&q| f(q)).collect(),
        kind,
    })
}

pub fn distance_features(traj: &Trajectory, landmarks: &LandmarkSet) -> Result<FeatureVector> {
    landmark_map(landmarks, FeatureKind::Vq, |q| landmark_distance(traj, q))
}

#[inline]
pub(crate) fn gaussian(d: f64, eta: f64) -> f64 {
    (-(d * d) / (eta * eta)).exp()
}

pub fn gaussian_features(traj: &Trajectory, landmarks: &LandmarkSet, eta: f64) -> Result<FeatureVector> {
    check_scale("eta", eta)?;
    landmark_map(landmarks, FeatureKind::VqExp, |q| gaussian(landmark_distance(traj, q), eta))
}

/// Signed localized distance of one landmark.
pub fn signed_feature(traj: &Trajectory, q: Point, sigma: f64) -> f64 {
    let np = nearest_on_trajectory(q, traj);
    let d = np.distance;
    if d == 0.0 {
        return 0.0;
    }
    let frame = frame_at(traj, &np);
    let r = q - np.point;
    let weight = (-(d * d) / (sigma * sigma)).exp() / sigma;
    if frame.at_endpoint {
        let linf = frame.normal.dot(r).abs().max(frame.tangent.dot(r).abs());
        frame.normal.dot(r) / d * linf * weight
    } else {
        frame.normal.dot(r) * weight
    }
}

pub fn signed_features(traj: &Trajectory, landmarks: &LandmarkSet, sigma: f64) -> Result<FeatureVector> {
    check_scale("sigma", sigma)?;
    if traj.len() < 2 {
        return Err(Error::invalid(
            "trajectory",
            format!("signed features need at least 2 waypoints ({} has {})", traj.id(), traj.len()),
        ));
    }
    landmark_map(landmarks, FeatureKind::VqSigma, |q| signed_feature(traj, q, sigma))
}

pub fn endpoints_feature(traj: &Trajectory) -> FeatureVector {
    let (a, b) = (traj.first(), traj.last());
    FeatureVector {
        values: vec![a.x, a.y, b.x, b.y],
        kind: FeatureKind::Endpoints,
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Mean segment length, velocity, acceleration and jerk.
///
/// Segments with a non-positive time step are left out of the velocity chain;
/// differences use the time step of the later segment.
pub fn physical_features(traj: &Trajectory) -> Result<FeatureVector> {
    let t = traj.times()?;
    let pts: Vec<Point> = traj.positions().collect();
    let lengths: Vec<f64> = pts.windows(2).map(|w| w[0].dist(w[1])).collect();

    // (velocity, dt) over segments with a positive time step
    let chain: Vec<(f64, f64)> = lengths
        .iter()
        .zip(t.windows(2))
        .filter_map(|(&l, w)| {
            let dt = w[1] - w[0];
            (dt > 0.0).then_some((l / dt, dt))
        })
        .collect();
    let velocity: Vec<f64> = chain.iter().map(|c| c.0).collect();
    let accel: Vec<f64> = chain
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) / w[1].1)
        .collect();
    let jerk: Vec<f64> = accel
        .windows(2)
        .zip(chain.iter().skip(2))
        .map(|(a, c)| (a[1] - a[0]) / c.1)
        .collect();

    Ok(FeatureVector {
        values: vec![mean(&lengths), mean(&velocity), mean(&accel), mean(&jerk)],
        kind: FeatureKind::Physical,
    })
}

/// Append physical features to a `vq` or `vq_sigma` vector.
pub fn combine_plus(geo: &FeatureVector, phys: &FeatureVector) -> Result<FeatureVector> {
    let kind = match (geo.kind, phys.kind) {
        (FeatureKind::Vq, FeatureKind::Physical) => FeatureKind::VqPlus,
        (FeatureKind::VqSigma, FeatureKind::Physical) => FeatureKind::VqSigmaPlus,
        (g, p) => return Err(Error::IncompatibleFeatures(g, p)),
    };
    let mut values = Vec::with_capacity(geo.dim() + phys.dim());
    values.extend_from_slice(&geo.values);
    values.extend_from_slice(&phys.values);
    Ok(FeatureVector { values, kind })
}

/// A feature map bound to its landmarks and scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub kind: FeatureKind,
    pub landmarks: Option<LandmarkSet>,
    pub params: FeatureParams,
}

impl Featurizer {
    pub fn new(kind: FeatureKind, landmarks: Option<LandmarkSet>, params: FeatureParams) -> Result<Self> {
        if kind.uses_landmarks() {
            match &landmarks {
                None => return Err(Error::EmptyLandmarks),
                Some(l) if l.is_empty() => return Err(Error::EmptyLandmarks),
                _ => {}
            }
        }
        check_scale("eta", params.eta)?;
        check_scale("sigma", params.sigma)?;
        Ok(Featurizer {
            kind,
            landmarks,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        let q = self.landmarks.as_ref().map_or(0, LandmarkSet::len);
        match self.kind {
            FeatureKind::Vq | FeatureKind::VqExp | FeatureKind::VqSigma => q,
            FeatureKind::Endpoints | FeatureKind::Physical => 4,
            FeatureKind::VqPlus | FeatureKind::VqSigmaPlus => q + 4,
        }
    }

    fn q(&self) -> Result<&LandmarkSet> {
        self.landmarks.as_ref().ok_or(Error::EmptyLandmarks)
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<FeatureVector> {
        match self.kind {
            FeatureKind::Vq => distance_features(traj, self.q()?),
            FeatureKind::VqExp => gaussian_features(traj, self.q()?, self.params.eta),
            FeatureKind::VqSigma => signed_features(traj, self.q()?, self.params.sigma),
            FeatureKind::Endpoints => Ok(endpoints_feature(traj)),
            FeatureKind::Physical => physical_features(traj),
            FeatureKind::VqPlus => combine_plus(&distance_features(traj, self.q()?)?, &physical_features(traj)?),
            FeatureKind::VqSigmaPlus => combine_plus(
                &signed_features(traj, self.q()?, self.params.sigma)?,
                &physical_features(traj)?,
            ),
        }
    }

    /// Featurize trajectories in parallel; rows keep input order.
    pub fn apply_all<'a, I>(&self, trajs: I) -> Result<Vec<Vec<f64>>>
    where
        I: IntoParallelIterator<Item = &'a Trajectory>,
        I::Iter: IndexedParallelIterator,
    {
        trajs
            .into_par_iter()
            .map(|t| self.apply(t).map(|v| v.values))
            .collect()
    }

    pub fn apply_dataset(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let trajs: Vec<&Trajectory> = ds.trajectories().collect();
        let rows = self.apply_all(trajs)?;
        FeatureMatrix::new(self.kind, rows, ds.label_vec())
    }
}

/// Matrix CSV: `traj_id,label,f0..f{d-1}`.
pub fn write_feature_csv<W: Write>(ds: &Dataset, m: &FeatureMatrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::io("<feature csv>", std::io::Error::other(e));
    let mut header = vec!["traj_id".to_owned(), "label".to_owned()];
    header.extend((0..m.dim()).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(io)?;
    for ((it, row), label) in ds.items().iter().zip(m.rows()).zip(m.labels()) {
        let mut rec = vec![it.trajectory.id().to_owned(), label.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::Provenance;
    use crate::trajectory::Waypoint;

    fn line() -> Trajectory {
        Trajectory::from_xy("l", &[(-1.0, 0.0), (1.0, 0.0)]).unwrap()
    }

    fn q(pts: &[(f64, f64)]) -> LandmarkSet {
        LandmarkSet::new(pts.iter().map(|&p| p.into()).collect(), Provenance::User).unwrap()
    }

    #[test]
    fn distances_to_curve() {
        assert_eq!(landmark_distance(&line(), Point::new(0.5, 0.0)), 0.0);
        assert_eq!(landmark_distance(&line(), Point::new(0.0, 1.0)), 1.0);
        let seg = Trajectory::from_xy("s", &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        // dense sampling of the segment
        let oracle = (0..=100_000)
            .map(|k| Point::new(k as f64 / 100_000.0, 0.0).dist(Point::new(3.0, 4.0)))
            .fold(f64::INFINITY, f64::min);
        assert!((landmark_distance(&seg, Point::new(3.0, 4.0)) - oracle).abs() < 1e-9);
        assert!((oracle - 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stacked_vectors() {
        let v = distance_features(&line(), &q(&[(0.0, 1.0), (0.0, 2.0)])).unwrap();
        assert_eq!(v.values, vec![1.0, 2.0]);
        assert_eq!(v.kind, FeatureKind::Vq);
        assert!(distance_features(&line(), &q(&[(0.3, 0.0)])).unwrap().values[0] < 1e-12);
        let twenty: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 3.0)).collect();
        assert_eq!(distance_features(&line(), &q(&twenty)).unwrap().dim(), 20);
        assert!(matches!(
            Featurizer::new(FeatureKind::Vq, None, FeatureParams::default()),
            Err(Error::EmptyLandmarks)
        ));
    }

    #[test]
    fn localized_vectors() {
        let v = gaussian_features(&line(), &q(&[(0.0, 0.0), (0.0, 2.0)]), 2.0).unwrap();
        assert_eq!(v.values[0], 1.0);
        assert!((v.values[1] - (-1f64).exp()).abs() < 1e-15);
        assert!((v.values[1] - 0.367879).abs() < 1e-6);
        assert!(gaussian_features(&line(), &q(&[(0.0, 0.0)]), 0.0).is_err());
        assert!(gaussian_features(&line(), &q(&[(0.0, 0.0)]), -1.0).is_err());
    }

    #[test]
    fn signed_interior() {
        let seg = Trajectory::from_xy("s", &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        // <(0,1),(0,0.5)> * exp(-0.25) / 1
        let expected = 0.5 * (-0.25f64).exp();
        let v = signed_feature(&seg, Point::new(0.5, 0.5), 1.0);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.389400).abs() < 1e-6);
        assert!((signed_feature(&seg, Point::new(0.5, -0.5), 1.0) + expected).abs() < 1e-15);
        assert_eq!(signed_feature(&seg, Point::new(0.5, 0.0), 1.0), 0.0);
        assert!(signed_features(&seg, &q(&[(0.0, 1.0)]), 0.0).is_err());
    }

    #[test]
    fn signed_endpoint() {
        let seg = Trajectory::from_xy("s", &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        // nearest point is the end (1,0); r = (1, 2), d = sqrt 5, frame t=(1,0), n=(0,1)
        let (qx, qy, s) = (2.0, 2.0, 3.0);
        let d = 5f64.sqrt();
        let expected = (1.0 / s) * (2.0 / d) * 2.0 * (-(d * d) / (s * s)).exp();
        assert!((signed_feature(&seg, Point::new(qx, qy), s) - expected).abs() < 1e-15);
        // below the start: r = (-1, -3), linf = 3, sign negative
        let d = 10f64.sqrt();
        let expected = (1.0 / s) * (-3.0 / d) * 3.0 * (-(d * d) / (s * s)).exp();
        assert!((signed_feature(&seg, Point::new(-1.0, -3.0), s) - expected).abs() < 1e-15);
    }

    #[test]
    fn endpoint_coordinates() {
        let t = Trajectory::from_xy("e", &[(1.0, 2.0), (3.0, 4.0)]).unwrap();
        assert_eq!(endpoints_feature(&t).values, vec![1.0, 2.0, 3.0, 4.0]);
        let p = Trajectory::from_xy("p", &[(5.0, 6.0)]).unwrap();
        assert_eq!(endpoints_feature(&p).values, vec![5.0, 6.0, 5.0, 6.0]);
        let loop_ = Trajectory::from_xy("o", &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)]).unwrap();
        let v = endpoints_feature(&loop_).values;
        assert_eq!(v[..2], v[2..]);
    }

    fn timed(pts: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::new("t", pts.iter().map(|&(t, x, y)| Waypoint::timed(t, x, y)).collect()).unwrap()
    }

    #[test]
    fn physical() {
        let v = physical_features(&timed(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (2.0, 2.0, 0.0)])).unwrap();
        assert_eq!(v.values, vec![1.0, 1.0, 0.0, 0.0]);

        let uniform: Vec<(f64, f64, f64)> = (0..10).map(|i| (2.0 * i as f64, 3.0 * i as f64, 0.0)).collect();
        let v = physical_features(&timed(&uniform)).unwrap();
        assert_eq!(v.values[2], 0.0);
        assert_eq!(v.values[3], 0.0);
        assert!((v.values[1] - 1.5).abs() < 1e-15);

        let v = physical_features(&timed(&[(0.0, 0.0, 0.0), (2.0, 4.0, 0.0)])).unwrap();
        assert_eq!(v.values, vec![4.0, 2.0, 0.0, 0.0]);

        // hand computed: L = [1, 2, 3], dt = [1, 1, 2], v = [1, 2, 1.5],
        // a = [(2-1)/1, (1.5-2)/2] = [1, -0.25], j = [(-0.25-1)/2] = [-0.625]
        let v = physical_features(&timed(&[
            (0.0, 0.0, 0.0),
            (1.0, 1.0, 0.0),
            (2.0, 3.0, 0.0),
            (4.0, 6.0, 0.0),
        ]))
        .unwrap();
        assert_eq!(v.values, vec![2.0, 1.5, 0.375, -0.625]);

        let untimed = Trajectory::from_xy("u", &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(physical_features(&untimed), Err(Error::MissingTimestamps(_))));
    }

    #[test]
    fn physical_skips_zero_dt() {
        // second segment has dt = 0 and drops out of the velocity chain
        let v = physical_features(&timed(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 2.0, 0.0), (2.0, 3.0, 0.0)])).unwrap();
        assert_eq!(v.values, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn plus_layout() {
        let geo = FeatureVector { values: vec![0.5; 20], kind: FeatureKind::Vq };
        let phys = FeatureVector { values: vec![7.0, 8.0, 9.0, 10.0], kind: FeatureKind::Physical };
        let v = combine_plus(&geo, &phys).unwrap();
        assert_eq!(v.dim(), 24);
        assert_eq!(v.kind, FeatureKind::VqPlus);
        assert_eq!(v.values[20], 7.0);
        let zero = FeatureVector { values: vec![0.0; 4], kind: FeatureKind::Physical };
        assert_eq!(combine_plus(&geo, &zero).unwrap().values[..20], geo.values[..]);
        assert!(combine_plus(&phys, &geo).is_err());
        let exp = FeatureVector { values: vec![1.0], kind: FeatureKind::VqExp };
        assert!(matches!(combine_plus(&exp, &phys), Err(Error::IncompatibleFeatures(..))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn curve() -> impl Strategy<Value = Vec<(f64, f64)>> {
            prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..8)
        }

        proptest! {
            #[test]
            fn translation_equivariant(xy in curve(), lm in prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64), 1..6), ux in -50.0..50.0f64, uy in -50.0..50.0f64) {
                let t = Trajectory::from_xy("c", &xy).unwrap();
                let u = Point::new(ux, uy);
                let lms = q(&lm);
                let shifted = LandmarkSet::new(lms.points().iter().map(|&p| p + u).collect(), Provenance::User).unwrap();
                let a = distance_features(&t, &lms).unwrap();
                let b = distance_features(&t.translated(u), &shifted).unwrap();
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert!((x - y).abs() < 1e-9);
                    prop_assert!(*x >= 0.0);
                }
                let e = gaussian_features(&t, &lms, 1.3).unwrap();
                prop_assert!(e.values.iter().all(|&v| v > 0.0 && v <= 1.0));
            }

            #[test]
            fn signed_flips_under_reflection(x0 in -5.0..0.0f64, x1 in 0.1..5.0f64, c in -3.0..3.0f64, qx in -8.0..8.0f64, qy in 0.01..4.0f64, s in 0.5..5.0f64) {
                // a horizontal line y = c, landmarks mirrored across it
                let t = Trajectory::from_xy("h", &[(x0, c), (x1, c)]).unwrap();
                let above = signed_feature(&t, Point::new(qx, c + qy), s);
                let below = signed_feature(&t, Point::new(qx, c - qy), s);
                prop_assert!((above + below).abs() < 1e-9);
            }

            #[test]
            fn time_rescaling_halves_velocity(steps in prop::collection::vec((0.1..10.0f64, -3.0..3.0f64, -3.0..3.0f64), 2..10)) {
                let mut t = 0.0;
                let pts: Vec<Waypoint> = steps.iter().map(|&(dt, x, y)| { t += dt; Waypoint::timed(t, x, y) }).collect();
                let slow: Vec<Waypoint> = pts.iter().map(|p| Waypoint { t: p.t.map(|v| 2.0 * v), ..*p }).collect();
                let a = physical_features(&Trajectory::new("a", pts).unwrap()).unwrap();
                let b = physical_features(&Trajectory::new("b", slow).unwrap()).unwrap();
                prop_assert_eq!(a.values[0], b.values[0]);
                prop_assert!((b.values[1] - a.values[1] / 2.0).abs() < 1e-9);
            }
        }
    }
}
