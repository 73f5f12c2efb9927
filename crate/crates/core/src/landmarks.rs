//! Landmark sets: the random baseline, the `eta` scale rule and mistake-driven
//! selection with best-of-k restarts.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{misclassification_rate, ClassifierSpec, FeatureMatrix};
use crate::error::{Error, Result};
use crate::featurize::{gaussian, landmark_distance, FeatureKind};
use crate::geometry::Point;
use crate::rng::{self, Rng, STREAM_FIT, STREAM_RESTART};
use crate::trajectory::{Dataset, Label, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Random,
    MistakeDriven,
    User,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Random => "random",
            Provenance::MistakeDriven => "mistake_driven",
            Provenance::User => "user",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Provenance::Random),
            "mistake_driven" => Ok(Provenance::MistakeDriven),
            "user" => Ok(Provenance::User),
            _ => Err(Error::invalid("provenance", format!("unknown value `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    points: Vec<Point>,
    provenance: Provenance,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyLandmarks);
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::invalid("landmarks", "coordinates must be finite"));
        }
        Ok(LandmarkSet { points, provenance })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `# provenance: <p>` followed by a `qx,qy` table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<landmarks>", e);
        writeln!(out, "# provenance: {}", self.provenance).map_err(io)?;
        writeln!(out, "qx,qy").map_err(io)?;
        for p in &self.points {
            writeln!(out, "{},{}", p.x, p.y).map_err(io)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parse the CSV form; a missing provenance line means [`Provenance::User`].
    pub fn read_csv<R: Read>(mut input: R, path: &Path) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text).map_err(|e| Error::io(path, e))?;
        let mut provenance = Provenance::User;
        let mut body = text.as_str();
        let mut offset = 0;
        if let Some(rest) = body.strip_prefix('#') {
            let (first, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            if let Some(p) = first.trim().strip_prefix("provenance:") {
                provenance = p.trim().parse()?;
            }
            body = tail;
            offset = 1;
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line: line + offset,
            message,
        };
        let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["qx", "qy"] {
            return Err(parse_err(1, "expected header `qx,qy`".to_owned()));
        }
        let mut points = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            let num = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| parse_err(line, format!("bad coordinate in column {}", j + 1)))
            };
            points.push(Point::new(num(0)?, num(1)?));
        }
        LandmarkSet::new(points, provenance)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, path)
    }
}

/// Pooled per-axis mean and population standard deviation of all waypoints.
pub(crate) fn waypoint_stats<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> Option<(Point, Point)> {
    let mut n = 0usize;
    let mut sum = Point::new(0.0, 0.0);
    let pts: Vec<Point> = trajs.into_iter().flat_map(Trajectory::positions).collect();
    for &p in &pts {
        sum = sum + p;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let mean = sum * (1.0 / n as f64);
    let mut var = Point::new(0.0, 0.0);
    for &p in &pts {
        let d = p - mean;
        var = var + Point::new(d.x * d.x, d.y * d.y);
    }
    let var = var * (1.0 / n as f64);
    Some((mean, Point::new(var.x.sqrt(), var.y.sqrt())))
}

fn spread_fallback<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> f64 {
    match waypoint_stats(trajs) {
        Some((_, s)) if s.x + s.y > 0.0 => (s.x + s.y) / 2.0,
        _ => 1.0,
    }
}

/// Distance between the pooled waypoint means of two classes.
///
/// Coincident means fall back to the mean per-axis standard deviation of all
/// waypoints, and to 1 when every waypoint is the same point.
pub fn compute_eta(class1: &[&Trajectory], class2: &[&Trajectory]) -> Result<f64> {
    let (m1, _) = waypoint_stats(class1.iter().copied()).ok_or(Error::invalid("eta", "first class is empty"))?;
    let (m2, _) = waypoint_stats(class2.iter().copied()).ok_or(Error::invalid("eta", "second class is empty"))?;
    let eta = m1.dist(m2);
    if eta > 0.0 {
        Ok(eta)
    } else {
        Ok(spread_fallback(class1.iter().chain(class2).copied()))
    }
}

/// The `eta` rule applied to a labeled dataset.
///
/// Two classes use [`compute_eta`]; more classes use the mean pairwise distance
/// between class means; a single class uses the spread fallback.
pub fn eta_for_dataset(ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::invalid("eta", "dataset is empty"));
    }
    let labels: Vec<Label> = ds.labels().iter().copied().collect();
    let classes: Vec<Vec<&Trajectory>> = labels.iter().map(|&l| ds.class(l)).collect();
    match classes.len() {
        1 => Ok(spread_fallback(ds.trajectories())),
        2 => compute_eta(&classes[0], &classes[1]),
        k => {
            let means: Vec<Point> = classes
                .iter()
                .map(|c| waypoint_stats(c.iter().copied()).map(|s| s.0))
                .collect::<Option<_>>()
                .ok_or(Error::invalid("eta", "empty class"))?;
            let mut total = 0.0;
            for i in 0..k {
                for j in i + 1..k {
                    total += means[i].dist(means[j]);
                }
            }
            let eta = total / (k * (k - 1) / 2) as f64;
            Ok(if eta > 0.0 { eta } else { spread_fallback(ds.trajectories()) })
        }
    }
}

fn gaussian_offset(rng: &mut Rng, scale: f64) -> Point {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Point::new(x * scale, y * scale)
}

/// `n` draws from a per-axis normal centred on the waypoint mean with four
/// times the waypoint standard deviation.
pub fn random_landmarks(ds: &Dataset, n: usize, seed: u64) -> Result<LandmarkSet> {
    if n == 0 {
        return Err(Error::invalid("n_landmarks", "must be at least 1"));
    }
    let (mean, std) = waypoint_stats(ds.trajectories()).ok_or(Error::invalid("landmarks", "dataset is empty"))?;
    let mut rng = rng::rng(seed);
    let points = (0..n)
        .map(|_| {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            Point::new(mean.x + 4.0 * std.x * zx, mean.y + 4.0 * std.y * zy)
        })
        .collect();
    LandmarkSet::new(points, Provenance::Random)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MistakeDrivenParams {
    pub n: usize,
    pub eta: f64,
    /// Inner classifier; must expose decision scores.
    pub classifier: ClassifierSpec,
    /// Multiplier on the landmark perturbation; 0 places landmarks exactly on waypoints.
    pub jitter: f64,
}

impl MistakeDrivenParams {
    pub fn new(n: usize, eta: f64) -> Self {
        MistakeDrivenParams {
            n,
            eta,
            classifier: ClassifierSpec::logistic(),
            jitter: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n_landmarks", "must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", "must be positive and finite"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter", "must be nonnegative"));
        }
        if !self.classifier.has_scores() {
            return Err(Error::ScoresUnavailable(self.classifier.short_name()));
        }
        self.classifier.validate()
    }
}

fn check_binary(ds: &Dataset) -> Result<[Label; 2]> {
    let labels: Vec<Label> = ds.labels().iter().copied().collect();
    if labels.len() != 2 {
        return Err(Error::NotBinary(labels.len()));
    }
    for &l in &labels {
        if ds.class(l).is_empty() {
            return Err(Error::EmptyClass(l));
        }
    }
    Ok([labels[0], labels[1]])
}

/// Feature columns of `v_Q^exp`, grown one landmark at a time.
struct Columns<'a> {
    trajs: Vec<&'a Trajectory>,
    labels: Vec<Label>,
    eta: f64,
    rows: Vec<Vec<f64>>,
}

impl<'a> Columns<'a> {
    fn new(ds: &'a Dataset, eta: f64) -> Self {
        Columns {
            trajs: ds.trajectories().collect(),
            labels: ds.label_vec(),
            eta,
            rows: vec![Vec::new(); ds.len()],
        }
    }

    fn push(&mut self, q: Point) {
        let eta = self.eta;
        let col: Vec<f64> = self
            .trajs
            .par_iter()
            .map(|t| gaussian(landmark_distance(t, q), eta))
            .collect();
        for (row, v) in self.rows.iter_mut().zip(col) {
            row.push(v);
        }
    }

    fn matrix(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::new(FeatureKind::VqExp, self.rows.clone(), self.labels.clone())
    }
}

fn random_waypoint(rng: &mut Rng, traj: &Trajectory) -> Point {
    traj.points()[rng.random_range(0..traj.len())].pos()
}

/// Index of the training example to place the next landmark near: the
/// misclassified example farthest on the wrong side, or when none is
/// misclassified, the correct example with the smallest margin.
fn worst_example(model: &dyn crate::classify::Model, data: &FeatureMatrix, hi: Label) -> Result<usize> {
    let mut worst_wrong: Option<(usize, f64)> = None;
    let mut weakest: Option<(usize, f64)> = None;
    for (i, (x, &y)) in data.rows().iter().zip(data.labels()).enumerate() {
        let s = model.score(x).ok_or_else(|| Error::ScoresUnavailable("inner classifier".to_owned()))?;
        let margin = if y == hi { s } else { -s };
        if model.predict(x) != y {
            let depth = s.abs();
            if worst_wrong.is_none_or(|(_, d)| depth > d) {
                worst_wrong = Some((i, depth));
            }
        } else if weakest.is_none_or(|(_, m)| margin < m) {
            weakest = Some((i, margin));
        }
    }
    Ok(worst_wrong.or(weakest).expect("nonempty training set").0)
}

/// Mistake-driven landmark selection on a two-class dataset.
pub fn mistake_driven(ds: &Dataset, params: &MistakeDrivenParams, seed: u64) -> Result<LandmarkSet> {
    params.validate()?;
    let [_, hi] = check_binary(ds)?;
    let mut rng = rng::rng(seed);
    let noise = params.eta * params.jitter;

    let trajs: Vec<&Trajectory> = ds.trajectories().collect();
    let start = trajs[rng.random_range(0..trajs.len())];
    let q0 = random_waypoint(&mut rng, start) + gaussian_offset(&mut rng, noise);

    let mut points = vec![q0];
    let mut cols = Columns::new(ds, params.eta);
    cols.push(q0);
    for i in 1..params.n {
        let data = cols.matrix()?;
        let fit_seed = rng::derive_path(seed, &[STREAM_FIT, i as u64]);
        let model = params.classifier.fit(&data, fit_seed)?;
        let worst = worst_example(model.as_ref(), &data, hi)?;
        let q = random_waypoint(&mut rng, trajs[worst]) + gaussian_offset(&mut rng, noise);
        points.push(q);
        cols.push(q);
    }
    LandmarkSet::new(points, Provenance::MistakeDriven)
}

/// Seed used by restart `run` of [`best_of_k`].
pub fn restart_seed(seed: u64, run: usize) -> u64 {
    rng::derive_path(seed, &[STREAM_RESTART, run as u64])
}

/// Training error of `params.classifier` refit on `v_Q^exp` under `landmarks`.
pub fn training_error(ds: &Dataset, landmarks: &LandmarkSet, params: &MistakeDrivenParams, seed: u64) -> Result<f64> {
    let mut cols = Columns::new(ds, params.eta);
    for &q in landmarks.points() {
        cols.push(q);
    }
    let data = cols.matrix()?;
    let model = params
        .classifier
        .fit(&data, rng::derive_path(seed, &[STREAM_FIT, landmarks.len() as u64]))?;
    Ok(misclassification_rate(model.as_ref(), &data))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub landmarks: LandmarkSet,
    pub training_error: f64,
    pub run: usize,
    /// Training error of every run, in run order.
    pub run_errors: Vec<f64>,
}

/// Run [`mistake_driven`] `k` times and keep the set with the lowest training
/// error; ties go to the earliest run.
pub fn best_of_k(ds: &Dataset, params: &MistakeDrivenParams, k: usize, seed: u64) -> Result<Selection> {
    if k == 0 {
        return Err(Error::invalid("best_of", "must be at least 1"));
    }
    let runs = (0..k)
        .into_par_iter()
        .map(|r| {
            let s = restart_seed(seed, r);
            let q = mistake_driven(ds, params, s)?;
            let err = training_error(ds, &q, params, s)?;
            Ok((q, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let run_errors: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let mut best = 0;
    for (r, &e) in run_errors.iter().enumerate() {
        if e < run_errors[best] {
            best = r;
        }
    }
    let (landmarks, training_error) = runs.into_iter().nth(best).expect("k >= 1");
    Ok(Selection {
        landmarks,
        training_error,
        run: best,
        run_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::LabeledTrajectory;

    fn traj(id: &str, pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::from_xy(id, pts).unwrap()
    }

    fn ds(items: Vec<(Trajectory, Label)>) -> Dataset {
        Dataset::new("t", items.into_iter().map(|(t, l)| LabeledTrajectory::new(t, l)).collect()).unwrap()
    }

    /// Horizontal segments around y = 0 (label 0) and y = 10 (label 1).
    fn bundles(per_class: usize) -> Dataset {
        let mut items = Vec::new();
        for i in 0..per_class {
            let o = i as f64 * 0.1;
            items.push((traj(&format!("a{i}"), &[(0.0, o), (5.0, o), (10.0, o)]), 0));
            items.push((traj(&format!("b{i}"), &[(0.0, 10.0 + o), (5.0, 10.0 + o), (10.0, 10.0 + o)]), 1));
        }
        ds(items)
    }

    #[test]
    fn eta_examples() {
        let a = traj("a", &[(0.0, 0.0)]);
        let b = traj("b", &[(3.0, 4.0)]);
        assert_eq!(compute_eta(&[&a], &[&b]).unwrap(), 5.0);
        let c = traj("c", &[(1.0, 0.0)]);
        let d = traj("d", &[(1.0, 1.0)]);
        assert_eq!(compute_eta(&[&c], &[&d]).unwrap(), 1.0);
        let e = traj("e", &[(0.0, 0.0), (2.0, 0.0)]);
        let eta = compute_eta(&[&e], &[&e]).unwrap();
        assert!(eta > 0.0);
        assert_eq!(eta, 0.5);
        assert!(compute_eta(&[], &[&e]).is_err());
    }

    #[test]
    fn random_landmarks_zero_variance() {
        let d = ds(vec![(traj("a", &[(2.0, 3.0), (2.0, 3.0)]), 0), (traj("b", &[(2.0, 3.0)]), 1)]);
        let q = random_landmarks(&d, 7, 1).unwrap();
        assert_eq!(q.len(), 7);
        assert!(q.points().iter().all(|&p| p == Point::new(2.0, 3.0)));
        assert_eq!(q, random_landmarks(&d, 7, 1).unwrap());
    }

    #[test]
    fn random_landmark_sample_mean() {
        let d = bundles(5);
        let (mean, std) = waypoint_stats(d.trajectories()).unwrap();
        let n = 100_000;
        let q = random_landmarks(&d, n, 42).unwrap();
        let sum = q.points().iter().fold(Point::new(0.0, 0.0), |a, &p| a + p);
        let m = sum * (1.0 / n as f64);
        let se = |s: f64| 4.0 * s / (n as f64).sqrt();
        assert!((m.x - mean.x).abs() <= 5.0 * se(std.x));
        assert!((m.y - mean.y).abs() <= 5.0 * se(std.y));
    }

    #[test]
    fn csv_round_trip() {
        let q = LandmarkSet::new(vec![Point::new(1.5, -2.0), Point::new(0.1, 1e-17)], Provenance::MistakeDriven).unwrap();
        let mut buf = Vec::new();
        q.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# provenance: mistake_driven\nqx,qy\n"));
        let back = LandmarkSet::read_csv(buf.as_slice(), Path::new("q.csv")).unwrap();
        assert_eq!(back, q);
        let plain = LandmarkSet::read_csv("qx,qy\n1,2\n".as_bytes(), Path::new("q.csv")).unwrap();
        assert_eq!(plain.provenance(), Provenance::User);
        let err = LandmarkSet::read_csv("qx,qy\n1,2\n3,x\n".as_bytes(), Path::new("q.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn single_landmark_skips_the_loop() {
        let d = bundles(3);
        let mut p = MistakeDrivenParams::new(1, 1.0);
        p.jitter = 0.0;
        let q = mistake_driven(&d, &p, 5).unwrap();
        assert_eq!(q.len(), 1);
        assert!(d.trajectories().flat_map(Trajectory::positions).any(|w| w == q.points()[0]));
    }

    #[test]
    fn separable_bundles_reach_zero_training_error() {
        let d = bundles(6);
        let [lo, hi] = check_binary(&d).unwrap();
        let eta = compute_eta(&d.class(lo), &d.class(hi)).unwrap();
        let p = MistakeDrivenParams::new(5, eta);
        let q = mistake_driven(&d, &p, 11).unwrap();
        assert_eq!(q.len(), 5);
        assert_eq!(q.provenance(), Provenance::MistakeDriven);

        // brute-force separator on the final features: some landmark column
        // with a threshold splits the classes perfectly
        let mut cols = Columns::new(&d, eta);
        for &pt in q.points() {
            cols.push(pt);
        }
        let m = cols.matrix().unwrap();
        let separable = (0..q.len()).any(|j| {
            let (mut a, mut b): (Vec<f64>, Vec<f64>) = (vec![], vec![]);
            for (r, &l) in m.rows().iter().zip(m.labels()) {
                if l == lo { a.push(r[j]) } else { b.push(r[j]) }
            }
            let (amin, amax) = a.iter().fold((f64::MAX, f64::MIN), |(x, y), &v| (x.min(v), y.max(v)));
            let (bmin, bmax) = b.iter().fold((f64::MAX, f64::MIN), |(x, y), &v| (x.min(v), y.max(v)));
            amax < bmin || bmax < amin
        });
        assert!(separable);
        assert_eq!(training_error(&d, &q, &p, 0).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_and_best_of_one() {
        let d = bundles(4);
        let p = MistakeDrivenParams::new(4, 3.0);
        assert_eq!(mistake_driven(&d, &p, 9).unwrap(), mistake_driven(&d, &p, 9).unwrap());
        let sel = best_of_k(&d, &p, 1, 9).unwrap();
        assert_eq!(sel.landmarks, mistake_driven(&d, &p, restart_seed(9, 0)).unwrap());
        assert_eq!(sel.run, 0);
    }

    #[test]
    fn best_of_k_picks_minimum_with_earliest_tie() {
        let d = bundles(4);
        let p = MistakeDrivenParams::new(3, 3.0);
        let sel = best_of_k(&d, &p, 3, 1).unwrap();
        let min = sel.run_errors.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(sel.training_error, min);
        assert_eq!(sel.run, sel.run_errors.iter().position(|&e| e == min).unwrap());
        assert!(sel.training_error <= sel.run_errors[0]);
    }

    #[test]
    fn rejects_scoreless_and_multiclass() {
        let d = bundles(2);
        let mut p = MistakeDrivenParams::new(2, 1.0);
        p.classifier = ClassifierSpec::knn();
        assert!(matches!(mistake_driven(&d, &p, 0), Err(Error::ScoresUnavailable(_))));
        let three = ds(vec![
            (traj("a", &[(0.0, 0.0)]), 0),
            (traj("b", &[(1.0, 0.0)]), 1),
            (traj("c", &[(2.0, 0.0)]), 2),
        ]);
        assert!(matches!(
            mistake_driven(&three, &MistakeDrivenParams::new(2, 1.0), 0),
            Err(Error::NotBinary(3))
        ));
    }
}
