//! Named distance measures, fitted on training data, and pairwise matrices.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::*;
use crate::featurize::{FeatureKind, FeatureParams, Featurizer};
use crate::landmarks::random_landmarks;
use crate::trajectory::Dataset;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_count() -> usize {
    20
}
fn origin() -> Point {
    Point::new(0.0, 0.0)
}

/// A trajectory distance and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Measure {
    /// `d_Q` on `vq` features over random landmarks.
    DQ {
        #[serde(default = "default_count")]
        n_landmarks: usize,
    },
    /// `d_Q^pi` over random landmarks.
    DQPi {
        #[serde(default = "default_count")]
        n_landmarks: usize,
    },
    Hausdorff,
    DiscreteFrechet,
    Dtw,
    Lcss {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Edr {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Erp {
        #[serde(default = "origin")]
        gap: Point,
    },
    Sspd,
    Lsh {
        #[serde(default = "default_count")]
        circles: usize,
    },
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::DQ { .. } => "d_q",
            Measure::DQPi { .. } => "d_q_pi",
            Measure::Hausdorff => "hausdorff",
            Measure::DiscreteFrechet => "discrete_frechet",
            Measure::Dtw => "dtw",
            Measure::Lcss { .. } => "lcss",
            Measure::Edr { .. } => "edr",
            Measure::Erp { .. } => "erp",
            Measure::Sspd => "sspd",
            Measure::Lsh { .. } => "lsh",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Measure::DQ { n_landmarks } | Measure::DQPi { n_landmarks } if n_landmarks == 0 => {
                Err(Error::invalid("n_landmarks", "must be at least 1"))
            }
            Measure::Lcss { epsilon } | Measure::Edr { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(Error::invalid("epsilon", "must be positive"))
            }
            Measure::Erp { gap } if !gap.is_finite() => Err(Error::invalid("gap", "must be finite")),
            Measure::Lsh { circles: 0 } => Err(Error::invalid("circles", "must be at least 1")),
            _ => Ok(()),
        }
    }

    /// Draw any landmarks or circles the measure needs from `train`.
    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<FittedMeasure> {
        self.validate()?;
        Ok(match *self {
            Measure::DQ { n_landmarks } => FittedMeasure::DQ(Featurizer::new(
                FeatureKind::Vq,
                Some(random_landmarks(train, n_landmarks, seed)?),
                FeatureParams::default(),
            )?),
            Measure::DQPi { n_landmarks } => FittedMeasure::DQPi(random_landmarks(train, n_landmarks, seed)?),
            Measure::Hausdorff => FittedMeasure::Hausdorff,
            Measure::DiscreteFrechet => FittedMeasure::DiscreteFrechet,
            Measure::Dtw => FittedMeasure::Dtw,
            Measure::Lcss { epsilon } => FittedMeasure::Lcss(epsilon),
            Measure::Edr { epsilon } => FittedMeasure::Edr(epsilon),
            Measure::Erp { gap } => FittedMeasure::Erp(gap),
            Measure::Sspd => FittedMeasure::Sspd,
            Measure::Lsh { circles } => FittedMeasure::Lsh(random_circles(train, circles, seed)?),
        })
    }
}

/// A measure ready to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedMeasure {
    DQ(Featurizer),
    DQPi(LandmarkSet),
    Hausdorff,
    DiscreteFrechet,
    Dtw,
    Lcss(f64),
    Edr(f64),
    Erp(Point),
    Sspd,
    Lsh(Vec<Circle>),
}

/// Per-trajectory precomputation shared by all pairs.
enum Prepared {
    Vector(Vec<f64>),
    Nearest(Vec<Point>),
    Sketch(Sketch),
    Raw,
}

impl FittedMeasure {
    fn prepare(&self, t: &Trajectory) -> Result<Prepared> {
        Ok(match self {
            FittedMeasure::DQ(f) => Prepared::Vector(f.apply(t)?.values),
            FittedMeasure::DQPi(q) => Prepared::Nearest(nearest_points(t, q)),
            FittedMeasure::Lsh(c) => Prepared::Sketch(lsh_sketch(t, c)?),
            _ => Prepared::Raw,
        })
    }

    fn between(&self, a: &Trajectory, pa: &Prepared, b: &Trajectory, pb: &Prepared) -> Result<f64> {
        Ok(match (self, pa, pb) {
            (FittedMeasure::DQ(_), Prepared::Vector(u), Prepared::Vector(v)) => d_q_values(u, v)?,
            (FittedMeasure::DQPi(_), Prepared::Nearest(u), Prepared::Nearest(v)) => {
                u.iter().zip(v).map(|(p, q)| p.dist(*q)).sum::<f64>() / u.len() as f64
            }
            (FittedMeasure::Lsh(_), Prepared::Sketch(u), Prepared::Sketch(v)) => lsh_distance(u, v)?,
            (FittedMeasure::Hausdorff, ..) => hausdorff(a, b),
            (FittedMeasure::DiscreteFrechet, ..) => discrete_frechet(a, b),
            (FittedMeasure::Dtw, ..) => dtw(a, b),
            (FittedMeasure::Lcss(e), ..) => lcss_dist(a, b, *e),
            (FittedMeasure::Edr(e), ..) => edr_dist(a, b, *e),
            (FittedMeasure::Erp(g), ..) => erp_dist(a, b, *g),
            (FittedMeasure::Sspd, ..) => sspd(a, b),
            _ => unreachable!("prepared data matches its measure"),
        })
    }

    pub fn distance(&self, a: &Trajectory, b: &Trajectory) -> Result<f64> {
        self.between(a, &self.prepare(a)?, b, &self.prepare(b)?)
    }
}

/// `rows[i]` against `cols[j]`, computed in parallel over rows.
pub fn distance_matrix(measure: &FittedMeasure, rows: &[&Trajectory], cols: &[&Trajectory]) -> Result<Vec<Vec<f64>>> {
    let pr: Vec<Prepared> = rows.par_iter().map(|t| measure.prepare(t)).collect::<Result<_>>()?;
    let pc: Vec<Prepared> = cols.par_iter().map(|t| measure.prepare(t)).collect::<Result<_>>()?;
    rows.par_iter()
        .zip(&pr)
        .map(|(a, pa)| {
            cols.iter()
                .zip(&pc)
                .map(|(b, pb)| measure.between(a, pa, b, pb))
                .collect()
        })
        .collect()
}

/// Square CSV with trajectory ids as the header row and first column.
pub fn write_matrix_csv<W: Write>(ds: &Dataset, matrix: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::io("<distance csv>", std::io::Error::other(e));
    let ids: Vec<&str> = ds.trajectories().map(Trajectory::id).collect();
    let mut header = vec!["traj_id"];
    header.extend(&ids);
    w.write_record(&header).map_err(io)?;
    for (id, row) in ids.iter().zip(matrix) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<distance csv>", e))?;
    Ok(())
}
