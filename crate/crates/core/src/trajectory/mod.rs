//! Trajectory data model, preprocessing and dataset loaders.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub mod io;
pub mod preprocess;

pub use io::{convert, load_dataset, load_dataset_with, save_canonical_csv, write_canonical_csv, Format, LoadOptions};
pub use preprocess::{
    augment_noise, augment_noise_with, filter_length, partition_by_duration, partition_by_gap,
    remove_stationary, NoiseParams,
};

/// Class identifier.
pub type Label = u32;

/// A planar observation, optionally timestamped (seconds since the Unix epoch).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: Option<f64>,
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64) -> Self {
        Waypoint { t: None, x, y }
    }

    pub fn timed(t: f64, x: f64, y: f64) -> Self {
        Waypoint { t: Some(t), x, y }
    }

    #[inline]
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// An ordered, non-empty waypoint sequence read as a polygonal curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    id: String,
    points: Vec<Waypoint>,
}

impl Trajectory {
    /// Validates that the sequence is non-empty, every coordinate is finite and
    /// timestamps (where present) never decrease.
    pub fn new(id: impl Into<String>, points: Vec<Waypoint>) -> Result<Self> {
        let id = id.into();
        if points.is_empty() {
            return Err(Error::invalid("points", format!("trajectory {id} is empty")));
        }
        let mut last_t: Option<f64> = None;
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::invalid(
                    "points",
                    format!("trajectory {id}: waypoint {i} has a non-finite coordinate"),
                ));
            }
            if let Some(t) = p.t {
                if !t.is_finite() {
                    return Err(Error::invalid(
                        "points",
                        format!("trajectory {id}: waypoint {i} has a non-finite timestamp"),
                    ));
                }
                if last_t.is_some_and(|prev| t < prev) {
                    return Err(Error::invalid(
                        "points",
                        format!("trajectory {id}: timestamps decrease at waypoint {i}"),
                    ));
                }
                last_t = Some(t);
            }
        }
        Ok(Trajectory { id, points })
    }

    /// Untimed trajectory from coordinate pairs.
    pub fn from_xy(id: impl Into<String>, xy: &[(f64, f64)]) -> Result<Self> {
        Self::new(id, xy.iter().map(|&(x, y)| Waypoint::new(x, y)).collect())
    }

    pub(crate) fn from_parts_unchecked(id: String, points: Vec<Waypoint>) -> Self {
        debug_assert!(!points.is_empty());
        Trajectory { id, points }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[Waypoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point {
        self.points[0].pos()
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1].pos()
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = Point> + '_ {
        self.points.iter().map(Waypoint::pos)
    }

    pub fn is_timed(&self) -> bool {
        self.points.iter().all(|p| p.t.is_some())
    }

    /// Timestamps, or an error naming the trajectory if any are missing.
    pub fn times(&self) -> Result<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.t)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::MissingTimestamps(self.id.clone()))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// The same curve shifted by `offset`.
    pub fn translated(&self, offset: Point) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| Waypoint {
                t: p.t,
                x: p.x + offset.x,
                y: p.y + offset.y,
            })
            .collect();
        Trajectory {
            id: self.id.clone(),
            points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTrajectory {
    pub trajectory: Trajectory,
    pub label: Label,
}

impl LabeledTrajectory {
    pub fn new(trajectory: Trajectory, label: Label) -> Self {
        LabeledTrajectory { trajectory, label }
    }
}

/// A named collection of labeled trajectories with a declared label set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    labels: BTreeSet<Label>,
    items: Vec<LabeledTrajectory>,
}

impl Dataset {
    /// Builds a dataset whose label set is the set of labels that occur.
    pub fn new(name: impl Into<String>, items: Vec<LabeledTrajectory>) -> Result<Self> {
        let labels = items.iter().map(|it| it.label).collect();
        Self::with_labels(name, labels, items)
    }

    pub fn with_labels(
        name: impl Into<String>,
        labels: BTreeSet<Label>,
        items: Vec<LabeledTrajectory>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(items.len());
        for it in &items {
            if !labels.contains(&it.label) {
                return Err(Error::invalid(
                    "label",
                    format!(
                        "trajectory {} has undeclared label {}",
                        it.trajectory.id(),
                        it.label
                    ),
                ));
            }
            if !seen.insert(it.trajectory.id()) {
                return Err(Error::invalid(
                    "id",
                    format!("duplicate trajectory id {}", it.trajectory.id()),
                ));
            }
        }
        Ok(Dataset {
            name: name.into(),
            labels,
            items,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &BTreeSet<Label> {
        &self.labels
    }

    pub fn items(&self) -> &[LabeledTrajectory] {
        &self.items
    }

    pub fn into_items(self) -> Vec<LabeledTrajectory> {
        self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn trajectories(&self) -> impl ExactSizeIterator<Item = &Trajectory> + '_ {
        self.items.iter().map(|it| &it.trajectory)
    }

    pub fn label_vec(&self) -> Vec<Label> {
        self.items.iter().map(|it| it.label).collect()
    }

    /// Trajectories of one class, in dataset order.
    pub fn class(&self, label: Label) -> Vec<&Trajectory> {
        self.items
            .iter()
            .filter(|it| it.label == label)
            .map(|it| &it.trajectory)
            .collect()
    }

    /// Number of trajectories per declared label.
    pub fn class_counts(&self) -> Vec<(Label, usize)> {
        self.labels
            .iter()
            .map(|&l| (l, self.items.iter().filter(|it| it.label == l).count()))
            .collect()
    }

    /// Items at `indices`, in the given order. The label set is kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            labels: self.labels.clone(),
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    /// Items for which `keep` holds. The label set is kept.
    pub fn retain(&self, mut keep: impl FnMut(&LabeledTrajectory) -> bool) -> Dataset {
        Dataset {
            name: self.name.clone(),
            labels: self.labels.clone(),
            items: self.items.iter().filter(|it| keep(it)).cloned().collect(),
        }
    }

    /// Replace every trajectory, keeping labels. Ids must stay unique.
    pub fn map_trajectories(&self, f: impl Fn(&Trajectory) -> Trajectory) -> Result<Dataset> {
        let items = self
            .items
            .iter()
            .map(|it| LabeledTrajectory::new(f(&it.trajectory), it.label))
            .collect();
        Dataset::with_labels(self.name.clone(), self.labels.clone(), items)
    }

    /// Replace every trajectory by zero or more pieces, keeping labels.
    pub fn flat_map_trajectories(
        &self,
        f: impl Fn(&Trajectory) -> Result<Vec<Trajectory>>,
    ) -> Result<Dataset> {
        let mut items = Vec::with_capacity(self.items.len());
        for it in &self.items {
            for t in f(&it.trajectory)? {
                items.push(LabeledTrajectory::new(t, it.label));
            }
        }
        Dataset::with_labels(self.name.clone(), self.labels.clone(), items)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
