//! Cleaning, partitioning and augmentation of trajectories.

use std::collections::{BTreeMap, BTreeSet};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Label, LabeledTrajectory, Trajectory, Waypoint};
use crate::error::{Error, Result};
use crate::rng;

/// Drop every waypoint that repeats the previously retained position exactly.
pub fn remove_stationary(traj: &Trajectory) -> Trajectory {
    let mut kept: Vec<Waypoint> = Vec::with_capacity(traj.len());
    for &p in traj.points() {
        match kept.last() {
            Some(prev) if prev.x == p.x && prev.y == p.y => {}
            _ => kept.push(p),
        }
    }
    Trajectory::from_parts_unchecked(traj.id().to_owned(), kept)
}

/// Keep trajectories with `min_points <= len` and, if given, `len <= max_points`.
pub fn filter_length(ds: &Dataset, min_points: usize, max_points: Option<usize>) -> Dataset {
    ds.retain(|it| {
        let n = it.trajectory.len();
        n >= min_points && max_points.is_none_or(|m| n <= m)
    })
}

fn part_id(id: &str, k: usize) -> String {
    format!("{id}#{k}")
}

fn split_at(traj: &Trajectory, cuts: &[usize]) -> Vec<Trajectory> {
    if cuts.is_empty() {
        return vec![traj.clone()];
    }
    let pts = traj.points();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for (k, &end) in cuts.iter().chain(std::iter::once(&pts.len())).enumerate() {
        out.push(Trajectory::from_parts_unchecked(
            part_id(traj.id(), k),
            pts[start..end].to_vec(),
        ));
        start = end;
    }
    out
}

/// Split wherever consecutive timestamps differ by strictly more than `threshold` seconds.
pub fn partition_by_gap(traj: &Trajectory, threshold: f64) -> Result<Vec<Trajectory>> {
    let t = traj.times()?;
    let cuts: Vec<usize> = (1..t.len()).filter(|&i| t[i] - t[i - 1] > threshold).collect();
    Ok(split_at(traj, &cuts))
}

/// Greedy left-to-right split so that no part lasts longer than `max_duration` seconds.
pub fn partition_by_duration(traj: &Trajectory, max_duration: f64) -> Result<Vec<Trajectory>> {
    let t = traj.times()?;
    let mut cuts = Vec::new();
    let mut start_t = t[0];
    for (i, &ti) in t.iter().enumerate().skip(1) {
        if ti - start_t > max_duration {
            cuts.push(i);
            start_t = ti;
        }
    }
    Ok(split_at(traj, &cuts))
}

/// Parameters of the drifting-offset noise model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Offset applied to the first waypoint, on both axes.
    pub initial_offset: f64,
    /// Per-axis standard deviation of the offset's random-walk step.
    pub step_std: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            initial_offset: 0.001,
            step_std: 0.0001,
        }
    }
}

/// Perturb a trajectory by a random-walk offset starting at (0.001, 0.001).
pub fn augment_noise(traj: &Trajectory, seed: u64) -> Trajectory {
    augment_noise_with(traj, NoiseParams::default(), seed)
}

pub fn augment_noise_with(traj: &Trajectory, params: NoiseParams, seed: u64) -> Trajectory {
    let mut rng = rng::rng(seed);
    let step = Normal::new(0.0, params.step_std).expect("step_std must be finite and >= 0");
    let (mut vx, mut vy) = (params.initial_offset, params.initial_offset);
    let points = traj
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i > 0 {
                vx += step.sample(&mut rng);
                vy += step.sample(&mut rng);
            }
            Waypoint {
                t: p.t,
                x: p.x + vx,
                y: p.y + vy,
            }
        })
        .collect();
    Trajectory::from_parts_unchecked(traj.id().to_owned(), points)
}

/// Raw label to merged label; `None` drops the class.
pub type LabelMerge = BTreeMap<Label, Option<Label>>;

/// Relabel through `merge`. The map must cover every raw label of the dataset.
pub fn merge_labels(ds: &Dataset, merge: &LabelMerge) -> Result<Dataset> {
    if let Some(missing) = ds.labels().iter().find(|l| !merge.contains_key(l)) {
        return Err(Error::spec(
            "label_merge",
            format!("raw label {missing} is not covered by the merge map"),
        ));
    }
    let labels: BTreeSet<Label> = ds
        .labels()
        .iter()
        .filter_map(|l| merge[l])
        .collect();
    let items = ds
        .items()
        .iter()
        .filter_map(|it| merge[&it.label].map(|l| LabeledTrajectory::new(it.trajectory.clone(), l)))
        .collect();
    Dataset::with_labels(ds.name(), labels, items)
}

/// Drop trajectories whose id is listed.
pub fn exclude_ids(ds: &Dataset, ids: &[String]) -> Dataset {
    let ids: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    ds.retain(|it| !ids.contains(it.trajectory.id()))
}

/// Append `copies[label]` noisy copies of every trajectory of that class.
pub fn augment_dataset(ds: &Dataset, copies: &BTreeMap<Label, usize>, seed: u64) -> Result<Dataset> {
    let mut items: Vec<LabeledTrajectory> = ds.items().to_vec();
    for (i, it) in ds.items().iter().enumerate() {
        let n = copies.get(&it.label).copied().unwrap_or(0);
        for c in 0..n {
            let s = rng::derive_path(seed, &[rng::STREAM_AUGMENT, i as u64, c as u64]);
            let noisy = augment_noise(&it.trajectory, s)
                .with_id(format!("{}~noise{}", it.trajectory.id(), c));
            items.push(LabeledTrajectory::new(noisy, it.label));
        }
    }
    Dataset::with_labels(ds.name(), ds.labels().clone(), items)
}
