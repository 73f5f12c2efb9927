//! Repeated train/test evaluation and result tables.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::pipeline::{Method, MethodLabels};
use crate::error::{Error, Result};
use crate::landmarks::LandmarkSet;
use crate::rng::{self, Rng, STREAM_FIT, STREAM_SPLIT, STREAM_TRIAL};
use crate::trajectory::{Dataset, Label, Trajectory};

/// Attempts at drawing a training split that contains every class.
pub const MAX_SPLIT_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitMode {
    /// Uniform random split with this training fraction.
    Random { train_fraction: f64 },
    /// Train and test on the full dataset.
    Resubstitution,
}

/// Shuffle and cut, redrawing until the training part holds every class.
pub fn split_indices(labels: &[Label], train_fraction: f64, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train_fraction", "must lie strictly between 0 and 1"));
    }
    if n < 2 {
        return Err(Error::invalid("dataset", "need at least two trajectories to split"));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let classes: std::collections::BTreeSet<Label> = labels.iter().copied().collect();
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        idx.shuffle(rng);
        let seen: std::collections::BTreeSet<Label> = idx[..n_train].iter().map(|&i| labels[i]).collect();
        if seen == classes {
            return Ok((idx[..n_train].to_vec(), idx[n_train..].to_vec()));
        }
    }
    Err(Error::SplitFailed(MAX_SPLIT_ATTEMPTS))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub error: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub landmarks: Vec<LandmarkSet>,
    pub seconds: f64,
}

/// Seed of trial `trial` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::derive_path(seed, &[STREAM_TRIAL, trial as u64])
}

/// One split, fit and test under the seed of trial `trial`.
pub fn run_trial(ds: &Dataset, method: &Method, split: SplitMode, seed: u64, trial: usize) -> Result<TrialResult> {
    let start = Instant::now();
    let ts = trial_seed(seed, trial);
    let labels = ds.label_vec();
    let (train_idx, test_idx) = match split {
        SplitMode::Random { train_fraction } => {
            split_indices(&labels, train_fraction, &mut rng::rng(rng::derive(ts, STREAM_SPLIT)))?
        }
        SplitMode::Resubstitution => ((0..ds.len()).collect(), (0..ds.len()).collect()),
    };
    let train = ds.subset(&train_idx);
    let fitted = method.fit(&train, rng::derive(ts, STREAM_FIT))?;
    let test: Vec<&Trajectory> = test_idx.iter().map(|&i| &ds.items()[i].trajectory).collect();
    let predicted = fitted.predict_all(&test)?;
    let wrong = predicted
        .iter()
        .zip(&test_idx)
        .filter(|(p, &i)| **p != labels[i])
        .count();
    Ok(TrialResult {
        trial,
        error: wrong as f64 / test_idx.len() as f64,
        landmarks: fitted.landmark_sets().into_iter().cloned().collect(),
        train_indices: train_idx,
        test_indices: test_idx,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Run `trials` independent trials in parallel; results are in trial order and
/// do not depend on the thread count.
pub fn evaluate(ds: &Dataset, method: &Method, trials: usize, split: SplitMode, seed: u64) -> Result<Vec<TrialResult>> {
    method.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    if ds.labels().len() < 2 {
        return Err(Error::NotBinary(ds.labels().len()));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(ds, method, split, seed, t))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub error: f64,
    /// Wall-clock time; kept out of the CSV so reruns compare byte for byte.
    pub seconds: f64,
}

/// Per-trial errors of one method on one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub dataset: String,
    pub featurization: String,
    pub landmarks: String,
    pub classifier: String,
    pub records: Vec<TrialRecord>,
}

pub const RESULT_HEADER: [&str; 6] = ["dataset", "featurization", "landmarks", "classifier", "trial", "error"];

impl ResultTable {
    pub fn new(dataset: &str, labels: MethodLabels, results: &[TrialResult]) -> Self {
        ResultTable {
            dataset: dataset.to_owned(),
            featurization: labels.featurization,
            landmarks: labels.landmarks,
            classifier: labels.classifier,
            records: results
                .iter()
                .map(|r| TrialRecord {
                    trial: r.trial,
                    error: r.error,
                    seconds: r.seconds,
                })
                .collect(),
        }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }

    pub fn mean(&self) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return f64::NAN;
        }
        self.records.iter().map(|r| r.error).sum::<f64>() / n as f64
    }

    /// Population standard deviation of the trial errors.
    pub fn std(&self) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return f64::NAN;
        }
        let m = self.mean();
        (self.records.iter().map(|r| (r.error - m).powi(2)).sum::<f64>() / n as f64).sqrt()
    }

    fn prefix(&self) -> [&str; 4] {
        [&self.dataset, &self.featurization, &self.landmarks, &self.classifier]
    }

    /// Rows for this table, each prefixed by `lead` (used by sweeps).
    pub(crate) fn rows(&self, lead: &[String]) -> Vec<Vec<String>> {
        let base = |trial: String, value: f64| {
            let mut r: Vec<String> = lead.to_vec();
            r.extend(self.prefix().iter().map(|s| s.to_string()));
            r.push(trial);
            r.push(value.to_string());
            r
        };
        let mut out: Vec<Vec<String>> = self.records.iter().map(|r| base(r.trial.to_string(), r.error)).collect();
        out.push(base("mean".to_owned(), self.mean()));
        out.push(base("std".to_owned(), self.std()));
        out
    }

    /// Trial rows followed by `mean` and `std` summary rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &RESULT_HEADER.map(str::to_owned), &self.rows(&[]))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

pub(crate) fn write_rows<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::io("<result csv>", std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<result csv>", e))?;
    Ok(())
}
