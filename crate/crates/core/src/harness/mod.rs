//! Config-driven experiments: dataset preparation, repeated evaluation,
//! parameter sweeps and reproducible run manifests.

mod spec;

pub use spec::{
    default_sigma_for, transport_modes_merge, AugmentSpec, DatasetSpec, ExperimentSpec, MergeMap, PreprocessStep,
    TRANSPORT_MODES_MERGE,
};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::classify::evaluate::{write_rows, RESULT_HEADER};
use crate::classify::{evaluate, ClassifierSpec, FeatureMatrix, LandmarkStrategy, Method, ResultTable, SplitMode};
use crate::distances::{distance_matrix, FittedMeasure};
use crate::error::{Error, Result};
use crate::featurize::{FeatureParams, Featurizer};
use crate::rng::{self, STREAM_AUGMENT, STREAM_LANDMARKS};
use crate::trajectory::io::load_dataset_with;
use crate::trajectory::preprocess::{
    augment_dataset, exclude_ids, filter_length, merge_labels, partition_by_duration, partition_by_gap,
    remove_stationary,
};
use crate::trajectory::{Dataset, LoadOptions, Trajectory};

/// Everything needed to replay a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub toolkit_version: String,
    pub seed: u64,
    pub spec: ExperimentSpec,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Manifest {
            toolkit_version: crate::VERSION.to_owned(),
            seed: spec.seed,
            spec: spec.clone(),
        }
    }
}

/// Path of the manifest written next to a result CSV.
pub fn manifest_path(results: &Path) -> PathBuf {
    results.with_extension("manifest.json")
}

/// Apply the configured preprocessing steps in order.
pub fn preprocess(ds: &Dataset, steps: &[PreprocessStep]) -> Result<Dataset> {
    let mut ds = ds.clone();
    for step in steps {
        let before = ds.len();
        ds = match step {
            PreprocessStep::MergeLabels { map } => merge_labels(&ds, &map.resolve()?)?,
            PreprocessStep::RemoveStationary {} => ds.map_trajectories(remove_stationary)?,
            PreprocessStep::Partition { max_gap, max_duration } => match (max_gap, max_duration) {
                (Some(g), _) => ds.flat_map_trajectories(|t| partition_by_gap(t, *g))?,
                (None, Some(d)) => ds.flat_map_trajectories(|t| partition_by_duration(t, *d))?,
                (None, None) => return Err(Error::spec("preprocess.partition", "no threshold given")),
            },
            PreprocessStep::LengthFilter { min, max } => filter_length(&ds, *min, *max),
        };
        info!("{:?}: {} -> {} trajectories", step, before, ds.len());
    }
    Ok(ds)
}

/// Load, preprocess, exclude and augment the spec's dataset.
pub fn prepare_dataset(spec: &ExperimentSpec) -> Result<Dataset> {
    let opts = LoadOptions {
        label: spec.dataset.label,
    };
    let raw = load_dataset_with(&spec.dataset.path, spec.dataset.format, &opts)?;
    let mut ds = preprocess(&raw, &spec.preprocess)?.with_name(spec.dataset_name());
    if !spec.exclude_ids.is_empty() {
        ds = exclude_ids(&ds, &spec.exclude_ids);
    }
    if let Some(a) = &spec.augment {
        ds = augment_dataset(&ds, &a.copies, rng::derive(spec.seed, STREAM_AUGMENT))?;
    }
    info!("dataset {}: {:?}", ds.name(), ds.class_counts());
    Ok(ds)
}

/// Evaluate the spec's method on an already prepared dataset.
pub fn run_on(spec: &ExperimentSpec, ds: &Dataset) -> Result<ResultTable> {
    spec.validate()?;
    let method = spec.method()?;
    let split = SplitMode::Random {
        train_fraction: spec.train_fraction,
    };
    let results = evaluate(ds, &method, spec.trials, split, spec.seed)?;
    Ok(ResultTable::new(ds.name(), method.labels(), &results))
}

pub fn run(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    run_on(spec, &prepare_dataset(spec)?)
}

/// Write the result CSV and its manifest; returns the manifest path.
pub fn write_run(spec: &ExperimentSpec, table: &ResultTable, out: &Path) -> Result<PathBuf> {
    let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
    table.write_csv(std::io::BufWriter::new(file))?;
    let mpath = manifest_path(out);
    let json = serde_json::to_string_pretty(&Manifest::new(spec))?;
    std::fs::write(&mpath, json + "\n").map_err(|e| Error::io(&mpath, e))?;
    Ok(mpath)
}

/// Run `f` on a dedicated pool of `threads` workers (`None` uses the global pool).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    /// Landmark count.
    NLandmarks,
    /// Neighbors of a KNN classifier.
    K,
    NEstimators,
    Voters,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::NLandmarks => "n_landmarks",
            SweepParameter::K => "k",
            SweepParameter::NEstimators => "n_estimators",
            SweepParameter::Voters => "voters",
        }
    }

    /// A copy of `spec` with this parameter set to `value`.
    pub fn apply(self, spec: &ExperimentSpec, value: usize) -> Result<ExperimentSpec> {
        let mut s = spec.clone();
        let unsupported = || Error::spec(self.as_str(), "not applicable to this spec");
        match self {
            SweepParameter::NLandmarks => match &mut s.landmarks {
                LandmarkStrategy::Random { count } | LandmarkStrategy::MistakeDriven { count, .. } => *count = value,
                LandmarkStrategy::User { .. } => return Err(unsupported()),
            },
            SweepParameter::K => match &mut s.classifier {
                ClassifierSpec::Knn { k } => *k = value,
                _ => return Err(unsupported()),
            },
            SweepParameter::NEstimators => match &mut s.classifier {
                ClassifierSpec::RandomForest { n_estimators } => *n_estimators = value,
                _ => return Err(unsupported()),
            },
            SweepParameter::Voters => s.voters = value,
        }
        Ok(s)
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_landmarks" | "landmarks" | "q" => Ok(SweepParameter::NLandmarks),
            "k" => Ok(SweepParameter::K),
            "n_estimators" => Ok(SweepParameter::NEstimators),
            "voters" | "m" => Ok(SweepParameter::Voters),
            _ => Err(Error::spec(
                "parameter",
                format!("unknown sweep parameter `{s}` (expected n_landmarks, k, n_estimators or voters)"),
            )),
        }
    }
}

/// One run per value on the same prepared data and master seed.
pub fn sweep(spec: &ExperimentSpec, param: SweepParameter, values: &[usize]) -> Result<Vec<(usize, ResultTable)>> {
    if values.is_empty() {
        return Err(Error::spec("values", "need at least one value"));
    }
    let specs = values
        .iter()
        .map(|&v| {
            let s = param.apply(spec, v)?;
            s.validate()?;
            Ok((v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let ds = prepare_dataset(spec)?;
    specs.iter().map(|(v, s)| Ok((*v, run_on(s, &ds)?))).collect()
}

/// Long-form CSV: `parameter,value,` followed by the result table columns.
pub fn write_sweep_csv<W: Write>(param: SweepParameter, tables: &[(usize, ResultTable)], out: W) -> Result<()> {
    let mut header = vec!["parameter".to_owned(), "value".to_owned()];
    header.extend(RESULT_HEADER.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = tables
        .iter()
        .flat_map(|(v, t)| t.rows(&[param.as_str().to_owned(), v.to_string()]))
        .collect();
    write_rows(out, &header, &rows)
}

/// Featurize the whole prepared dataset with landmarks drawn from it under the
/// spec seed. The first voter's featurization is used.
pub fn featurize(spec: &ExperimentSpec, ds: &Dataset) -> Result<(Featurizer, FeatureMatrix)> {
    spec.validate()?;
    let Method::Vectorized(p) = spec.method()? else {
        return Err(Error::spec("features", "featurize needs a `features` section"));
    };
    let kind = p.features.effective_kind()?;
    let eta = p.features.eta.resolve(ds)?;
    let landmarks = if kind.uses_landmarks() {
        Some(p.landmarks.generate(ds, eta, rng::derive(spec.seed, STREAM_LANDMARKS))?)
    } else {
        None
    };
    let sigma = p.features.sigma.unwrap_or(crate::classify::pipeline::DEFAULT_SIGMA);
    let f = Featurizer::new(kind, landmarks, FeatureParams::new(eta, sigma)?)?;
    let m = f.apply_dataset(ds)?;
    Ok((f, m))
}

/// Pairwise distances over the whole prepared dataset.
pub fn distances(spec: &ExperimentSpec, ds: &Dataset) -> Result<(FittedMeasure, Vec<Vec<f64>>)> {
    let measure = spec
        .distance
        .as_ref()
        .ok_or_else(|| Error::spec("distance", "distances need a `distance` section"))?;
    let fitted = measure.fit(ds, rng::derive(spec.seed, STREAM_LANDMARKS))?;
    let trajs: Vec<&Trajectory> = ds.trajectories().collect();
    let m = distance_matrix(&fitted, &trajs, &trajs)?;
    Ok((fitted, m))
}
