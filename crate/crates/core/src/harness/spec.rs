//! JSON experiment specifications.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierSpec, FeatureSpec, LandmarkStrategy, Method, VectorPipeline};
use crate::distances::Measure;
use crate::error::{Error, Result};
use crate::trajectory::io::transport_mode_id;
use crate::trajectory::preprocess::LabelMerge;
use crate::trajectory::{Format, Label};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    /// Label for formats that carry none.
    #[serde(default)]
    pub label: Label,
}

fn default_format() -> Format {
    Format::CanonicalCsv
}

/// A label merge given by name or as an explicit raw-to-merged map
/// (`null` drops the class).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MergeMap {
    Named(String),
    /// Keys are raw labels written as JSON strings.
    Explicit(BTreeMap<String, Option<Label>>),
}

/// Name of the built-in transportation-mode merge.
pub const TRANSPORT_MODES_MERGE: &str = "transport_modes";

/// Car and taxi become car; train, railway and subway become train; walk, bike
/// and bus are kept; every other mode is dropped.
pub fn transport_modes_merge() -> LabelMerge {
    let id = |m: &str| transport_mode_id(m).expect("known mode");
    let mut map: LabelMerge = (0..crate::trajectory::io::TRANSPORT_MODES.len() as Label)
        .map(|l| (l, None))
        .collect();
    for keep in ["walk", "bike", "bus", "car", "train"] {
        map.insert(id(keep), Some(id(keep)));
    }
    map.insert(id("taxi"), Some(id("car")));
    map.insert(id("railway"), Some(id("train")));
    map.insert(id("subway"), Some(id("train")));
    map
}

impl MergeMap {
    pub fn resolve(&self) -> Result<LabelMerge> {
        match self {
            MergeMap::Named(n) if n == TRANSPORT_MODES_MERGE => Ok(transport_modes_merge()),
            MergeMap::Named(n) => Err(Error::spec("preprocess.merge_labels.map", format!("unknown merge map `{n}`"))),
            MergeMap::Explicit(m) => m
                .iter()
                .map(|(k, v)| {
                    k.trim()
                        .parse::<Label>()
                        .map(|k| (k, *v))
                        .map_err(|_| Error::spec("preprocess.merge_labels.map", format!("bad raw label `{k}`")))
                })
                .collect(),
        }
    }
}

fn default_min_points() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum PreprocessStep {
    MergeLabels {
        map: MergeMap,
    },
    RemoveStationary {},
    /// Split on time gaps (`max_gap`) or into chunks of bounded duration (`max_duration`).
    Partition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_gap: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_duration: Option<f64>,
    },
    LengthFilter {
        #[serde(default = "default_min_points")]
        min: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<usize>,
    },
}

impl PreprocessStep {
    fn name(&self) -> &'static str {
        match self {
            PreprocessStep::MergeLabels { .. } => "merge_labels",
            PreprocessStep::RemoveStationary {} => "remove_stationary",
            PreprocessStep::Partition { .. } => "partition",
            PreprocessStep::LengthFilter { .. } => "length_filter",
        }
    }

    fn rank(&self) -> usize {
        match self {
            PreprocessStep::MergeLabels { .. } => 0,
            PreprocessStep::RemoveStationary {} => 1,
            PreprocessStep::Partition { .. } => 2,
            PreprocessStep::LengthFilter { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSpec {
    /// Noisy copies to add per trajectory of each label.
    pub copies: BTreeMap<Label, usize>,
}

fn default_landmarks() -> LandmarkStrategy {
    LandmarkStrategy::random(20)
}
fn default_classifier() -> ClassifierSpec {
    ClassifierSpec::random_forest(50)
}
fn default_voters() -> usize {
    1
}
fn default_trials() -> usize {
    50
}
fn default_train_fraction() -> f64 {
    0.7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Dataset name used in results and for the sigma default; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub preprocess: Vec<PreprocessStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentSpec>,
    /// Vector featurization; exclusive with `distance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureSpec>,
    /// KNN on a trajectory distance; exclusive with `features`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<Measure>,
    #[serde(default = "default_landmarks")]
    pub landmarks: LandmarkStrategy,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierSpec,
    #[serde(default = "default_voters")]
    pub voters: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Sigma by dataset family, matched on the lowercase alphanumeric name.
pub fn default_sigma_for(dataset: &str) -> f64 {
    let key: String = dataset
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .collect::<String>()
        .to_ascii_lowercase();
    if key.contains("tdrive") {
        10.0
    } else if key.contains("character") || key.contains("twoperson") {
        100.0
    } else {
        1.0
    }
}

/// Re-home a parameter error under a spec field.
fn at<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name, message } => Error::spec(format!("{field}.{name}"), message),
        Error::Spec { .. } => e,
        other => Error::spec(field, other.to_string()),
    })
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Read a spec, or the spec inside a run manifest; relative dataset and
    /// landmark paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let mut spec: ExperimentSpec = if value.get("spec").is_some() && value.get("dataset").is_none() {
            serde_json::from_value::<super::Manifest>(value)?.spec
        } else {
            serde_json::from_value(value)?
        };
        if let Some(dir) = path.parent() {
            spec.resolve_paths(dir);
        }
        Ok(spec)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if self.dataset.path.is_relative() {
            self.dataset.path = base.join(&self.dataset.path);
        }
        if let LandmarkStrategy::User { path } = &mut self.landmarks {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.dataset
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_owned())
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::spec("trials", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::spec("train_fraction", "must lie strictly between 0 and 1"));
        }
        self.validate_preprocess()?;
        if let Some(a) = &self.augment {
            if a.copies.is_empty() {
                return Err(Error::spec("augment.copies", "must name at least one label"));
            }
        }
        match (&self.features, &self.distance) {
            (Some(_), Some(_)) => Err(Error::spec("distance", "`features` and `distance` are exclusive")),
            (None, None) => Err(Error::spec("features", "one of `features` or `distance` is required")),
            (Some(f), None) => {
                at("features", f.validate())?;
                if f.effective_kind()?.uses_landmarks() {
                    at("landmarks", self.landmarks.validate())?;
                }
                at("classifier", self.classifier.validate())?;
                if self.voters == 0 || self.voters.is_multiple_of(2) {
                    return Err(Error::spec("voters", "must be odd"));
                }
                Ok(())
            }
            (None, Some(d)) => {
                at("distance", d.validate())?;
                match self.classifier {
                    ClassifierSpec::Knn { k } if k >= 1 => {}
                    ClassifierSpec::Knn { .. } => return Err(Error::spec("classifier.k", "must be at least 1")),
                    _ => return Err(Error::spec("classifier", "distance-based runs use the knn classifier")),
                }
                if self.voters != 1 {
                    return Err(Error::spec("voters", "voting applies to vector featurizations only"));
                }
                Ok(())
            }
        }
    }

    fn validate_preprocess(&self) -> Result<()> {
        for (i, w) in self.preprocess.windows(2).enumerate() {
            if w[1].rank() <= w[0].rank() {
                return Err(Error::spec(
                    format!("preprocess[{}]", i + 1),
                    format!(
                        "`{}` cannot follow `{}`; steps run in the order merge_labels, remove_stationary, partition, length_filter, each at most once",
                        w[1].name(),
                        w[0].name()
                    ),
                ));
            }
        }
        for (i, step) in self.preprocess.iter().enumerate() {
            let field = |f: &str| format!("preprocess[{i}].{f}");
            match step {
                PreprocessStep::MergeLabels { map } => {
                    map.resolve().map_err(|e| match e {
                        Error::Spec { message, .. } => Error::spec(field("map"), message),
                        other => other,
                    })?;
                }
                PreprocessStep::Partition { max_gap, max_duration } => match (max_gap, max_duration) {
                    (Some(v), None) | (None, Some(v)) if *v > 0.0 && v.is_finite() => {}
                    (Some(_), None) => return Err(Error::spec(field("max_gap"), "must be positive")),
                    (None, Some(_)) => return Err(Error::spec(field("max_duration"), "must be positive")),
                    _ => {
                        return Err(Error::spec(
                            field("max_gap"),
                            "give exactly one of `max_gap` or `max_duration`",
                        ))
                    }
                },
                PreprocessStep::LengthFilter { min, max } => {
                    if *min == 0 {
                        return Err(Error::spec(field("min"), "must be at least 1"));
                    }
                    if max.is_some_and(|m| m < *min) {
                        return Err(Error::spec(field("max"), "must not be below `min`"));
                    }
                }
                PreprocessStep::RemoveStationary {} => {}
            }
        }
        Ok(())
    }

    /// The evaluated method with dataset defaults filled in.
    pub fn method(&self) -> Result<Method> {
        if let Some(d) = &self.distance {
            let ClassifierSpec::Knn { k } = self.classifier else {
                return Err(Error::spec("classifier", "distance-based runs use the knn classifier"));
            };
            return Ok(Method::DistanceKnn { distance: d.clone(), k });
        }
        let mut features = self
            .features
            .clone()
            .ok_or_else(|| Error::spec("features", "one of `features` or `distance` is required"))?;
        if features.sigma.is_none() {
            features.sigma = Some(default_sigma_for(&self.dataset_name()));
        }
        Ok(Method::Vectorized(VectorPipeline {
            features,
            landmarks: self.landmarks.clone(),
            classifier: self.classifier.clone(),
            voters: self.voters,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::FeatureKind;

    fn base() -> &'static str {
        r#"{"dataset":{"path":"data.csv"},"features":{"kind":"vq"}"#
    }

    fn parse(extra: &str) -> Result<ExperimentSpec> {
        let s = ExperimentSpec::from_json(&format!("{}{extra}}}", base()))?;
        s.validate()?;
        Ok(s)
    }

    fn field_of(e: Error) -> String {
        match e {
            Error::Spec { field, .. } => field,
            other => panic!("not a spec error: {other}"),
        }
    }

    #[test]
    fn defaults() {
        let s = parse("").unwrap();
        assert_eq!(s.trials, 50);
        assert_eq!(s.train_fraction, 0.7);
        assert_eq!(s.landmarks, LandmarkStrategy::random(20));
        assert_eq!(s.classifier, ClassifierSpec::random_forest(50));
        assert_eq!(s.dataset.format, Format::CanonicalCsv);
        assert_eq!(s.dataset_name(), "data");
    }

    #[test]
    fn errors_name_their_field() {
        assert_eq!(field_of(parse(r#","trials":0"#).unwrap_err()), "trials");
        assert_eq!(field_of(parse(r#","voters":2"#).unwrap_err()), "voters");
        assert_eq!(field_of(parse(r#","classifier":{"kind":"knn","k":0}"#).unwrap_err()), "classifier.k");
        assert_eq!(field_of(parse(r#","landmarks":{"kind":"random","count":0}"#).unwrap_err()), "landmarks.count");
        assert_eq!(
            field_of(parse(r#","preprocess":[{"step":"merge_labels","map":"nope"}]"#).unwrap_err()),
            "preprocess[0].map"
        );
        assert!(matches!(ExperimentSpec::from_json(r#"{"dataset":{"path":"a"},"bogus":1}"#), Err(Error::Json(_))));
    }

    #[test]
    fn preprocessing_order_is_fixed() {
        let ok = r#","preprocess":[{"step":"merge_labels","map":"transport_modes"},{"step":"remove_stationary"},{"step":"partition","max_gap":600},{"step":"length_filter"}]"#;
        assert!(parse(ok).is_ok());
        let swapped = r#","preprocess":[{"step":"length_filter"},{"step":"remove_stationary"}]"#;
        assert_eq!(field_of(parse(swapped).unwrap_err()), "preprocess[1]");
        let twice = r#","preprocess":[{"step":"remove_stationary"},{"step":"remove_stationary"}]"#;
        assert!(parse(twice).is_err());
        let both = r#","preprocess":[{"step":"partition","max_gap":1,"max_duration":2}]"#;
        assert!(parse(both).is_err());
    }

    #[test]
    fn transport_merge() {
        let m = transport_modes_merge();
        let id = |s| transport_mode_id(s).unwrap();
        assert_eq!(m[&id("taxi")], Some(id("car")));
        assert_eq!(m[&id("subway")], Some(id("train")));
        assert_eq!(m[&id("railway")], Some(id("train")));
        assert_eq!(m[&id("walk")], Some(id("walk")));
        assert_eq!(m[&id("airplane")], None);
        let kept: std::collections::BTreeSet<_> = m.values().flatten().collect();
        assert_eq!(kept.len(), 5);
    }

    #[test]
    fn explicit_merge_map() {
        let s = parse(r#","preprocess":[{"step":"merge_labels","map":{"1":0,"2":1,"3":null}}]"#).unwrap();
        let PreprocessStep::MergeLabels { map } = &s.preprocess[0] else { panic!() };
        let m = map.resolve().unwrap();
        assert_eq!(m[&1], Some(0));
        assert_eq!(m[&3], None);
    }

    #[test]
    fn sigma_defaults() {
        assert_eq!(default_sigma_for("car-bus"), 1.0);
        assert_eq!(default_sigma_for("T-Drive"), 10.0);
        assert_eq!(default_sigma_for("two_persons"), 100.0);
        assert_eq!(default_sigma_for("characters"), 100.0);
        let mut s = parse("").unwrap();
        s.name = Some("tdrive".into());
        s.features = Some(FeatureSpec::new(FeatureKind::VqSigma));
        let Method::Vectorized(p) = s.method().unwrap() else { panic!() };
        assert_eq!(p.features.sigma, Some(10.0));
    }

    #[test]
    fn distance_runs() {
        let s = ExperimentSpec::from_json(
            r#"{"dataset":{"path":"d.csv"},"distance":{"kind":"dtw"},"classifier":{"kind":"knn"}}"#,
        )
        .unwrap();
        s.validate().unwrap();
        assert_eq!(s.method().unwrap(), Method::DistanceKnn { distance: Measure::Dtw, k: 5 });
        let bad = ExperimentSpec::from_json(r#"{"dataset":{"path":"d.csv"},"distance":{"kind":"dtw"}}"#).unwrap();
        assert_eq!(field_of(bad.validate().unwrap_err()), "classifier");
    }
}
