//! Trajectory-level classifiers: featurize-then-classify pipelines with
//! optional voting, and KNN over a trajectory distance.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{knn_predict_matrix, majority, ClassifierSpec, Model};
use crate::distances::{distance_matrix, FittedMeasure, Measure};
use crate::error::{Error, Result};
use crate::featurize::{FeatureKind, FeatureParams, Featurizer};
use crate::landmarks::{best_of_k, eta_for_dataset, random_landmarks, LandmarkSet, MistakeDrivenParams};
use crate::rng::{self, STREAM_FIT, STREAM_LANDMARKS, STREAM_VOTER};
use crate::trajectory::{Dataset, Label, Trajectory};

/// How the `eta` scale is chosen from training data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaRule {
    /// Distance between class waypoint means.
    #[default]
    ClassMeans,
    Fixed { value: f64 },
}

impl EtaRule {
    pub fn resolve(&self, train: &Dataset) -> Result<f64> {
        match *self {
            EtaRule::ClassMeans => eta_for_dataset(train),
            EtaRule::Fixed { value } if value > 0.0 && value.is_finite() => Ok(value),
            EtaRule::Fixed { .. } => Err(Error::invalid("eta", "must be positive and finite")),
        }
    }
}

/// Sigma used when a spec leaves it unset.
pub const DEFAULT_SIGMA: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub eta: EtaRule,
    /// Append physical features (turns `vq` into `vq_plus`, `vq_sigma` into `vq_sigma_plus`).
    #[serde(default)]
    pub physical: bool,
}

impl FeatureSpec {
    pub fn new(kind: FeatureKind) -> Self {
        FeatureSpec {
            kind,
            sigma: None,
            eta: EtaRule::default(),
            physical: false,
        }
    }

    /// The feature kind after applying the physical flag.
    pub fn effective_kind(&self) -> Result<FeatureKind> {
        if self.physical {
            self.kind
                .with_physical()
                .ok_or(Error::IncompatibleFeatures(self.kind, FeatureKind::Physical))
        } else {
            Ok(self.kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.effective_kind()?;
        if self.sigma.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("sigma", "must be positive and finite"));
        }
        if let EtaRule::Fixed { value } = self.eta {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid("eta", "must be positive and finite"));
            }
        }
        Ok(())
    }
}

fn default_count() -> usize {
    20
}
fn default_best_of() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LandmarkStrategy {
    Random {
        #[serde(default = "default_count")]
        count: usize,
    },
    MistakeDriven {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_best_of")]
        best_of: usize,
        #[serde(default = "ClassifierSpec::logistic")]
        inner: ClassifierSpec,
    },
    User {
        path: PathBuf,
    },
}

impl LandmarkStrategy {
    pub fn random(count: usize) -> Self {
        LandmarkStrategy::Random { count }
    }

    pub fn mistake_driven(count: usize) -> Self {
        LandmarkStrategy::MistakeDriven {
            count,
            best_of: default_best_of(),
            inner: ClassifierSpec::logistic(),
        }
    }

    pub fn short_name(&self) -> String {
        match self {
            LandmarkStrategy::Random { count } => format!("random{count}"),
            LandmarkStrategy::MistakeDriven { count, best_of, .. } => format!("mistake_driven{count}_best{best_of}"),
            LandmarkStrategy::User { .. } => "user".to_owned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LandmarkStrategy::Random { count: 0 } | LandmarkStrategy::MistakeDriven { count: 0, .. } => {
                Err(Error::invalid("count", "must be at least 1"))
            }
            LandmarkStrategy::MistakeDriven { best_of: 0, .. } => Err(Error::invalid("best_of", "must be at least 1")),
            LandmarkStrategy::MistakeDriven { inner, .. } if !inner.has_scores() => {
                Err(Error::ScoresUnavailable(inner.short_name()))
            }
            LandmarkStrategy::MistakeDriven { inner, .. } => inner.validate(),
            _ => Ok(()),
        }
    }

    /// Landmarks drawn from `train` only.
    pub fn generate(&self, train: &Dataset, eta: f64, seed: u64) -> Result<LandmarkSet> {
        match self {
            LandmarkStrategy::Random { count } => random_landmarks(train, *count, seed),
            LandmarkStrategy::MistakeDriven { count, best_of, inner } => {
                let params = MistakeDrivenParams {
                    classifier: inner.clone(),
                    ..MistakeDrivenParams::new(*count, eta)
                };
                Ok(best_of_k(train, &params, *best_of, seed)?.landmarks)
            }
            LandmarkStrategy::User { path } => LandmarkSet::load(path),
        }
    }
}

fn default_voters() -> usize {
    1
}

/// Featurize, then classify; `voters > 1` fits one model per independently
/// drawn landmark set and takes the majority vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorPipeline {
    pub features: FeatureSpec,
    pub landmarks: LandmarkStrategy,
    pub classifier: ClassifierSpec,
    #[serde(default = "default_voters")]
    pub voters: usize,
}

impl VectorPipeline {
    pub fn new(features: FeatureSpec, landmarks: LandmarkStrategy, classifier: ClassifierSpec) -> Self {
        VectorPipeline {
            features,
            landmarks,
            classifier,
            voters: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.landmarks.validate()?;
        self.classifier.validate()?;
        if self.voters == 0 || self.voters.is_multiple_of(2) {
            return Err(Error::invalid("voters", "must be odd"));
        }
        Ok(())
    }

    fn fit_voter(&self, train: &Dataset, kind: FeatureKind, eta: f64, voter_seed: u64) -> Result<Voter> {
        let landmarks = if kind.uses_landmarks() {
            Some(
                self.landmarks
                    .generate(train, eta, rng::derive(voter_seed, STREAM_LANDMARKS))?,
            )
        } else {
            None
        };
        let featurizer = Featurizer::new(kind, landmarks, FeatureParams::new(eta, self.features.sigma.unwrap_or(DEFAULT_SIGMA))?)?;
        let data = featurizer.apply_dataset(train)?;
        let model = self.classifier.fit(&data, rng::derive(voter_seed, STREAM_FIT))?;
        Ok(Voter { featurizer, model })
    }

    fn fit_with_seeds(&self, train: &Dataset, voter_seeds: &[u64]) -> Result<FittedPipeline> {
        self.validate()?;
        let kind = self.features.effective_kind()?;
        let eta = self.features.eta.resolve(train)?;
        let voters = voter_seeds
            .iter()
            .map(|&s| self.fit_voter(train, kind, eta, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(FittedPipeline::Vectorized { voters })
    }

    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<FittedPipeline> {
        let seeds: Vec<u64> = (0..self.voters as u64)
            .map(|v| rng::derive_path(seed, &[STREAM_VOTER, v]))
            .collect();
        self.fit_with_seeds(train, &seeds)
    }
}

/// A trajectory-level method.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Vectorized(VectorPipeline),
    /// KNN directly on a trajectory distance.
    DistanceKnn { distance: Measure, k: usize },
}

/// Column values identifying a method in result tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodLabels {
    pub featurization: String,
    pub landmarks: String,
    pub classifier: String,
}

impl Method {
    pub fn validate(&self) -> Result<()> {
        match self {
            Method::Vectorized(p) => p.validate(),
            Method::DistanceKnn { distance, k } => {
                if *k == 0 {
                    return Err(Error::invalid("k", "must be at least 1"));
                }
                distance.validate()
            }
        }
    }

    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<FittedPipeline> {
        match self {
            Method::Vectorized(p) => p.fit(train, seed),
            Method::DistanceKnn { distance, k } => {
                self.validate()?;
                Ok(FittedPipeline::DistanceKnn {
                    measure: distance.fit(train, rng::derive(seed, STREAM_LANDMARKS))?,
                    train: train.trajectories().cloned().collect(),
                    labels: train.label_vec(),
                    k: *k,
                })
            }
        }
    }

    pub fn labels(&self) -> MethodLabels {
        match self {
            Method::Vectorized(p) => {
                let kind = p.features.effective_kind().unwrap_or(p.features.kind);
                let mut landmarks = if kind.uses_landmarks() {
                    p.landmarks.short_name()
                } else {
                    "none".to_owned()
                };
                if p.voters > 1 {
                    landmarks.push_str(&format!("_vote{}", p.voters));
                }
                MethodLabels {
                    featurization: kind.as_str().to_owned(),
                    landmarks,
                    classifier: p.classifier.short_name(),
                }
            }
            Method::DistanceKnn { distance, k } => MethodLabels {
                featurization: distance.name().to_owned(),
                landmarks: match distance {
                    Measure::DQ { n_landmarks } | Measure::DQPi { n_landmarks } => format!("random{n_landmarks}"),
                    Measure::Lsh { circles } => format!("circles{circles}"),
                    _ => "none".to_owned(),
                },
                classifier: format!("knn{k}"),
            },
        }
    }
}

#[derive(Debug)]
pub struct Voter {
    pub featurizer: Featurizer,
    pub model: Box<dyn Model>,
}

#[derive(Debug)]
pub enum FittedPipeline {
    Vectorized { voters: Vec<Voter> },
    DistanceKnn {
        measure: FittedMeasure,
        train: Vec<Trajectory>,
        labels: Vec<Label>,
        k: usize,
    },
}

impl FittedPipeline {
    pub fn predict_all(&self, trajs: &[&Trajectory]) -> Result<Vec<Label>> {
        match self {
            FittedPipeline::Vectorized { voters } => {
                let per_voter = voters
                    .iter()
                    .map(|v| {
                        let rows = v.featurizer.apply_all(trajs.to_vec())?;
                        Ok(rows.iter().map(|x| v.model.predict(x)).collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((0..trajs.len())
                    .map(|i| majority(per_voter.iter().map(|p| p[i])))
                    .collect())
            }
            FittedPipeline::DistanceKnn {
                measure,
                train,
                labels,
                k,
            } => {
                let train: Vec<&Trajectory> = train.iter().collect();
                let d = distance_matrix(measure, trajs, &train)?;
                knn_predict_matrix(&d, labels, *k)
            }
        }
    }

    pub fn predict(&self, traj: &Trajectory) -> Result<Label> {
        Ok(self.predict_all(&[traj])?[0])
    }

    /// Landmark sets in voter order (empty for landmark-free methods).
    pub fn landmark_sets(&self) -> Vec<&LandmarkSet> {
        match self {
            FittedPipeline::Vectorized { voters } => voters.iter().filter_map(|v| v.featurizer.landmarks.as_ref()).collect(),
            FittedPipeline::DistanceKnn { measure, .. } => match measure {
                FittedMeasure::DQ(f) => f.landmarks.iter().collect(),
                FittedMeasure::DQPi(q) => vec![q],
                _ => Vec::new(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::LabeledTrajectory;

    fn blobs(n: usize) -> Dataset {
        let mut items = Vec::new();
        for i in 0..n {
            let o = i as f64 * 0.2;
            let a = Trajectory::from_xy(format!("a{i}"), &[(0.0, o), (3.0, o + 0.5)]).unwrap();
            let b = Trajectory::from_xy(format!("b{i}"), &[(0.0, 8.0 + o), (3.0, 8.5 + o)]).unwrap();
            items.push(LabeledTrajectory::new(a, 0));
            items.push(LabeledTrajectory::new(b, 1));
        }
        Dataset::new("blobs", items).unwrap()
    }

    fn pipeline(voters: usize) -> VectorPipeline {
        VectorPipeline {
            voters,
            ..VectorPipeline::new(
                FeatureSpec::new(FeatureKind::Vq),
                LandmarkStrategy::random(5),
                ClassifierSpec::DecisionTree { max_depth: None },
            )
        }
    }

    #[test]
    fn even_voters_rejected() {
        assert!(pipeline(2).validate().is_err());
        assert!(pipeline(0).validate().is_err());
        assert!(pipeline(3).validate().is_ok());
    }

    #[test]
    fn identical_voters_agree_with_one() {
        let d = blobs(6);
        let trajs: Vec<&Trajectory> = d.trajectories().collect();
        let one = pipeline(1).fit_with_seeds(&d, &[17]).unwrap();
        let five = pipeline(5).fit_with_seeds(&d, &[17; 5]).unwrap();
        assert_eq!(one.predict_all(&trajs).unwrap(), five.predict_all(&trajs).unwrap());
        assert_eq!(five.landmark_sets().len(), 5);
    }

    #[test]
    fn single_voter_matches_its_model() {
        let d = blobs(5);
        let trajs: Vec<&Trajectory> = d.trajectories().collect();
        let fitted = pipeline(1).fit(&d, 3).unwrap();
        let FittedPipeline::Vectorized { voters } = &fitted else { panic!() };
        let direct: Vec<Label> = voters[0]
            .featurizer
            .apply_all(trajs.clone())
            .unwrap()
            .iter()
            .map(|x| voters[0].model.predict(x))
            .collect();
        assert_eq!(fitted.predict_all(&trajs).unwrap(), direct);
    }

    #[test]
    fn perfect_voters_stay_perfect() {
        let d = blobs(6);
        let trajs: Vec<&Trajectory> = d.trajectories().collect();
        let fitted = pipeline(5).fit(&d, 8).unwrap();
        assert_eq!(fitted.predict_all(&trajs).unwrap(), d.label_vec());
    }

    #[test]
    fn distance_knn() {
        let d = blobs(4);
        let m = Method::DistanceKnn {
            distance: Measure::DiscreteFrechet,
            k: 1,
        };
        let fitted = m.fit(&d, 0).unwrap();
        let trajs: Vec<&Trajectory> = d.trajectories().collect();
        assert_eq!(fitted.predict_all(&trajs).unwrap(), d.label_vec());
        assert_eq!(m.labels().classifier, "knn1");
    }

    #[test]
    fn physical_flag() {
        let mut f = FeatureSpec::new(FeatureKind::Vq);
        f.physical = true;
        assert_eq!(f.effective_kind().unwrap(), FeatureKind::VqPlus);
        f.kind = FeatureKind::VqExp;
        assert!(f.validate().is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let p: VectorPipeline = serde_json::from_str(
            r#"{"features":{"kind":"vq_exp"},"landmarks":{"kind":"mistake_driven"},"classifier":{"kind":"random-forest"}}"#,
        )
        .unwrap();
        assert_eq!(p.voters, 1);
        assert_eq!(p.landmarks, LandmarkStrategy::mistake_driven(20));
        assert_eq!(p.classifier, ClassifierSpec::random_forest(50));
        assert_eq!(p.features.eta, EtaRule::ClassMeans);
    }
}
