//! Native classifiers, voting ensembles and the evaluation protocol.

use std::collections::BTreeSet;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::FeatureKind;
use crate::trajectory::Label;

pub mod evaluate;
pub mod forest;
pub mod knn;
pub mod logistic;
pub mod pipeline;
pub mod tree;

pub use evaluate::{
    evaluate, run_trial, split_indices, trial_seed, ResultTable, SplitMode, TrialRecord, TrialResult,
};
pub use forest::{ForestParams, RandomForest};
pub use knn::{knn_predict_matrix, Knn};
pub use logistic::LogisticRegression;
pub use pipeline::{
    EtaRule, FeatureSpec, FittedPipeline, LandmarkStrategy, Method, MethodLabels, VectorPipeline, Voter,
};
pub use tree::{DecisionTree, TreeParams};

/// Row-aligned feature vectors and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureKind,
    dim: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl FeatureMatrix {
    pub fn new(kind: FeatureKind, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: r.len(),
            });
        }
        Ok(FeatureMatrix {
            kind,
            dim,
            rows,
            labels,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn classes(&self) -> Vec<Label> {
        self.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            kind: self.kind,
            dim: self.dim,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// A fitted classifier.
///
/// For two-class models `score` is a decision value: positive means the larger
/// of the two labels, and `predict` agrees with its sign.
pub trait Model: Send + Sync + Debug {
    fn predict(&self, x: &[f64]) -> Label;

    fn score(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// Fraction of rows whose prediction differs from the label.
pub fn misclassification_rate(model: &dyn Model, data: &FeatureMatrix) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let wrong = data
        .rows()
        .iter()
        .zip(data.labels())
        .filter(|(x, &y)| model.predict(x) != y)
        .count();
    wrong as f64 / data.len() as f64
}

/// Majority vote; ties go to the smallest label.
pub(crate) fn majority<I: IntoIterator<Item = Label>>(votes: I) -> Label {
    let mut counts: std::collections::BTreeMap<Label, usize> = Default::default();
    for v in votes {
        *counts.entry(v).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, c)| c == best)
        .map(|(l, _)| l)
        .expect("at least one vote")
}

fn default_k() -> usize {
    5
}
fn default_iterations() -> usize {
    1000
}
fn default_learning_rate() -> f64 {
    0.5
}
fn default_estimators() -> usize {
    50
}

/// A classifier family and its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    LogisticRegression {
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
    DecisionTree {
        #[serde(default)]
        max_depth: Option<usize>,
    },
    RandomForest {
        #[serde(default = "default_estimators")]
        n_estimators: usize,
    },
}

impl ClassifierSpec {
    pub fn knn() -> Self {
        ClassifierSpec::Knn { k: default_k() }
    }

    pub fn logistic() -> Self {
        ClassifierSpec::LogisticRegression {
            iterations: default_iterations(),
            learning_rate: default_learning_rate(),
        }
    }

    pub fn random_forest(n_estimators: usize) -> Self {
        ClassifierSpec::RandomForest { n_estimators }
    }

    pub fn short_name(&self) -> String {
        match self {
            ClassifierSpec::Knn { k } => format!("knn{k}"),
            ClassifierSpec::LogisticRegression { .. } => "lr".to_owned(),
            ClassifierSpec::DecisionTree { max_depth: None } => "dt".to_owned(),
            ClassifierSpec::DecisionTree { max_depth: Some(d) } => format!("dt{d}"),
            ClassifierSpec::RandomForest { n_estimators } => format!("rf{n_estimators}"),
        }
    }

    /// True when fitted models expose two-class decision scores.
    pub fn has_scores(&self) -> bool {
        !matches!(self, ClassifierSpec::Knn { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ClassifierSpec::Knn { k: 0 } => Err(Error::invalid("k", "must be at least 1")),
            ClassifierSpec::LogisticRegression { learning_rate, .. }
                if !(learning_rate > 0.0 && learning_rate.is_finite()) =>
            {
                Err(Error::invalid("learning_rate", "must be positive"))
            }
            ClassifierSpec::RandomForest { n_estimators: 0 } => {
                Err(Error::invalid("n_estimators", "must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn fit(&self, data: &FeatureMatrix, seed: u64) -> Result<Box<dyn Model>> {
        self.validate()?;
        Ok(match *self {
            ClassifierSpec::Knn { k } => Box::new(Knn::fit(data, k)?),
            ClassifierSpec::LogisticRegression {
                iterations,
                learning_rate,
            } => Box::new(LogisticRegression::fit(data, iterations, learning_rate)?),
            ClassifierSpec::DecisionTree { max_depth } => Box::new(DecisionTree::fit(
                data,
                &TreeParams {
                    max_depth,
                    ..TreeParams::default()
                },
            )?),
            ClassifierSpec::RandomForest { n_estimators } => Box::new(RandomForest::fit(
                data,
                &ForestParams {
                    n_estimators,
                    ..ForestParams::default()
                },
                seed,
            )?),
        })
    }
}
