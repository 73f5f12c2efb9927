//! Bagged CART ensembles.

use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{DecisionTree, TreeParams};
use super::{majority, FeatureMatrix, Model};
use crate::error::{Error, Result};
use crate::rng::{self, STREAM_TREE};
use crate::trajectory::Label;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    /// Features examined per split; `None` means ⌈√d⌉.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 50,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    classes: Vec<Label>,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(data: &FeatureMatrix, params: &ForestParams, seed: u64) -> Result<Self> {
        if params.n_estimators == 0 {
            return Err(Error::invalid("n_estimators", "must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("train", "no training examples"));
        }
        let classes = data.classes();
        let n = data.len();
        let d = data.dim();
        let max_features = params
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1));
        let tree_params = TreeParams {
            max_depth: None,
            max_features: Some(max_features),
        };
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::rng(rng::derive_path(seed, &[STREAM_TREE, i as u64]));
                let sample: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit_on(data, &sample, &classes, &tree_params, Some(&mut rng))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest { classes, trees })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Model for RandomForest {
    fn predict(&self, x: &[f64]) -> Label {
        majority(self.trees.iter().map(|t| t.predict(x)))
    }

    /// Fraction of trees voting for the larger label, minus one half.
    fn score(&self, x: &[f64]) -> Option<f64> {
        if self.classes.len() != 2 {
            return None;
        }
        let hi = self.trees.iter().filter(|t| t.predict(x) == self.classes[1]).count();
        Some(hi as f64 / self.trees.len() as f64 - 0.5)
    }
}
