//! CART classification trees (Gini impurity, axis-aligned midpoint splits).

use rand::seq::SliceRandom;

use super::{FeatureMatrix, Model};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::trajectory::Label;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable; `Some(0)` is a single leaf.
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    classes: Vec<Label>,
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Best {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

/// Best split of `samples` on `feature`, scanning thresholds in increasing order.
fn best_on_feature(
    data: &FeatureMatrix,
    class_of: &[usize],
    samples: &[usize],
    feature: usize,
    n_classes: usize,
    order: &mut Vec<usize>,
) -> Option<Best> {
    order.clear();
    order.extend_from_slice(samples);
    let rows = data.rows();
    order.sort_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]));

    let n = order.len();
    let mut right = vec![0usize; n_classes];
    for &s in order.iter() {
        right[class_of[s]] += 1;
    }
    let mut left = vec![0usize; n_classes];
    let mut best: Option<Best> = None;
    for i in 0..n - 1 {
        let c = class_of[order[i]];
        left[c] += 1;
        right[c] -= 1;
        let (lo, hi) = (rows[order[i]][feature], rows[order[i + 1]][feature]);
        if lo >= hi {
            continue;
        }
        let nl = i + 1;
        let nr = n - nl;
        let imp = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
        if best.as_ref().is_none_or(|b| imp < b.impurity) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            best = Some(Best {
                impurity: imp,
                feature,
                threshold,
            });
        }
    }
    best
}

fn better(a: &Best, b: &Best) -> bool {
    a.impurity < b.impurity || (a.impurity == b.impurity && a.feature < b.feature)
}

impl DecisionTree {
    pub fn fit(data: &FeatureMatrix, params: &TreeParams) -> Result<Self> {
        let all: Vec<usize> = (0..data.len()).collect();
        Self::fit_on(data, &all, &data.classes(), params, None)
    }

    /// Grow a tree on `samples` (indices into `data`, repeats allowed). `classes`
    /// fixes the label order of leaf counts. `rng` drives feature subsampling.
    pub(crate) fn fit_on(
        data: &FeatureMatrix,
        samples: &[usize],
        classes: &[Label],
        params: &TreeParams,
        mut rng: Option<&mut Rng>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("train", "no training examples"));
        }
        let k = classes.len();
        let class_of: Vec<usize> = data
            .labels()
            .iter()
            .map(|l| classes.binary_search(l).expect("label in class list"))
            .collect();
        let d = data.dim();
        let max_features = params.max_features.unwrap_or(d).clamp(1, d.max(1));

        let mut nodes: Vec<Node> = Vec::new();
        nodes.push(Node::Leaf { counts: Vec::new() });
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, samples.to_vec(), 0)];
        let mut order = Vec::with_capacity(samples.len());
        let mut features: Vec<usize> = (0..d).collect();

        while let Some((slot, idx, depth)) = stack.pop() {
            let mut counts = vec![0usize; k];
            for &s in &idx {
                counts[class_of[s]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_left = params.max_depth.is_none_or(|m| depth < m);
            if pure || !depth_left || d == 0 {
                nodes[slot] = Node::Leaf { counts };
                continue;
            }

            // candidate features: all in order, or a random subset examined in
            // ascending order with more drawn only if none of them can split
            let mut best: Option<Best> = None;
            if max_features >= d {
                for f in 0..d {
                    if let Some(b) = best_on_feature(data, &class_of, &idx, f, k, &mut order) {
                        if best.as_ref().is_none_or(|cur| better(&b, cur)) {
                            best = Some(b);
                        }
                    }
                }
            } else {
                let rng = rng.as_deref_mut().expect("feature subsampling needs an rng");
                features.sort_unstable();
                features.shuffle(rng);
                let mut first: Vec<usize> = features[..max_features].to_vec();
                first.sort_unstable();
                for f in first {
                    if let Some(b) = best_on_feature(data, &class_of, &idx, f, k, &mut order) {
                        if best.as_ref().is_none_or(|cur| better(&b, cur)) {
                            best = Some(b);
                        }
                    }
                }
                for &f in &features[max_features..] {
                    if best.is_some() {
                        break;
                    }
                    best = best_on_feature(data, &class_of, &idx, f, k, &mut order);
                }
            }

            let Some(best) = best else {
                nodes[slot] = Node::Leaf { counts };
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&s| data.rows()[s][best.feature] <= best.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { counts: Vec::new() });
            let right = nodes.len();
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
            };
            // right pushed first so the left subtree is grown (and draws randomness) first
            stack.push((right, r, depth + 1));
            stack.push((left, l, depth + 1));
        }
        Ok(DecisionTree {
            classes: classes.to_vec(),
            nodes,
        })
    }

    fn leaf(&self, x: &[f64]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

impl Model for DecisionTree {
    fn predict(&self, x: &[f64]) -> Label {
        let counts = self.leaf(x);
        let best = counts.iter().copied().max().unwrap_or(0);
        let i = counts.iter().position(|&c| c == best).unwrap_or(0);
        self.classes[i]
    }

    fn score(&self, x: &[f64]) -> Option<f64> {
        if self.classes.len() != 2 {
            return None;
        }
        let c = self.leaf(x);
        Some(c[1] as f64 / (c[0] + c[1]) as f64 - 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::misclassification_rate;
    use crate::featurize::FeatureKind;

    fn m(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> FeatureMatrix {
        FeatureMatrix::new(FeatureKind::Vq, rows, labels).unwrap()
    }

    fn xor() -> FeatureMatrix {
        m(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn pure_set_is_one_leaf() {
        let t = DecisionTree::fit(&m(vec![vec![1.0], vec![2.0]], vec![3, 3]), &TreeParams::default()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[9.0]), 3);
    }

    /// Exhaustive oracle over depth-2 axis-aligned trees on the XOR points:
    /// a zero-error tree exists, and no single split achieves zero error.
    #[test]
    fn xor_needs_depth_two() {
        let data = xor();
        let thresholds = [-0.5, 0.5, 1.5];
        let mut single_best = usize::MAX;
        for f in 0..2 {
            for &t in &thresholds {
                // each side predicts its majority
                let mut err = 0;
                for side in [true, false] {
                    let labels: Vec<Label> = data.rows().iter().zip(data.labels())
                        .filter(|(r, _)| (r[f] <= t) == side).map(|(_, &l)| l).collect();
                    let ones = labels.iter().filter(|&&l| l == 1).count();
                    err += ones.min(labels.len() - ones);
                }
                single_best = single_best.min(err);
            }
        }
        assert_eq!(single_best, 2);

        let tree = DecisionTree::fit(&data, &TreeParams::default()).unwrap();
        assert_eq!(misclassification_rate(&tree, &data), 0.0);
        assert_eq!(tree.depth(), 2);
    }

    #[test]
    fn depth_zero_is_majority_stump() {
        let data = m(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 0]);
        let t = DecisionTree::fit(&data, &TreeParams { max_depth: Some(0), max_features: None }).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[2.0]), 1);
    }

    #[test]
    fn midpoint_thresholds_and_scores() {
        let data = m(vec![vec![0.0], vec![2.0]], vec![0, 1]);
        let t = DecisionTree::fit(&data, &TreeParams::default()).unwrap();
        assert_eq!(t.predict(&[0.99]), 0);
        assert_eq!(t.predict(&[1.01]), 1);
        assert_eq!(t.score(&[1.01]), Some(0.5));
        assert_eq!(t.score(&[0.0]), Some(-0.5));
    }

    #[test]
    fn leaf_tie_goes_to_smaller_label() {
        let data = m(vec![vec![1.0], vec![1.0]], vec![1, 0]);
        let t = DecisionTree::fit(&data, &TreeParams::default()).unwrap();
        assert_eq!(t.predict(&[1.0]), 0);
        assert_eq!(t.score(&[1.0]), Some(0.0));
    }
}
