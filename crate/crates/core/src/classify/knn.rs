use std::cmp::Ordering;

use super::{FeatureMatrix, Model};
use crate::error::{Error, Result};
use crate::trajectory::Label;

/// k-nearest-neighbor classifier over Euclidean feature vectors.
#[derive(Clone, Debug)]
pub struct Knn {
    k: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

/// Vote among neighbors sorted nearest first. Ties go to the tied label whose
/// nearest representative comes first.
fn vote(sorted_labels: &[Label]) -> Label {
    let mut tally: Vec<(Label, usize, usize)> = Vec::new(); // (label, count, first rank)
    for (rank, &l) in sorted_labels.iter().enumerate() {
        match tally.iter_mut().find(|e| e.0 == l) {
            Some(e) => e.1 += 1,
            None => tally.push((l, 1, rank)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|e| e.0)
        .expect("k >= 1")
}

/// Indices of the `k` smallest distances, ordered by (distance, index).
fn nearest(dists: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<(f64, usize)> = dists.enumerate().map(|(i, d)| (d, i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
    };
    let k = k.min(idx.len());
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx.into_iter().map(|(_, i)| i).collect()
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("train", "no training examples"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("must be in 1..={n}, got {k}")));
    }
    Ok(())
}

impl Knn {
    pub fn fit(data: &FeatureMatrix, k: usize) -> Result<Self> {
        check_k(k, data.len())?;
        Ok(Knn {
            k,
            rows: data.rows().to_vec(),
            labels: data.labels().to_vec(),
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Model for Knn {
    fn predict(&self, x: &[f64]) -> Label {
        let nn = nearest(self.rows.iter().map(|r| sq_dist(r, x)), self.k);
        let labels: Vec<Label> = nn.iter().map(|&i| self.labels[i]).collect();
        vote(&labels)
    }
}

/// KNN on a precomputed distance matrix: `dist[i][j]` is the distance from query
/// `i` to training item `j`.
pub fn knn_predict_matrix(dist: &[Vec<f64>], train_labels: &[Label], k: usize) -> Result<Vec<Label>> {
    check_k(k, train_labels.len())?;
    dist.iter()
        .map(|row| {
            if row.len() != train_labels.len() {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: train_labels.len(),
                });
            }
            let nn = nearest(row.iter().copied(), k);
            Ok(vote(&nn.iter().map(|&i| train_labels[i]).collect::<Vec<_>>()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::FeatureKind;

    fn m(rows: &[&[f64]], labels: &[Label]) -> FeatureMatrix {
        FeatureMatrix::new(FeatureKind::Vq, rows.iter().map(|r| r.to_vec()).collect(), labels.to_vec()).unwrap()
    }

    #[test]
    fn exact_match_k1() {
        let data = m(&[&[0.0], &[1.0], &[5.0]], &[0, 1, 0]);
        let knn = Knn::fit(&data, 1).unwrap();
        assert_eq!(knn.predict(&[1.0]), 1);
        assert_eq!(knn.predict(&[5.0]), 0);
    }

    #[test]
    fn majority_of_three() {
        let data = m(&[&[0.0], &[0.1], &[0.2], &[10.0]], &[1, 1, 0, 0]);
        assert_eq!(Knn::fit(&data, 3).unwrap().predict(&[0.0]), 1);
    }

    #[test]
    fn vote_tie_uses_nearest() {
        let data = m(&[&[0.0], &[1.0]], &[1, 0]);
        assert_eq!(Knn::fit(&data, 2).unwrap().predict(&[0.9]), 0);
        assert_eq!(Knn::fit(&data, 2).unwrap().predict(&[0.1]), 1);
    }

    #[test]
    fn distance_ties_use_lower_index() {
        let data = m(&[&[-1.0], &[1.0], &[3.0]], &[0, 1, 1]);
        // both first two are at distance 1; the lower index (label 0) wins k=1
        assert_eq!(Knn::fit(&data, 1).unwrap().predict(&[0.0]), 0);
    }

    #[test]
    fn precomputed_matrix() {
        let d = vec![vec![0.5, 0.1, 0.9], vec![0.0, 3.0, 3.0]];
        assert_eq!(knn_predict_matrix(&d, &[0, 1, 1], 1).unwrap(), vec![1, 0]);
        assert_eq!(knn_predict_matrix(&d, &[0, 1, 1], 3).unwrap(), vec![1, 1]);
        assert!(knn_predict_matrix(&d, &[], 1).is_err());
        assert!(knn_predict_matrix(&d, &[0, 1, 1], 4).is_err());
    }

    #[test]
    fn empty_train_rejected() {
        let data = FeatureMatrix::new(FeatureKind::Vq, vec![], vec![]).unwrap();
        assert!(Knn::fit(&data, 1).is_err());
    }
}
