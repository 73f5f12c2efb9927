//! L2-regularized logistic regression by full-batch gradient descent.
//!
//! Features are standardized internally; the stored model is the equivalent
//! affine function of the raw features. More than two classes are handled
//! one-vs-rest.

use super::{FeatureMatrix, Model};
use crate::error::{Error, Result};
use crate::trajectory::Label;

pub const L2_PENALTY: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
struct Affine {
    w: Vec<f64>,
    b: f64,
}

impl Affine {
    fn eval(&self, x: &[f64]) -> f64 {
        self.b + self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegression {
    classes: Vec<Label>,
    /// One model for two classes (positive = `classes[1]`), one per class otherwise,
    /// none for a single class.
    models: Vec<Affine>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn fit_binary(z: &[Vec<f64>], y: &[f64], iterations: usize, lr: f64) -> (Vec<f64>, f64) {
    let n = z.len() as f64;
    let d = z.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut gw = vec![0.0; d];
    for _ in 0..iterations {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (row, &yi) in z.iter().zip(y) {
            let p = sigmoid(b + row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>());
            let r = p - yi;
            gb += r;
            for (g, x) in gw.iter_mut().zip(row) {
                *g += r * x;
            }
        }
        for (wj, gj) in w.iter_mut().zip(&gw) {
            *wj -= lr * (gj / n + L2_PENALTY * *wj);
        }
        b -= lr * gb / n;
    }
    (w, b)
}

impl LogisticRegression {
    pub fn fit(data: &FeatureMatrix, iterations: usize, learning_rate: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("train", "no training examples"));
        }
        let classes = data.classes();
        if classes.len() == 1 {
            return Ok(LogisticRegression {
                classes,
                models: Vec::new(),
            });
        }

        let d = data.dim();
        let n = data.len() as f64;
        let mut mean = vec![0.0; d];
        for r in data.rows() {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut scale = vec![0.0; d];
        for r in data.rows() {
            for ((s, x), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        let z: Vec<Vec<f64>> = data
            .rows()
            .iter()
            .map(|r| r.iter().zip(&mean).zip(&scale).map(|((x, m), s)| (x - m) / s).collect())
            .collect();

        let positives: Vec<Label> = if classes.len() == 2 {
            vec![classes[1]]
        } else {
            classes.clone()
        };
        let models = positives
            .iter()
            .map(|&pos| {
                let y: Vec<f64> = data.labels().iter().map(|&l| f64::from(u8::from(l == pos))).collect();
                let (wz, bz) = fit_binary(&z, &y, iterations, learning_rate);
                // back to raw feature space
                let w: Vec<f64> = wz.iter().zip(&scale).map(|(w, s)| w / s).collect();
                let b = bz - w.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
                Affine { w, b }
            })
            .collect();
        Ok(LogisticRegression { classes, models })
    }
}

impl Model for LogisticRegression {
    fn predict(&self, x: &[f64]) -> Label {
        match self.classes.len() {
            1 => self.classes[0],
            2 => {
                if self.models[0].eval(x) > 0.0 {
                    self.classes[1]
                } else {
                    self.classes[0]
                }
            }
            _ => {
                let mut best = (f64::NEG_INFINITY, self.classes[0]);
                for (m, &l) in self.models.iter().zip(&self.classes) {
                    let s = m.eval(x);
                    if s > best.0 {
                        best = (s, l);
                    }
                }
                best.1
            }
        }
    }

    fn score(&self, x: &[f64]) -> Option<f64> {
        (self.classes.len() == 2).then(|| self.models[0].eval(x))
    }
}
