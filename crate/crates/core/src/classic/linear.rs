//! One-vs-rest linear classifiers with L2-regularized hinge loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{softmax, FeatureMatrix, TrainParams};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearOvrModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// One weight vector per class, over standardized features.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LinearOvrModel {
    /// Per-sample subgradient descent; epoch `e` visits rows in an order
    /// shuffled from `(seed, e)` with step `lr / sqrt(1 + e)`.
    pub fn fit(fm: &FeatureMatrix, params: &TrainParams) -> Self {
        let d = fm.num_features();
        let k = fm.num_classes();
        let n = fm.len() as f64;
        let mut means = vec![0.0; d];
        for r in fm.rows() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut scales = vec![0.0; d];
        for r in fm.rows() {
            for ((s, v), m) in scales.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut scales {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let mut model = LinearOvrModel {
            means,
            scales,
            weights: vec![vec![0.0; d]; k],
            biases: vec![0.0; k],
        };
        let xs: Vec<Vec<f64>> = fm.rows().iter().map(|r| model.standardize(r)).collect();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng::stream(params.seed, &[epoch as u64]));
            let lr = params.learning_rate / (1.0 + epoch as f64).sqrt();
            for &i in &order {
                let x = &xs[i];
                let label = fm.labels()[i];
                for c in 0..k {
                    let y = if c == label { 1.0 } else { -1.0 };
                    let w = &mut model.weights[c];
                    let margin = y * (dot(w, x) + model.biases[c]);
                    let shrink = 1.0 - lr * params.lambda;
                    if margin < 1.0 {
                        for (wj, xj) in w.iter_mut().zip(x) {
                            *wj = *wj * shrink + lr * y * xj;
                        }
                        model.biases[c] += lr * y;
                    } else {
                        w.iter_mut().for_each(|wj| *wj *= shrink);
                    }
                }
            }
        }
        model
    }

    pub fn num_features(&self) -> usize {
        self.means.len()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn margins(&self, row: &[f64]) -> Vec<f64> {
        let x = self.standardize(row);
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, &x) + b)
            .collect()
    }

    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.margins(row))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::super::tests::fm;
    use super::super::{accuracy, train, ClassifierKind, TrainParams};

    #[test]
    fn xor_is_not_linearly_separable() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let labels = vec![0, 0, 1, 1];
        let m = fm(rows.clone(), labels.clone(), 2);
        let model = train(ClassifierKind::LinearOvr, &m, &TrainParams::default()).unwrap();
        assert!(accuracy(&model.predict(&rows).unwrap(), &labels) <= 0.75);
    }

    #[test]
    fn separable_blobs_learned() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let c = (i % 3) as f64;
                vec![
                    10.0 * c + (i % 5) as f64 * 0.1,
                    -5.0 * c + (i % 4) as f64 * 0.1,
                ]
            })
            .collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let m = fm(rows.clone(), labels.clone(), 3);
        let model = train(ClassifierKind::LinearOvr, &m, &TrainParams::default()).unwrap();
        assert_eq!(accuracy(&model.predict(&rows).unwrap(), &labels), 1.0);
        let p = model.predict_proba(&rows).unwrap();
        for r in p.iter_rows() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, (i * i % 7) as f64])
            .collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let m = fm(rows, labels, 2);
        let p = TrainParams {
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            train(ClassifierKind::LinearOvr, &m, &p).unwrap(),
            train(ClassifierKind::LinearOvr, &m, &p).unwrap()
        );
    }
}
