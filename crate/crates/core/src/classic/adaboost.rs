//! SAMME multiclass AdaBoost over depth-1 decision stumps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, softmax, FeatureMatrix};

/// `x[feature] <= threshold` predicts `left`, otherwise `right`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

impl Stump {
    pub fn predict(&self, row: &[f64]) -> usize {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub num_classes: usize,
    pub num_features: usize,
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Candidate {
    stump: Stump,
    /// Weighted sum of squared class masses per side over side mass;
    /// larger means lower Gini impurity.
    purity: f64,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    // deterministic regardless of reduction order
    if b.purity > a.purity || (b.purity == a.purity && b.stump.feature < a.stump.feature) {
        b
    } else {
        a
    }
}

fn majority(mass: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, m) in mass.enumerate() {
        if m > best.1 {
            best = (c, m);
        }
    }
    best.0
}

/// Minimum weighted Gini split of one feature over midpoints between
/// consecutive distinct values; leaves predict their weighted majority.
fn best_stump_for_feature(
    feature: usize,
    order: &[usize],
    rows: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    class_totals: &[f64],
) -> Candidate {
    let k = class_totals.len();
    let total: f64 = class_totals.iter().sum();
    let total_sq: f64 = class_totals.iter().map(|t| t * t).sum();
    let all = majority(class_totals.iter().copied());
    let mut best = Candidate {
        stump: Stump {
            feature,
            threshold: f64::INFINITY,
            left: all,
            right: all,
        },
        purity: total_sq / total,
    };
    let mut best_left: Option<Vec<f64>> = None;
    let mut left = vec![0.0; k];
    let (mut lw, mut lsq, mut rsq) = (0.0, 0.0, total_sq);
    for (pos, &i) in order.iter().enumerate() {
        let (y, w) = (labels[i], weights[i]);
        let r = class_totals[y] - left[y];
        lsq += (left[y] + w).powi(2) - left[y].powi(2);
        rsq += (r - w).powi(2) - r.powi(2);
        left[y] += w;
        lw += w;
        let Some(&next) = order.get(pos + 1) else {
            break;
        };
        let (v, v_next) = (rows[i][feature], rows[next][feature]);
        let rw = total - lw;
        if v == v_next || lw <= 0.0 || rw <= 0.0 {
            continue;
        }
        let purity = lsq / lw + rsq / rw;
        if purity > best.purity {
            best.purity = purity;
            best.stump.threshold = 0.5 * (v + v_next);
            best_left = Some(left.clone());
        }
    }
    if let Some(l) = best_left {
        best.stump.left = majority(l.iter().copied());
        best.stump.right = majority((0..k).map(|c| class_totals[c] - l[c]));
    }
    best
}

impl AdaBoostModel {
    /// Runs up to `rounds` boosting rounds. A round whose weighted error is
    /// not below `1 - 1/K` ends training; a perfect stump ends it after
    /// being kept.
    pub fn fit(fm: &FeatureMatrix, rounds: usize) -> Self {
        let (rows, labels) = (fm.rows(), fm.labels());
        let n = rows.len();
        let d = fm.num_features();
        let k = fm.num_classes();
        let orders: Vec<Vec<usize>> = (0..d)
            .map(|f| {
                let mut o: Vec<usize> = (0..n).collect();
                o.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
                o
            })
            .collect();

        let mut weights = vec![1.0 / n as f64; n];
        let mut model = AdaBoostModel {
            num_classes: k,
            num_features: d,
            stumps: Vec::new(),
            alphas: Vec::new(),
        };
        let chance_error = 1.0 - 1.0 / k as f64;
        for _ in 0..rounds {
            let mut class_totals = vec![0.0; k];
            for (&y, &w) in labels.iter().zip(&weights) {
                class_totals[y] += w;
            }
            let best = (0..d)
                .into_par_iter()
                .map(|f| {
                    best_stump_for_feature(f, &orders[f], rows, labels, &weights, &class_totals)
                })
                .reduce_with(better);
            let Some(Candidate { stump, .. }) = best else {
                break;
            };
            let total: f64 = weights.iter().sum();
            let missed: f64 = (0..n)
                .filter(|&i| stump.predict(&rows[i]) != labels[i])
                .map(|i| weights[i])
                .sum();
            let error = (missed / total).max(0.0);
            if error >= chance_error {
                break;
            }
            let clipped = error.max(1e-10);
            let alpha = ((1.0 - clipped) / clipped).ln() + ((k - 1) as f64).ln();
            model.stumps.push(stump);
            model.alphas.push(alpha);
            if error == 0.0 {
                break;
            }
            let boost = alpha.exp();
            for i in 0..n {
                if stump.predict(&rows[i]) != labels[i] {
                    weights[i] *= boost;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        model
    }

    /// Weighted stump votes per class.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.truncated_scores(row, self.stumps.len())
    }

    pub fn truncated_scores(&self, row: &[f64], rounds: usize) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_classes];
        for (s, &a) in self.stumps.iter().zip(&self.alphas).take(rounds) {
            scores[s.predict(row)] += a;
        }
        scores
    }

    /// Softmax of the votes normalized by the total vote weight.
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let total: f64 = self.alphas.iter().sum();
        if total <= 0.0 {
            return vec![1.0 / self.num_classes as f64; self.num_classes];
        }
        let scores = self.scores(row);
        softmax(&scores.iter().map(|s| s / total).collect::<Vec<_>>())
    }

    /// Predictions of the first `rounds` stumps only.
    pub fn predict_truncated(&self, row: &[f64], rounds: usize) -> usize {
        argmax(&self.truncated_scores(row, rounds))
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::fm;
    use super::super::{accuracy, train, ClassifierKind, ClassifierModel, TrainParams};
    use super::*;

    fn separable() -> FeatureMatrix {
        fm(
            vec![
                vec![1.0],
                vec![2.0],
                vec![3.0],
                vec![7.0],
                vec![8.0],
                vec![9.0],
            ],
            vec![0, 0, 0, 1, 1, 1],
            2,
        )
    }

    #[test]
    fn one_round_separates_1d() {
        let m = AdaBoostModel::fit(&separable(), 1);
        assert_eq!(m.stumps.len(), 1);
        assert_eq!(
            m.stumps[0],
            Stump {
                feature: 0,
                threshold: 5.0,
                left: 0,
                right: 1
            }
        );
        let preds: Vec<usize> = separable()
            .rows()
            .iter()
            .map(|r| m.predict_truncated(r, 1))
            .collect();
        assert_eq!(accuracy(&preds, separable().labels()), 1.0);
    }

    #[test]
    fn probabilities_follow_stump_vote() {
        let model = train(
            ClassifierKind::AdaBoost,
            &separable(),
            &TrainParams::default(),
        )
        .unwrap();
        let p = model.predict_proba(&[vec![0.0], vec![10.0]]).unwrap();
        assert!(p.row(0)[0] > p.row(0)[1]);
        assert!(p.row(1)[1] > p.row(1)[0]);
        // single perfect stump, vote weight normalized to 1: softmax(1, 0)
        let e = std::f64::consts::E;
        assert!((p.row(0)[0] - e / (e + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn gini_prefers_purer_split() {
        // x<=1.5 and x<=3.5 both get 4 of 6 rows right by majority; the
        // first isolates class 0 and is purer
        let m = fm(
            (1..=6).map(|x| vec![x as f64]).collect(),
            vec![0, 1, 1, 2, 2, 1],
            3,
        );
        let w = vec![1.0 / 6.0; 6];
        let order: Vec<usize> = (0..6).collect();
        let totals = [1.0 / 6.0, 3.0 / 6.0, 2.0 / 6.0];
        let c = best_stump_for_feature(0, &order, m.rows(), m.labels(), &w, &totals);
        // per-side sum of squared masses over side mass, by hand:
        // x<=1.5: (1/36)/(1/6) + (13/36)/(5/6) = 0.6; x<=3.5: 2 * (5/36)/(1/2) = 0.556
        assert_eq!(
            c.stump,
            Stump {
                feature: 0,
                threshold: 1.5,
                left: 0,
                right: 1
            }
        );
        assert!((c.purity - 0.6).abs() < 1e-12);
    }

    #[test]
    fn multiclass_three_bands() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| i / 10).collect();
        let m = fm(rows.clone(), labels.clone(), 3);
        let model = train(
            ClassifierKind::AdaBoost,
            &m,
            &TrainParams {
                rounds: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(accuracy(&model.predict(&rows).unwrap(), &labels), 1.0);
        let ClassifierModel::AdaBoost(inner) = model else {
            unreachable!()
        };
        assert!(inner.alphas.iter().all(|a| a.is_finite() && *a > 0.0));
    }
}
