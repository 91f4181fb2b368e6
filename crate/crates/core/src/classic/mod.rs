//! Non-deep-learning baselines behind one train/predict contract.
//!
//! CUMUL rows go to a linear one-vs-rest hinge classifier (a stand-in for the
//! kernel SVM of the original attack), CNS19 rows to multiclass AdaBoost over
//! decision stumps, and any row type to a 1-NN sanity classifier. Every model
//! emits class-probability rows so it can join a softmax ensemble.

mod adaboost;
mod features;
mod knn;
mod linear;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trace::Dataset;
use crate::{Error, Result};

pub use adaboost::{AdaBoostModel, Stump};
pub use features::{
    bursts, cns19_features, cumul_features, FeatureSpec, DEFAULT_CUMUL_POINTS, DEFAULT_MAX_BURSTS,
    DEFAULT_SIZE_BINS,
};
pub use knn::OneNnModel;
pub use linear::LinearOvrModel;

/// Row tolerance for probability rows.
pub const PROB_ROW_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
    pub feature_spec: String,
}

impl FeatureMatrix {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        num_classes: usize,
        feature_spec: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(first) = rows.first() {
            let d = first.len();
            if let Some(bad) = rows.iter().find(|r| r.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.len(),
                });
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Shape("features must be finite".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Shape(format!(
                "label {bad} not below {num_classes} classes"
            )));
        }
        Ok(FeatureMatrix {
            rows,
            labels,
            num_classes,
            feature_spec: feature_spec.into(),
        })
    }

    /// Feature rows of the selected traces of `dataset`.
    pub fn extract(dataset: &Dataset, indices: &[usize], spec: &FeatureSpec) -> Result<Self> {
        let traces = dataset.traces();
        let rows = indices
            .par_iter()
            .map(|&i| spec.extract(&traces[i].trace))
            .collect::<Result<Vec<_>>>()?;
        let labels = indices.iter().map(|&i| traces[i].command_id).collect();
        FeatureMatrix::new(rows, labels, dataset.num_classes(), spec.name())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// `rows × classes` matrix of per-row class distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbMatrix {
    rows: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ProbMatrix {
    pub fn new(rows: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * classes || classes == 0 {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{classes} matrix",
                data.len()
            )));
        }
        for r in 0..rows {
            let row = &data[r * classes..(r + 1) * classes];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > PROB_ROW_TOLERANCE {
                return Err(Error::RowSum { row: r, sum });
            }
        }
        Ok(ProbMatrix {
            rows,
            classes,
            data,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != classes) {
            return Err(Error::DimensionMismatch {
                expected: classes,
                found: bad.len(),
            });
        }
        let n = rows.len();
        ProbMatrix::new(n, classes, rows.into_iter().flatten().collect())
    }

    pub fn one_hot(labels: &[usize], classes: usize) -> Result<Self> {
        let mut data = vec![0.0; labels.len() * classes];
        for (r, &l) in labels.iter().enumerate() {
            if l >= classes {
                return Err(Error::Shape(format!("label {l} not below {classes}")));
            }
            data[r * classes + l] = 1.0;
        }
        ProbMatrix::new(labels.len(), classes, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.classes..(r + 1) * self.classes]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.classes)
    }

    /// Most probable class of row `r`; ties go to the lowest index.
    pub fn argmax(&self, r: usize) -> usize {
        argmax(self.row(r))
    }

    pub fn predictions(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.argmax(r)).collect()
    }
}

/// Index of the maximum; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    AdaBoost,
    LinearOvr,
    OneNn,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::AdaBoost => "adaboost",
            ClassifierKind::LinearOvr => "linear_ovr",
            ClassifierKind::OneNn => "one_nn",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    /// AdaBoost boosting rounds.
    pub rounds: usize,
    /// Linear model passes over the training set.
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty of the hinge objective.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            rounds: 200,
            epochs: 60,
            learning_rate: 0.05,
            lambda: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierModel {
    AdaBoost(AdaBoostModel),
    LinearOvr(LinearOvrModel),
    OneNn(OneNnModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::AdaBoost(_) => ClassifierKind::AdaBoost,
            ClassifierModel::LinearOvr(_) => ClassifierKind::LinearOvr,
            ClassifierModel::OneNn(_) => ClassifierKind::OneNn,
        }
    }

    pub fn num_features(&self) -> usize {
        match self {
            ClassifierModel::AdaBoost(m) => m.num_features,
            ClassifierModel::LinearOvr(m) => m.num_features(),
            ClassifierModel::OneNn(m) => m.num_features(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            ClassifierModel::AdaBoost(m) => m.num_classes,
            ClassifierModel::LinearOvr(m) => m.num_classes(),
            ClassifierModel::OneNn(m) => m.num_classes,
        }
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<ProbMatrix> {
        let d = self.num_features();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let probs: Vec<Vec<f64>> = rows
            .par_iter()
            .map(|r| match self {
                ClassifierModel::AdaBoost(m) => m.proba(r),
                ClassifierModel::LinearOvr(m) => m.proba(r),
                ClassifierModel::OneNn(m) => m.proba(r),
            })
            .collect();
        if probs.is_empty() {
            return ProbMatrix::new(0, self.num_classes(), Vec::new());
        }
        ProbMatrix::from_rows(probs)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(rows)?.predictions())
    }
}

/// Fits a model of `kind` on `fm`; deterministic for a fixed `params.seed`.
pub fn train(
    kind: ClassifierKind,
    fm: &FeatureMatrix,
    params: &TrainParams,
) -> Result<ClassifierModel> {
    let mut seen = vec![false; fm.num_classes()];
    for &l in fm.labels() {
        seen[l] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::SingleClass);
    }
    if fm.len() < fm.num_classes() {
        return Err(Error::Config(format!(
            "{} training rows for {} classes",
            fm.len(),
            fm.num_classes()
        )));
    }
    Ok(match kind {
        ClassifierKind::AdaBoost => {
            ClassifierModel::AdaBoost(AdaBoostModel::fit(fm, params.rounds))
        }
        ClassifierKind::LinearOvr => ClassifierModel::LinearOvr(LinearOvrModel::fit(fm, params)),
        ClassifierKind::OneNn => ClassifierModel::OneNn(OneNnModel::fit(fm)),
    })
}

/// Fraction of rows whose prediction equals the label.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    hits as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(super) fn fm(rows: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> FeatureMatrix {
        FeatureMatrix::new(rows, labels, classes, "test").unwrap()
    }

    #[test]
    fn prob_matrix_validation() {
        assert!(ProbMatrix::from_rows(vec![vec![0.5, 0.5]]).is_ok());
        assert!(matches!(
            ProbMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.4]]),
            Err(Error::RowSum { row: 1, .. })
        ));
        assert!(ProbMatrix::from_rows(vec![vec![1.2, -0.2]]).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.25; 4]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
    }

    #[test]
    fn single_class_rejected() {
        let m = fm(vec![vec![1.0], vec![2.0]], vec![0, 0], 2);
        for kind in [
            ClassifierKind::AdaBoost,
            ClassifierKind::LinearOvr,
            ClassifierKind::OneNn,
        ] {
            assert!(matches!(
                train(kind, &m, &TrainParams::default()),
                Err(Error::SingleClass)
            ));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = fm(vec![vec![1.0, 0.0], vec![2.0, 1.0]], vec![0, 1], 2);
        let model = train(ClassifierKind::OneNn, &m, &TrainParams::default()).unwrap();
        assert!(matches!(
            model.predict_proba(&[vec![1.0]]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn ragged_features_rejected() {
        assert!(FeatureMatrix::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], 2, "x").is_err());
        assert!(FeatureMatrix::new(vec![vec![f64::NAN]], vec![0], 1, "x").is_err());
    }
}
