//! Closed-world and open-world reports and the softmax ensemble.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classic::{argmax, ProbMatrix};
use crate::trace::CommandCategory;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenWorldMetrics {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub total: usize,
    pub per_fold_accuracies: Vec<f64>,
    /// Population variance of the per-fold accuracies.
    pub fold_variance: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_category_accuracy: BTreeMap<CommandCategory, f64>,
    /// `(correct, total)` per category, kept so folds can be pooled.
    pub category_counts: BTreeMap<CommandCategory, (usize, usize)>,
    pub openworld: Option<OpenWorldMetrics>,
}

impl EvalReport {
    fn from_confusion(
        confusion: Vec<Vec<usize>>,
        category_counts: BTreeMap<CommandCategory, (usize, usize)>,
    ) -> Self {
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..confusion.len()).map(|c| confusion[c][c]).sum();
        let accuracy = if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        };
        EvalReport {
            accuracy,
            total,
            per_fold_accuracies: vec![accuracy],
            fold_variance: 0.0,
            confusion,
            per_category_accuracy: category_counts
                .iter()
                .map(|(&c, &(hit, n))| (c, hit as f64 / n as f64))
                .collect(),
            category_counts,
            openworld: None,
        }
    }

    /// Pools the confusion matrices of per-fold reports and records the
    /// fold accuracies and their variance.
    pub fn combine_folds(folds: &[EvalReport]) -> Result<Self> {
        let first = folds.first().ok_or(Error::EmptyDataset)?;
        let k = first.confusion.len();
        let mut confusion = vec![vec![0; k]; k];
        let mut counts: BTreeMap<CommandCategory, (usize, usize)> = BTreeMap::new();
        for report in folds {
            if report.confusion.len() != k {
                return Err(Error::Shape("folds disagree on class count".into()));
            }
            for (row, other) in confusion.iter_mut().zip(&report.confusion) {
                for (a, b) in row.iter_mut().zip(other) {
                    *a += b;
                }
            }
            for (&c, &(hit, n)) in &report.category_counts {
                let e = counts.entry(c).or_default();
                e.0 += hit;
                e.1 += n;
            }
        }
        let mut pooled = EvalReport::from_confusion(confusion, counts);
        pooled.set_folds(folds.iter().map(|f| f.accuracy).collect());
        Ok(pooled)
    }

    pub fn set_folds(&mut self, accuracies: Vec<f64>) {
        let n = accuracies.len().max(1) as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        self.fold_variance = accuracies
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        self.per_fold_accuracies = accuracies;
    }

    pub fn trace_accuracy(&self) -> f64 {
        let total: usize = self.confusion.iter().flatten().sum();
        let diag: usize = (0..self.confusion.len())
            .map(|c| self.confusion[c][c])
            .sum();
        diag as f64 / total as f64
    }
}

/// Argmax predictions scored against `labels`; categories, when given,
/// add a per-category breakdown.
pub fn closed_world_report(
    probs: &ProbMatrix,
    labels: &[usize],
    categories: Option<&[CommandCategory]>,
) -> Result<EvalReport> {
    if probs.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: probs.rows(),
        });
    }
    if let Some(c) = categories {
        if c.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: c.len(),
            });
        }
    }
    let k = probs.classes();
    let mut confusion = vec![vec![0; k]; k];
    let mut hits: BTreeMap<CommandCategory, (usize, usize)> = BTreeMap::new();
    for (r, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::Shape(format!("label {label} not below {k} classes")));
        }
        let pred = probs.argmax(r);
        confusion[label][pred] += 1;
        if let Some(c) = categories {
            let e = hits.entry(c[r]).or_default();
            e.0 += usize::from(pred == label);
            e.1 += 1;
        }
    }
    Ok(EvalReport::from_confusion(confusion, hits))
}

/// Monitored iff `score >= threshold`.
pub fn open_world_report(
    scores: &[f64],
    monitored: &[bool],
    threshold: f64,
) -> Result<OpenWorldMetrics> {
    if scores.len() != monitored.len() {
        return Err(Error::DimensionMismatch {
            expected: monitored.len(),
            found: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Shape(format!("score {bad} outside [0, 1]")));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &m) in scores.iter().zip(monitored) {
        match (s >= threshold, m) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    if tp + fn_ == 0 || fp + tn == 0 {
        return Err(Error::Shape(
            "open-world evaluation needs monitored and unmonitored rows".into(),
        ));
    }
    Ok(OpenWorldMetrics {
        threshold,
        tp,
        fp,
        tn,
        fn_,
        accuracy: (tp + tn) as f64 / scores.len() as f64,
        tpr: tp as f64 / (tp + fn_) as f64,
        fpr: fp as f64 / (fp + tn) as f64,
    })
}

/// Operating points at every distinct score plus one above the maximum.
pub fn roc_sweep(scores: &[f64], monitored: &[bool]) -> Result<Vec<OpenWorldMetrics>> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    thresholds
        .into_iter()
        .map(|t| open_world_report(scores, monitored, t))
        .collect()
}

/// Open-world score of a multiclass model: the largest probability among
/// monitored classes.
pub fn monitored_scores(probs: &ProbMatrix, monitored_classes: &[bool]) -> Result<Vec<f64>> {
    if monitored_classes.len() != probs.classes() {
        return Err(Error::DimensionMismatch {
            expected: probs.classes(),
            found: monitored_classes.len(),
        });
    }
    Ok(probs
        .iter_rows()
        .map(|row| {
            row.iter()
                .zip(monitored_classes)
                .filter(|(_, &m)| m)
                .map(|(&p, _)| p)
                .fold(0.0, f64::max)
                .min(1.0)
        })
        .collect())
}

/// Open-world score of a binary model: the probability of `positive_class`.
pub fn binary_scores(probs: &ProbMatrix, positive_class: usize) -> Result<Vec<f64>> {
    if positive_class >= probs.classes() {
        return Err(Error::Shape(format!("no class {positive_class}")));
    }
    Ok(probs
        .iter_rows()
        .map(|r| r[positive_class].min(1.0))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnsembleWeights(Vec<f64>);

impl EnsembleWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty()
            || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "ensemble weights must be non-negative and sum to 1, got {weights:?}"
            )));
        }
        Ok(EnsembleWeights(weights))
    }

    /// Equal weights, the average ensemble.
    pub fn uniform(k: usize) -> Result<Self> {
        EnsembleWeights::new(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `w_i = acc_i / Σ acc`.
pub fn normalize_weights(validation_accuracies: &[f64]) -> Result<EnsembleWeights> {
    if validation_accuracies
        .iter()
        .any(|a| !(a.is_finite() && *a >= 0.0))
    {
        return Err(Error::Config(
            "validation accuracies must be finite and >= 0".into(),
        ));
    }
    let total: f64 = validation_accuracies.iter().sum();
    if total <= 0.0 {
        return Err(Error::Config("validation accuracies are all zero".into()));
    }
    EnsembleWeights::new(validation_accuracies.iter().map(|a| a / total).collect())
}

/// Weighted sum of probability rows, then argmax (lowest index on ties).
pub fn ensemble_combine(
    matrices: &[&ProbMatrix],
    weights: &EnsembleWeights,
) -> Result<(Vec<usize>, ProbMatrix)> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Shape("ensemble needs at least one model".into()))?;
    if matrices.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} models but {} weights",
            matrices.len(),
            weights.len()
        )));
    }
    let (rows, classes) = (first.rows(), first.classes());
    if let Some(bad) = matrices
        .iter()
        .find(|m| m.rows() != rows || m.classes() != classes)
    {
        return Err(Error::Shape(format!(
            "expected {rows}x{classes}, found {}x{}",
            bad.rows(),
            bad.classes()
        )));
    }
    let mut data = vec![0.0; rows * classes];
    for (m, &w) in matrices.iter().zip(weights.as_slice()) {
        for r in 0..rows {
            for (acc, &p) in data[r * classes..(r + 1) * classes]
                .iter_mut()
                .zip(m.row(r))
            {
                *acc += w * p;
            }
        }
    }
    let predictions = data.chunks(classes).map(argmax).collect();
    Ok((predictions, ProbMatrix::new(rows, classes, data)?))
}

/// Plain-text table with one row per model: accuracy and fold variance.
pub fn render_table(title: &str, rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{:<width$} | {:>9} | {:>9}",
        "Model", "Accuracy", "Variance"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 26));
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>8.2}% | {:>9.2e}",
            name,
            100.0 * r.accuracy,
            r.fold_variance
        );
    }
    out
}

/// Per-category accuracy table, one column per category.
pub fn render_category_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "Model");
    for c in CommandCategory::ALL {
        let _ = write!(out, " | {:>14}", c.name());
    }
    out.push('\n');
    for (name, r) in rows {
        let _ = write!(out, "{name:<width$}");
        for c in CommandCategory::ALL {
            match r.per_category_accuracy.get(&c) {
                Some(a) => {
                    let _ = write!(out, " | {:>13.2}%", 100.0 * a);
                }
                None => {
                    let _ = write!(out, " | {:>14}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: Vec<Vec<f64>>) -> ProbMatrix {
        ProbMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn perfect_one_hot() {
        let labels = vec![0, 2, 1, 2];
        let r =
            closed_world_report(&ProbMatrix::one_hot(&labels, 3).unwrap(), &labels, None).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(
            r.confusion,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]
        );
    }

    #[test]
    fn half_right() {
        let p = pm(vec![vec![0.6, 0.4], vec![0.3, 0.7]]);
        let r = closed_world_report(&p, &[1, 1], None).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.accuracy, r.trace_accuracy());
    }

    #[test]
    fn uniform_rows_predict_class_zero() {
        let p = pm(vec![vec![0.25; 4]; 3]);
        assert_eq!(p.predictions(), vec![0, 0, 0]);
        let r = closed_world_report(&p, &[0, 1, 3], None).unwrap();
        assert_eq!(r.confusion[1][0], 1);
        assert_eq!(r.confusion[3][0], 1);
    }

    #[test]
    fn per_category_breakdown() {
        use CommandCategory::*;
        let p = pm(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = closed_world_report(&p, &[0, 1, 1], Some(&[Single, Multiple, Multiple])).unwrap();
        assert_eq!(r.per_category_accuracy[&Single], 1.0);
        assert_eq!(r.per_category_accuracy[&Multiple], 0.5);
        assert!(!r.per_category_accuracy.contains_key(&TimeSensitive));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(closed_world_report(&pm(vec![vec![1.0]]), &[0, 0], None).is_err());
    }

    #[test]
    fn open_world_examples() {
        let m = open_world_report(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!((m.accuracy, m.tpr, m.fpr), (1.0, 1.0, 0.0));
        let m = open_world_report(&[0.9, 0.8, 0.2, 0.1], &[true, false, true, false], 0.5).unwrap();
        assert_eq!((m.accuracy, m.tpr, m.fpr), (0.5, 0.5, 0.5));
        let m = open_world_report(&[0.9, 0.8, 0.2, 0.1], &[true, false, true, false], 0.0).unwrap();
        assert_eq!((m.tpr, m.fpr), (1.0, 1.0));
        assert!(open_world_report(&[0.9], &[true], 0.5).is_err());
        assert!(open_world_report(&[1.5, 0.1], &[true, false], 0.5).is_err());
    }

    #[test]
    fn roc_endpoints() {
        let s = [0.9, 0.8, 0.2, 0.1];
        let f = [true, false, true, false];
        let roc = roc_sweep(&s, &f).unwrap();
        assert_eq!((roc[0].tpr, roc[0].fpr), (1.0, 1.0));
        let last = roc.last().unwrap();
        assert_eq!((last.tpr, last.fpr), (0.0, 0.0));
    }

    #[test]
    fn monitored_score_modes() {
        let p = pm(vec![vec![0.2, 0.5, 0.3]]);
        assert_eq!(
            monitored_scores(&p, &[true, false, true]).unwrap(),
            vec![0.3]
        );
        assert_eq!(binary_scores(&p, 1).unwrap(), vec![0.5]);
    }

    #[test]
    fn weights_from_validation_accuracy() {
        let w = normalize_weights(&[89.05, 88.65, 75.98]).unwrap();
        let rounded: Vec<f64> = w
            .as_slice()
            .iter()
            .map(|x| (x * 1e4).round() / 1e4)
            .collect();
        // 89.05 / 253.68 = 0.351033..
        assert_eq!(rounded, vec![0.3510, 0.3495, 0.2995]);
        let two: Vec<f64> = w
            .as_slice()
            .iter()
            .map(|x| (x * 100.0).round() / 100.0)
            .collect();
        assert_eq!(two, vec![0.35, 0.35, 0.30]);
        let w = normalize_weights(&[1.0, 1.0, 1.0]).unwrap();
        assert!(w.as_slice().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(
            normalize_weights(&[1.0, 0.0]).unwrap().as_slice(),
            &[1.0, 0.0]
        );
        assert!(normalize_weights(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn two_model_average() {
        let a = pm(vec![vec![0.6, 0.4]]);
        let b = pm(vec![vec![0.1, 0.9]]);
        let (pred, combined) =
            ensemble_combine(&[&a, &b], &EnsembleWeights::uniform(2).unwrap()).unwrap();
        assert_eq!(pred, vec![1]);
        assert!((combined.row(0)[0] - 0.35).abs() < 1e-12);
        assert!((combined.row(0)[1] - 0.65).abs() < 1e-12);
    }

    #[test]
    fn single_model_identity_and_shape_checks() {
        let a = pm(vec![vec![0.6, 0.4], vec![0.2, 0.8]]);
        let (pred, _) = ensemble_combine(&[&a], &EnsembleWeights::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(pred, a.predictions());
        let b = pm(vec![vec![0.6, 0.4]]);
        assert!(ensemble_combine(&[&a, &b], &EnsembleWeights::uniform(2).unwrap()).is_err());
        assert!(ensemble_combine(&[&a], &EnsembleWeights::uniform(2).unwrap()).is_err());
    }

    #[test]
    fn fold_pooling() {
        let labels = vec![0, 1];
        let cats = [CommandCategory::Single; 2];
        let good = closed_world_report(
            &ProbMatrix::one_hot(&labels, 2).unwrap(),
            &labels,
            Some(&cats),
        )
        .unwrap();
        let bad = closed_world_report(
            &ProbMatrix::one_hot(&[1, 0], 2).unwrap(),
            &labels,
            Some(&cats),
        )
        .unwrap();
        let pooled = EvalReport::combine_folds(&[good, bad]).unwrap();
        assert_eq!(pooled.accuracy, 0.5);
        assert_eq!(pooled.per_fold_accuracies, vec![1.0, 0.0]);
        assert_eq!(pooled.fold_variance, 0.25);
        assert_eq!(pooled.per_category_accuracy[&CommandCategory::Single], 0.5);
    }

    #[test]
    fn table_rendering() {
        let labels = vec![0, 1];
        let r =
            closed_world_report(&ProbMatrix::one_hot(&labels, 2).unwrap(), &labels, None).unwrap();
        let t = render_table("Closed world", &[("CUMUL", &r)]);
        assert!(t.contains("CUMUL"));
        assert!(t.contains("100.00%"));
    }
}
