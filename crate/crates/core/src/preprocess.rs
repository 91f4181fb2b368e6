//! Classifier inputs: direction/size encodings, min-max scaling, pad/trim and
//! stratified fold plans.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::trace::{Dataset, Direction, Trace};
use crate::{Error, Result};

/// Uniform vector length for bidirectional numeric inputs.
pub const DEFAULT_UNIFORM_LENGTH: usize = 475;
pub const DEFAULT_FOLDS: usize = 5;
/// Share of the non-test traces kept for validation (16 / 80).
pub const VALIDATION_SHARE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Binary,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keep {
    Incoming,
    Outgoing,
    Both,
}

/// Whether min-max scaling runs before or after zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeOrder {
    /// Padding zeros are scaled too and map to a fixed constant.
    #[default]
    AfterPad,
    /// Only packet values are scaled; padding stays 0.
    BeforePad,
}

/// Direction of every packet as ±1.
pub fn to_binary(trace: &Trace) -> Vec<i8> {
    trace.iter().map(|p| p.direction.sign()).collect()
}

/// `direction × size` for every packet.
pub fn to_numeric(trace: &Trace) -> Vec<i64> {
    trace.iter().map(|p| p.signed_size()).collect()
}

pub fn encode(trace: &Trace, format: Format) -> Vec<f64> {
    match format {
        Format::Binary => to_binary(trace).into_iter().map(f64::from).collect(),
        Format::Numeric => to_numeric(trace).into_iter().map(|v| v as f64).collect(),
    }
}

/// Keeps packets of the requested direction, preserving timestamps.
pub fn direction_filter(trace: &Trace, keep: Keep) -> Result<Trace> {
    let wanted = match keep {
        Keep::Both => return Ok(trace.clone()),
        Keep::Incoming => Direction::Incoming,
        Keep::Outgoing => Direction::Outgoing,
    };
    let packets: Vec<_> = trace
        .iter()
        .filter(|p| p.direction == wanted)
        .copied()
        .collect();
    if packets.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Trace::new(packets)
}

/// Zero-pads or truncates to exactly `len` values.
pub fn pad_trim(values: &[f64], len: usize) -> Vec<f64> {
    let mut out: Vec<f64> = values.iter().take(len).copied().collect();
    out.resize(len, 0.0);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: f64,
    pub max: f64,
}

impl Scaler {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if min < max && min.is_finite() && max.is_finite() {
            Ok(Scaler { min, max })
        } else {
            Err(Error::DegenerateScaler)
        }
    }

    pub fn apply_one(&self, v: f64) -> f64 {
        (2.0 * (v - self.min) / (self.max - self.min) - 1.0).clamp(-1.0, 1.0)
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply_one(v)).collect()
    }
}

/// Global min/max over all non-zero training values.
pub fn fit_minmax<'a, I>(vectors: I) -> Result<Scaler>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in vectors {
        for &x in v.iter().filter(|&&x| x != 0.0) {
            min = min.min(x);
            max = max.max(x);
        }
    }
    Scaler::new(min, max)
}

pub fn apply_minmax(scaler: &Scaler, values: &[f64]) -> Vec<f64> {
    scaler.apply(values)
}

/// Everything needed to turn a trace into one fixed-length classifier row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    pub format: Format,
    pub keep: Keep,
    pub length: usize,
    #[serde(default)]
    pub order: NormalizeOrder,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        EncodeConfig {
            format: Format::Numeric,
            keep: Keep::Both,
            length: DEFAULT_UNIFORM_LENGTH,
            order: NormalizeOrder::AfterPad,
        }
    }
}

impl EncodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Config("uniform length must be >= 1".into()));
        }
        Ok(())
    }

    /// Direction-filtered, unpadded encoding.
    pub fn raw(&self, trace: &Trace) -> Result<Vec<f64>> {
        Ok(encode(&direction_filter(trace, self.keep)?, self.format))
    }

    /// Scaler fitted on the raw encodings of `traces`; `None` for binary
    /// inputs, which are already in `[-1, 1]`.
    pub fn fit<'a, I>(&self, traces: I) -> Result<Option<Scaler>>
    where
        I: IntoIterator<Item = &'a Trace>,
    {
        if self.format == Format::Binary {
            return Ok(None);
        }
        let raws = traces
            .into_iter()
            .map(|t| self.raw(t))
            .collect::<Result<Vec<_>>>()?;
        fit_minmax(raws.iter().map(Vec::as_slice)).map(Some)
    }

    pub fn row(&self, trace: &Trace, scaler: Option<&Scaler>) -> Result<Vec<f64>> {
        let raw = self.raw(trace)?;
        Ok(match (scaler, self.order) {
            (None, _) => pad_trim(&raw, self.length),
            (Some(s), NormalizeOrder::AfterPad) => s.apply(&pad_trim(&raw, self.length)),
            (Some(s), NormalizeOrder::BeforePad) => pad_trim(&s.apply(&raw), self.length),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fold_count: usize,
    /// Test fold of every trace.
    pub fold_of: Vec<usize>,
    pub folds: Vec<Fold>,
}

/// Stratified k-fold plan. Each class is shuffled once under `seed`; its
/// traces are dealt round-robin into test folds, and within each fold the
/// remaining traces of the class are split 80/20 into train/validation.
pub fn split_folds(dataset: &Dataset, fold_count: usize, seed: u64) -> Result<SplitPlan> {
    if fold_count < 2 {
        return Err(Error::Config("fold_count must be >= 2".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes()];
    for (i, t) in dataset.traces().iter().enumerate() {
        by_class[t.command_id].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < fold_count {
            return Err(Error::TooFewTraces {
                class,
                found: members.len(),
                needed: fold_count,
            });
        }
    }

    let mut fold_of = vec![0; dataset.len()];
    let mut folds = vec![
        Fold {
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        fold_count
    ];
    for (class, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng::stream(seed, &[class as u64]));
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % fold_count;
        }
        for (f, fold) in folds.iter_mut().enumerate() {
            let rest: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| fold_of[i] != f)
                .collect();
            let n_val = (rest.len() as f64 * VALIDATION_SHARE).round() as usize;
            let n_val = n_val.min(rest.len().saturating_sub(1));
            // rotate so each fold validates on different traces
            let offset = if rest.is_empty() {
                0
            } else {
                (f * n_val) % rest.len()
            };
            for (k, &i) in rest.iter().enumerate() {
                let slot = (k + rest.len() - offset) % rest.len();
                if slot < n_val {
                    fold.validation.push(i);
                } else {
                    fold.train.push(i);
                }
            }
            fold.test
                .extend(members.iter().copied().filter(|&i| fold_of[i] == f));
        }
    }
    for fold in &mut folds {
        fold.train.sort_unstable();
        fold.validation.sort_unstable();
        fold.test.sort_unstable();
    }
    Ok(SplitPlan {
        fold_count,
        fold_of,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{CommandCategory, LabeledTrace, Manifest};

    fn worked_trace() -> Trace {
        Trace::from_tuples(&[(1, 20, 0.5), (1, 50, 2.1), (-1, 250, 5.3), (1, 100, 6.7)]).unwrap()
    }

    fn dataset(classes: usize, per_class: usize) -> Dataset {
        let traces = (0..classes)
            .flat_map(|c| {
                (0..per_class).map(move |i| {
                    let t = Trace::from_tuples(&[(1, 100 + i as u32, 0.0)]).unwrap();
                    LabeledTrace::new(t, c, CommandCategory::Single, 0, true).unwrap()
                })
            })
            .collect();
        Dataset::new(traces, classes, Manifest::new()).unwrap()
    }

    #[test]
    fn worked_example_encodings() {
        assert_eq!(to_binary(&worked_trace()), vec![1, 1, -1, 1]);
        assert_eq!(to_numeric(&worked_trace()), vec![20, 50, -250, 100]);
        let t = Trace::from_tuples(&[(-1, 1, 0.0)]).unwrap();
        assert_eq!(to_binary(&t), vec![-1]);
        assert_eq!(to_numeric(&t), vec![-1]);
    }

    #[test]
    fn scaler_fit_and_apply() {
        let s = fit_minmax([[20.0, 50.0, -250.0, 100.0].as_slice()]).unwrap();
        assert_eq!(
            s,
            Scaler {
                min: -250.0,
                max: 100.0
            }
        );
        assert!((s.apply_one(20.0) - 0.542_857_142_857).abs() < 1e-9);
        assert_eq!(s.apply_one(-250.0), -1.0);
        assert_eq!(s.apply_one(100.0), 1.0);
        assert_eq!(s.apply_one(200.0), 1.0);
        let id = fit_minmax([[-1.0, 1.0].as_slice()]).unwrap();
        assert_eq!(id.apply(&[-1.0, 0.5, 1.0]), vec![-1.0, 0.5, 1.0]);
    }

    #[test]
    fn scaler_ignores_padding_and_rejects_constants() {
        let s = fit_minmax([[5.0, 0.0, 9.0].as_slice()]).unwrap();
        assert_eq!((s.min, s.max), (5.0, 9.0));
        assert!(matches!(
            fit_minmax([[3.0, 3.0, 0.0].as_slice()]),
            Err(Error::DegenerateScaler)
        ));
        assert!(matches!(
            fit_minmax([[0.0].as_slice()]),
            Err(Error::DegenerateScaler)
        ));
    }

    #[test]
    fn pad_and_trim() {
        let v = [20.0, 50.0, -250.0, 100.0];
        assert_eq!(pad_trim(&v, 6), vec![20.0, 50.0, -250.0, 100.0, 0.0, 0.0]);
        assert_eq!(pad_trim(&v, 2), vec![20.0, 50.0]);
        assert_eq!(pad_trim(&[1.0, 1.0], 2), vec![1.0, 1.0]);
    }

    #[test]
    fn direction_filtering() {
        let inc = direction_filter(&worked_trace(), Keep::Incoming).unwrap();
        assert_eq!(inc, Trace::from_tuples(&[(-1, 250, 5.3)]).unwrap());
        assert_eq!(
            direction_filter(&worked_trace(), Keep::Both).unwrap(),
            worked_trace()
        );
        let out_only = Trace::from_tuples(&[(1, 10, 0.0), (1, 10, 1.0)]).unwrap();
        assert!(matches!(
            direction_filter(&out_only, Keep::Incoming),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn normalize_order_selectable() {
        let s = Scaler::new(-250.0, 100.0).unwrap();
        let after = EncodeConfig {
            length: 6,
            ..EncodeConfig::default()
        };
        let row = after.row(&worked_trace(), Some(&s)).unwrap();
        let expected = [0.542857, 0.714286, -1.0, 1.0, 0.428571, 0.428571];
        for (a, e) in row.iter().zip(expected) {
            assert!((a - e).abs() < 1e-6, "{row:?}");
        }
        let before = EncodeConfig {
            order: NormalizeOrder::BeforePad,
            ..after
        };
        let row = before.row(&worked_trace(), Some(&s)).unwrap();
        assert_eq!(&row[4..], &[0.0, 0.0]);
    }

    #[test]
    fn ten_by_ten_five_fold_counts() {
        let d = dataset(10, 10);
        let plan = split_folds(&d, 5, 3).unwrap();
        for fold in &plan.folds {
            assert_eq!(fold.test.len(), 20);
            for c in 0..10 {
                let count = |ix: &[usize]| {
                    ix.iter()
                        .filter(|&&i| d.traces()[i].command_id == c)
                        .count()
                };
                assert_eq!(count(&fold.test), 2);
                assert!((6..=7).contains(&count(&fold.train)));
                assert!((1..=2).contains(&count(&fold.validation)));
            }
            assert_eq!(
                fold.train.len() + fold.validation.len() + fold.test.len(),
                100
            );
        }
    }

    #[test]
    fn two_fold_minimum() {
        let d = dataset(3, 2);
        let plan = split_folds(&d, 2, 0).unwrap();
        for fold in &plan.folds {
            assert_eq!(fold.test.len(), 3);
        }
    }

    #[test]
    fn too_few_traces_names_class() {
        let mut traces = dataset(2, 5).traces().to_vec();
        traces.truncate(7);
        let d = Dataset::new(traces, 2, Manifest::new()).unwrap();
        match split_folds(&d, 5, 0) {
            Err(Error::TooFewTraces { class, found, .. }) => assert_eq!((class, found), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plans_deterministic() {
        let d = dataset(4, 9);
        assert_eq!(
            split_folds(&d, 3, 42).unwrap(),
            split_folds(&d, 3, 42).unwrap()
        );
        assert_ne!(
            split_folds(&d, 3, 42).unwrap(),
            split_folds(&d, 3, 43).unwrap()
        );
    }
}
