use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classic::{
    AdaBoostModel, ClassifierKind, ClassifierModel, FeatureSpec, LinearOvrModel, OneNnModel, Stump,
    TrainParams,
};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Serialized classifier. Every parameter is a flat list of decimal strings
/// so values round-trip exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub feature_spec: FeatureSpec,
    pub hyperparameters: TrainParams,
    pub num_classes: usize,
    pub num_features: usize,
    pub parameters: BTreeMap<String, Vec<String>>,
}

fn strs<T: ToString>(values: impl IntoIterator<Item = T>) -> Vec<String> {
    values.into_iter().map(|v| v.to_string()).collect()
}

fn floats<'a>(values: impl IntoIterator<Item = &'a f64>) -> Vec<String> {
    // `{:?}` keeps enough digits to reproduce the exact f64
    values.into_iter().map(|v| format!("{v:?}")).collect()
}

pub fn model_to_document(
    model: &ClassifierModel,
    feature_spec: &FeatureSpec,
    params: &TrainParams,
) -> ModelDocument {
    let mut p = BTreeMap::new();
    match model {
        ClassifierModel::AdaBoost(m) => {
            p.insert("feature".into(), strs(m.stumps.iter().map(|s| s.feature)));
            p.insert(
                "threshold".into(),
                floats(m.stumps.iter().map(|s| &s.threshold)),
            );
            p.insert("left".into(), strs(m.stumps.iter().map(|s| s.left)));
            p.insert("right".into(), strs(m.stumps.iter().map(|s| s.right)));
            p.insert("alpha".into(), floats(&m.alphas));
        }
        ClassifierModel::LinearOvr(m) => {
            p.insert("means".into(), floats(&m.means));
            p.insert("scales".into(), floats(&m.scales));
            p.insert("weights".into(), floats(m.weights.iter().flatten()));
            p.insert("biases".into(), floats(&m.biases));
        }
        ClassifierModel::OneNn(m) => {
            p.insert("rows".into(), floats(m.rows.iter().flatten()));
            p.insert("labels".into(), strs(&m.labels));
        }
    }
    ModelDocument {
        format_version: MODEL_FORMAT_VERSION,
        kind: model.kind(),
        feature_spec: *feature_spec,
        hyperparameters: params.clone(),
        num_classes: model.num_classes(),
        num_features: model.num_features(),
        parameters: p,
    }
}

struct Params<'a>(&'a BTreeMap<String, Vec<String>>);

impl Params<'_> {
    fn get<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self
            .0
            .get(key)
            .ok_or_else(|| Error::Format(format!("model is missing parameter `{key}`")))?;
        raw.iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Format(format!("parameter `{key}`: bad value `{s}`")))
            })
            .collect()
    }

    fn matrix(&self, key: &str, cols: usize) -> Result<Vec<Vec<f64>>> {
        let flat: Vec<f64> = self.get(key)?;
        if cols == 0 || !flat.len().is_multiple_of(cols) {
            return Err(Error::Format(format!(
                "parameter `{key}` has {} values, not a multiple of {cols}",
                flat.len()
            )));
        }
        Ok(flat.chunks(cols).map(<[f64]>::to_vec).collect())
    }
}

fn expect_len(key: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!(
            "parameter `{key}` has {found} values, expected {expected}"
        )));
    }
    Ok(())
}

pub fn model_from_document(doc: &ModelDocument) -> Result<ClassifierModel> {
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "model format version {} (expected {MODEL_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let (k, d) = (doc.num_classes, doc.num_features);
    let p = Params(&doc.parameters);
    let model = match doc.kind {
        ClassifierKind::AdaBoost => {
            let feature: Vec<usize> = p.get("feature")?;
            let threshold: Vec<f64> = p.get("threshold")?;
            let left: Vec<usize> = p.get("left")?;
            let right: Vec<usize> = p.get("right")?;
            let alphas: Vec<f64> = p.get("alpha")?;
            let n = feature.len();
            for (key, len) in [
                ("threshold", threshold.len()),
                ("left", left.len()),
                ("right", right.len()),
                ("alpha", alphas.len()),
            ] {
                expect_len(key, len, n)?;
            }
            let stumps = (0..n)
                .map(|i| Stump {
                    feature: feature[i],
                    threshold: threshold[i],
                    left: left[i],
                    right: right[i],
                })
                .collect::<Vec<_>>();
            if stumps
                .iter()
                .any(|s| s.feature >= d || s.left >= k || s.right >= k)
            {
                return Err(Error::Format("stump index out of range".into()));
            }
            ClassifierModel::AdaBoost(AdaBoostModel {
                num_classes: k,
                num_features: d,
                stumps,
                alphas,
            })
        }
        ClassifierKind::LinearOvr => {
            let means: Vec<f64> = p.get("means")?;
            let scales: Vec<f64> = p.get("scales")?;
            let biases: Vec<f64> = p.get("biases")?;
            let weights = p.matrix("weights", d)?;
            expect_len("means", means.len(), d)?;
            expect_len("scales", scales.len(), d)?;
            expect_len("biases", biases.len(), k)?;
            expect_len("weights", weights.len(), k)?;
            ClassifierModel::LinearOvr(LinearOvrModel {
                means,
                scales,
                weights,
                biases,
            })
        }
        ClassifierKind::OneNn => {
            let rows = p.matrix("rows", d)?;
            let labels: Vec<usize> = p.get("labels")?;
            expect_len("labels", labels.len(), rows.len())?;
            if labels.iter().any(|&l| l >= k) {
                return Err(Error::Format("label out of range".into()));
            }
            ClassifierModel::OneNn(OneNnModel {
                num_classes: k,
                rows,
                labels,
            })
        }
    };
    Ok(model)
}

pub fn write_model(doc: &ModelDocument, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelDocument> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
