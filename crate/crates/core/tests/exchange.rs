use std::path::Path;

use tempfile::tempdir;
use vcfp::classic::{ProbMatrix, PROB_ROW_TOLERANCE};
use vcfp::eval::{ensemble_combine, normalize_weights};
use vcfp::io::{
    export_tensors, import_probabilities, manifest_path, read_dataset, read_labels,
    read_tensor_file, write_dataset, DatasetManifest,
};
use vcfp::preprocess::{EncodeConfig, Format, Keep, NormalizeOrder, Scaler};
use vcfp::synthgen::{generate_dataset, GenConfig};
use vcfp::trace::{CommandCategory, Dataset, LabeledTrace, Manifest, Trace};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn worked_dataset() -> Dataset {
    let traces = [
        Trace::from_tuples(&[(1, 20, 0.5), (1, 50, 2.1), (-1, 250, 5.3), (1, 100, 6.7)]).unwrap(),
        Trace::from_tuples(&[(-1, 40, 0.0), (1, 60, 1.0)]).unwrap(),
    ];
    let labeled = traces
        .into_iter()
        .enumerate()
        .map(|(i, t)| LabeledTrace::new(t, i, CommandCategory::Single, 0, true).unwrap())
        .collect();
    Dataset::new(labeled, 2, Manifest::new()).unwrap()
}

#[test]
fn generated_dataset_round_trip_keeps_counts() {
    let cfg = GenConfig {
        num_classes: 10,
        traces_per_class: 50,
        seed: 8,
        ..GenConfig::default()
    };
    let d = generate_dataset(&cfg, 2).unwrap();
    assert_eq!(d.len(), 500);
    let dir = tempdir().unwrap();
    let path = dir.path().join("gen.jsonl");
    write_dataset(&d, &path).unwrap();
    let manifest: DatasetManifest =
        serde_json::from_str(&std::fs::read_to_string(manifest_path(&path)).unwrap()).unwrap();
    assert_eq!(manifest.trace_count, 500);
    assert_eq!(manifest.class_counts, vec![50; 10]);
    let back = read_dataset(&path).unwrap();
    assert_eq!(back.class_counts(), vec![50; 10]);
    assert_eq!(back.traces(), d.traces());
    assert_eq!(back.manifest, d.manifest);
}

#[test]
fn binary_export_shape() {
    let dir = tempdir().unwrap();
    let (x, y) = (dir.path().join("x.bin"), dir.path().join("y.bin"));
    let cfg = EncodeConfig {
        format: Format::Binary,
        keep: Keep::Both,
        length: 4,
        order: NormalizeOrder::AfterPad,
    };
    export_tensors(&worked_dataset(), &[0, 1], &cfg, None, &x, &y).unwrap();
    let bytes = std::fs::read(&x).unwrap();
    assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 4);
    assert_eq!(bytes.len() - 16, 32);
    let t = read_tensor_file(&x).unwrap();
    assert_eq!(t.row(0), &[1.0, 1.0, -1.0, 1.0]);
    assert_eq!(t.row(1), &[-1.0, 1.0, 0.0, 0.0]);
    assert_eq!(read_labels(&y).unwrap(), vec![0, 1]);

    let (x2, y2) = (dir.path().join("x2.bin"), dir.path().join("y2.bin"));
    export_tensors(&worked_dataset(), &[0, 1], &cfg, None, &x2, &y2).unwrap();
    assert_eq!(std::fs::read(&x2).unwrap(), bytes);
    assert_eq!(std::fs::read(&y2).unwrap(), std::fs::read(&y).unwrap());
}

#[test]
fn numeric_export_scales_padding_too() {
    let dir = tempdir().unwrap();
    let (x, y) = (dir.path().join("x.bin"), dir.path().join("y.bin"));
    let cfg = EncodeConfig {
        format: Format::Numeric,
        keep: Keep::Both,
        length: 6,
        order: NormalizeOrder::AfterPad,
    };
    let scaler = Scaler::new(-250.0, 100.0).unwrap();
    export_tensors(&worked_dataset(), &[0], &cfg, Some(&scaler), &x, &y).unwrap();
    let oracle: Vec<f32> = [20.0, 50.0, -250.0, 100.0, 0.0, 0.0]
        .iter()
        .map(|v: &f64| (2.0 * (v + 250.0) / 350.0 - 1.0) as f32)
        .collect();
    let got = read_tensor_file(&x).unwrap();
    assert_eq!(got.row(0), oracle.as_slice());
    let rounded: Vec<f64> = got
        .row(0)
        .iter()
        .map(|&v| (f64::from(v) * 1e4).round() / 1e4)
        .collect();
    assert_eq!(rounded, vec![0.5429, 0.7143, -1.0, 1.0, 0.4286, 0.4286]);
}

#[test]
fn degenerate_scaler_rejected() {
    assert!(Scaler::new(3.0, 3.0).is_err());
    let cfg = EncodeConfig::default();
    let t = Trace::from_tuples(&[(1, 7, 0.0)]).unwrap();
    assert!(cfg.fit([&t]).is_err());
}

#[test]
fn external_probabilities_combine_with_classic_rows() {
    // float32 softmax output, rows off by up to ~2e-7
    let dl = import_probabilities(&fixture("dl_toy_probs.csv"), 12, 10).unwrap();
    for row in dl.iter_rows() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(dl.predictions(), vec![7, 1, 3, 4, 4, 5, 6, 9, 8, 3, 3, 1]);

    let labels: Vec<usize> = (0..12).map(|i| i % 10).collect();
    let classic = ProbMatrix::one_hot(&labels, 10).unwrap();
    let w = normalize_weights(&[0.4, 0.6]).unwrap();
    let (pred, combined) = ensemble_combine(&[&dl, &classic], &w).unwrap();
    assert_eq!(pred, labels);
    for row in combined.iter_rows() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < PROB_ROW_TOLERANCE);
    }
}

#[test]
fn external_probabilities_checked_for_shape() {
    assert!(import_probabilities(&fixture("dl_toy_probs.csv"), 11, 10).is_err());
    assert!(import_probabilities(&fixture("dl_toy_probs.csv"), 12, 9).is_err());
}
