use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use vcfp::classic::{accuracy, train, ClassifierKind, FeatureMatrix, FeatureSpec};
use vcfp::defense::{defense_metrics, obfuscate_dataset, DefenseReport, ObfuscationParams};
use vcfp::eval::{
    closed_world_report, ensemble_combine, monitored_scores, normalize_weights, open_world_report,
    render_category_table, render_table, roc_sweep, EnsembleWeights, EvalReport, OpenWorldMetrics,
};
use vcfp::io::{
    export_tensors, import_probabilities, model_from_document, model_to_document, read_dataset,
    read_model, write_dataset, write_model, write_obfuscated, write_probabilities,
};
use vcfp::preprocess::{split_folds, Scaler, SplitPlan};
use vcfp::synthgen::generate_dataset;
use vcfp::trace::{dataset_stats, Dataset, SummaryStats};

use crate::config::{write_run_manifest, RunConfig};
use crate::plot::{learning_curve_svg, CurvePoint};
use crate::{
    AttackCommand, Cli, Command, DefendArgs, EncodeArgs, EnsembleArgs, EvaluateArgs, ExportArgs,
    FeaturesArg, GenerateArgs, Part, PredictArgs, PreprocessArgs, Selection, TrainArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.seed)?;
    fs::create_dir_all(&cli.out).map_err(vcfp::Error::from)?;
    let out = cli.out.as_path();
    let (name, cfg) = match cli.command {
        Command::Generate(a) => ("generate", generate(a, cfg, out)?),
        Command::Stats(a) => ("stats", stats(&a.input, cfg, out)?),
        Command::Preprocess(a) => ("preprocess", preprocess(a, cfg, out)?),
        Command::Attack(AttackCommand::Train(a)) => ("attack-train", attack_train(a, cfg, out)?),
        Command::Attack(AttackCommand::Predict(a)) => {
            ("attack-predict", attack_predict(a, cfg, out)?)
        }
        Command::Defend(a) => ("defend", defend(a, cfg, out)?),
        Command::Evaluate(a) => ("evaluate", evaluate(a, cfg, out)?),
        Command::ExportTensors(a) => ("export-tensors", export(a, cfg, out)?),
        Command::Ensemble(a) => ("ensemble", ensemble(a, cfg, out)?),
    };
    write_run_manifest(out, name, &cfg)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(vcfp::Error::from)?;
    fs::write(path, text + "\n")
        .map_err(vcfp::Error::from)
        .with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(vcfp::Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    let value = serde_json::from_str(&text)
        .map_err(vcfp::Error::from)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(value)
}

fn load(path: &Path) -> Result<Dataset> {
    read_dataset(path).with_context(|| format!("loading {}", path.display()))
}

fn indices(dataset: &Dataset, sel: &Selection) -> Result<Vec<usize>> {
    let Some(path) = &sel.split else {
        if sel.part != Part::All {
            bail!(vcfp::Error::Config("--part needs --split".into()));
        }
        return Ok((0..dataset.len()).collect());
    };
    let plan: SplitPlan = read_json(path)?;
    if plan.fold_of.len() != dataset.len() {
        bail!(vcfp::Error::Manifest(format!(
            "split covers {} traces, dataset has {}",
            plan.fold_of.len(),
            dataset.len()
        )));
    }
    let fold = plan.folds.get(sel.fold).ok_or_else(|| {
        vcfp::Error::Config(format!("fold {} not in 0..{}", sel.fold, plan.folds.len()))
    })?;
    let mut idx = match sel.part {
        Part::All => (0..dataset.len()).collect(),
        Part::Train => fold.train.clone(),
        Part::Validation => fold.validation.clone(),
        Part::TrainValidation => [fold.train.as_slice(), &fold.validation].concat(),
        Part::Test => fold.test.clone(),
    };
    idx.sort_unstable();
    Ok(idx)
}

fn apply_encode(cfg: &mut RunConfig, args: &EncodeArgs) {
    if let Some(f) = args.format {
        cfg.encode.format = f.into();
    }
    if let Some(k) = args.keep {
        cfg.encode.keep = k.into();
    }
    if let Some(l) = args.length {
        cfg.encode.length = l;
    }
}

fn feature_spec(f: FeaturesArg, keep: vcfp::preprocess::Keep) -> FeatureSpec {
    match f {
        FeaturesArg::Cumul => FeatureSpec::cumul(),
        FeaturesArg::Cns19 => FeatureSpec::cns19(),
    }
    .with_keep(keep)
}

fn generate(a: GenerateArgs, mut cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    let g = &mut cfg.generate;
    g.num_classes = a.classes.unwrap_or(g.num_classes);
    g.traces_per_class = a.traces_per_class.unwrap_or(g.traces_per_class);
    g.noise_level = a.noise.unwrap_or(g.noise_level);
    g.unmonitored_classes = a.unmonitored.unwrap_or(g.unmonitored_classes);
    let dataset = generate_dataset(&cfg.generate, cfg.epochs)?;
    let path = out.join(&a.name);
    write_dataset(&dataset, &path)?;
    println!(
        "wrote {} traces over {} classes to {}",
        dataset.len(),
        dataset.num_classes(),
        path.display()
    );
    Ok(cfg)
}

fn stats(input: &Path, cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    let dataset = load(input)?;
    let s = dataset_stats(&dataset, cfg.defense.burst_gap_threshold_ms)?;
    write_json(&out.join("stats.json"), &s)?;
    println!(
        "{} traces, {} classes, largest packet {} bytes",
        dataset.len(),
        dataset.num_classes(),
        s.max_abs_size
    );
    println!("class counts: {:?}", dataset.class_counts());
    Ok(cfg)
}

fn preprocess(a: PreprocessArgs, mut cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    apply_encode(&mut cfg, &a.encode);
    cfg.encode.validate()?;
    if let Some(k) = a.folds {
        cfg.folds = k;
    }
    let dataset = load(&a.input)?;
    let plan = split_folds(&dataset, cfg.folds, cfg.seed)?;
    let fold = plan
        .folds
        .get(a.fold)
        .ok_or_else(|| vcfp::Error::Config(format!("fold {} not in 0..{}", a.fold, cfg.folds)))?;
    let traces = dataset.traces();
    let scaler = cfg
        .encode
        .fit(fold.train.iter().map(|&i| &traces[i].trace))?;
    write_json(&out.join("split.json"), &plan)?;
    write_json(&out.join("scaler.json"), &scaler)?;
    println!(
        "{} folds; fold {}: {} train / {} validation / {} test",
        plan.fold_count,
        a.fold,
        fold.train.len(),
        fold.validation.len(),
        fold.test.len()
    );
    Ok(cfg)
}

fn attack_train(a: TrainArgs, cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    let dataset = load(&a.input)?;
    let idx = indices(&dataset, &a.selection)?;
    let spec = feature_spec(a.features, a.keep.into());
    let fm = FeatureMatrix::extract(&dataset, &idx, &spec)?;
    let kind: ClassifierKind = a.model.into();
    let model = train(kind, &fm, &cfg.train)?;
    let train_acc = accuracy(&model.predict(fm.rows())?, fm.labels());
    let doc = model_to_document(&model, &spec, &cfg.train);
    let path = out.join(&a.name);
    write_model(&doc, &path)?;
    println!(
        "{} on {}: {} rows, training accuracy {:.4}; wrote {}",
        kind.name(),
        spec.name(),
        fm.len(),
        train_acc,
        path.display()
    );
    Ok(cfg)
}

fn attack_predict(a: PredictArgs, cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    let dataset = load(&a.input)?;
    let doc = read_model(&a.model)?;
    let model = model_from_document(&doc)?;
    let idx = indices(&dataset, &a.selection)?;
    let fm = FeatureMatrix::extract(&dataset, &idx, &doc.feature_spec)?;
    let probs = model.predict_proba(fm.rows())?;
    let path = out.join(&a.name);
    write_probabilities(&path, &probs)?;
    println!(
        "{} rows x {} classes, accuracy {:.4}; wrote {}",
        probs.rows(),
        probs.classes(),
        accuracy(&probs.predictions(), fm.labels()),
        path.display()
    );
    Ok(cfg)
}

fn defend(a: DefendArgs, mut cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    if let Some(e) = a.epsilon {
        cfg.defense.epsilon = e;
    }
    let dataset = load(&a.input)?;
    let stats: SummaryStats = match &a.stats {
        Some(p) => read_json(p)?,
        None => dataset_stats(&dataset, cfg.defense.burst_gap_threshold_ms)?,
    };
    let d = &cfg.defense;
    let mut params = ObfuscationParams::new(d.epsilon, stats, cfg.seed);
    params.sensitivity = d.sensitivity;
    params.noise_mechanism = d.noise_mechanism.clone();
    params.min_wire_size = d.min_wire_size;
    params.max_wire_size = d.max_wire_size;
    params.adaptive_padding = d.adaptive_padding;
    params.validate()?;

    let obfuscated = obfuscate_dataset(&dataset, &params)?;
    let metrics = dataset
        .traces()
        .iter()
        .zip(&obfuscated)
        .map(|(t, o)| defense_metrics(&t.trace, o))
        .collect::<vcfp::Result<Vec<_>>>()?;
    let report = DefenseReport::aggregate(d.epsilon, &metrics);
    let path = out.join(&a.name);
    write_obfuscated(&dataset, &obfuscated, &path)?;
    write_json(&out.join("defense_report.json"), &report)?;
    println!("epsilon {}: {}", d.epsilon, report.table_row());
    Ok(cfg)
}

#[derive(Serialize)]
struct EvaluationOutput {
    closed_world: EvalReport,
    open_world: Option<OpenWorldMetrics>,
    roc: Vec<OpenWorldMetrics>,
    learning_curve: Vec<CurvePoint>,
}

fn evaluate(a: EvaluateArgs, cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    let dataset = load(&a.input)?;
    let idx = indices(&dataset, &a.selection)?;
    let probs = import_probabilities(&a.probs, idx.len(), dataset.num_classes())?;
    let labels: Vec<usize> = idx
        .iter()
        .map(|&i| dataset.traces()[i].command_id)
        .collect();
    let categories: Vec<_> = idx.iter().map(|&i| dataset.traces()[i].category).collect();
    let mut report = closed_world_report(&probs, &labels, Some(&categories))?;

    let monitored: Vec<bool> = idx.iter().map(|&i| dataset.traces()[i].monitored).collect();
    let (open_world, roc) = if monitored.iter().all(|&m| m) {
        (None, Vec::new())
    } else {
        let mut class_monitored = vec![false; dataset.num_classes()];
        for t in dataset.traces() {
            class_monitored[t.command_id] |= t.monitored;
        }
        let scores = monitored_scores(&probs, &class_monitored)?;
        let ow = open_world_report(&scores, &monitored, a.threshold)?;
        (Some(ow), roc_sweep(&scores, &monitored)?)
    };
    report.openworld = open_world;

    let mut curve = Vec::new();
    if let Some(plot) = &a.plot {
        curve = learning_curve(&dataset, &a, &cfg)?;
        let title = format!(
            "{} on {}",
            ClassifierKind::from(a.curve_model).name(),
            feature_spec(a.curve_features, cfg.encode.keep).name()
        );
        fs::write(plot, learning_curve_svg(&title, &curve))
            .map_err(vcfp::Error::from)
            .with_context(|| format!("writing {}", plot.display()))?;
    }

    print!("{}", render_table("Closed world", &[("model", &report)]));
    print!("{}", render_category_table(&[("model", &report)]));
    if let Some(ow) = &open_world {
        println!(
            "open world at {:.3}: TPR {:.4}, FPR {:.4} (TP {} FP {} TN {} FN {})",
            ow.threshold, ow.tpr, ow.fpr, ow.tp, ow.fp, ow.tn, ow.fn_
        );
    }
    write_json(
        &out.join("evaluation.json"),
        &EvaluationOutput {
            closed_world: report,
            open_world,
            roc,
            learning_curve: curve,
        },
    )?;
    Ok(cfg)
}

/// Test accuracy of a fresh model trained on the first `n` training traces of
/// each class, for every requested `n`.
fn learning_curve(dataset: &Dataset, a: &EvaluateArgs, cfg: &RunConfig) -> Result<Vec<CurvePoint>> {
    if a.selection.split.is_none() {
        bail!(vcfp::Error::Config(
            "--plot needs --split to separate training and test traces".into()
        ));
    }
    let train_sel = Selection {
        part: Part::TrainValidation,
        ..a.selection.clone()
    };
    let test_sel = Selection {
        part: Part::Test,
        ..a.selection.clone()
    };
    let pool = indices(dataset, &train_sel)?;
    let test = indices(dataset, &test_sel)?;
    let spec = feature_spec(a.curve_features, cfg.encode.keep);
    let test_fm = FeatureMatrix::extract(dataset, &test, &spec)?;
    let mut points = Vec::new();
    for &n in &a.curve_sizes {
        let mut taken = vec![0usize; dataset.num_classes()];
        let chosen: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| {
                let c = dataset.traces()[i].command_id;
                taken[c] += 1;
                taken[c] <= n
            })
            .collect();
        let fm = FeatureMatrix::extract(dataset, &chosen, &spec)?;
        let model = train(a.curve_model.into(), &fm, &cfg.train)?;
        points.push(CurvePoint {
            traces_per_class: n,
            accuracy: accuracy(&model.predict(test_fm.rows())?, test_fm.labels()),
        });
    }
    Ok(points)
}

fn export(a: ExportArgs, mut cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    apply_encode(&mut cfg, &a.encode);
    let dataset = load(&a.input)?;
    let idx = indices(&dataset, &a.selection)?;
    let scaler: Option<Scaler> = match &a.scaler {
        Some(p) => read_json(p)?,
        None => cfg
            .encode
            .fit(idx.iter().map(|&i| &dataset.traces()[i].trace))?,
    };
    let tensor = out.join(format!("{}.bin", a.name));
    let labels = out.join(format!("{}.labels.bin", a.name));
    export_tensors(
        &dataset,
        &idx,
        &cfg.encode,
        scaler.as_ref(),
        &tensor,
        &labels,
    )?;
    println!(
        "{} rows x {} columns; wrote {} and {}",
        idx.len(),
        cfg.encode.length,
        tensor.display(),
        labels.display()
    );
    Ok(cfg)
}

fn ensemble(a: EnsembleArgs, cfg: RunConfig, out: &Path) -> Result<RunConfig> {
    let labelled = match &a.input {
        Some(p) => {
            let d = load(p)?;
            let idx = indices(&d, &a.selection)?;
            Some((d, idx))
        }
        None => None,
    };
    let (n, k) = match &labelled {
        Some((d, idx)) => (idx.len(), d.num_classes()),
        None => probe_shape(&a.probs[0])?,
    };
    let matrices = a
        .probs
        .iter()
        .map(|p| import_probabilities(p, n, k).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let weights = if a.accuracies.is_empty() {
        EnsembleWeights::uniform(matrices.len())?
    } else {
        normalize_weights(&a.accuracies)?
    };
    let refs: Vec<_> = matrices.iter().collect();
    let (predictions, combined) = ensemble_combine(&refs, &weights)?;
    let path = out.join(&a.name);
    write_probabilities(&path, &combined)?;
    let shown: Vec<String> = weights
        .as_slice()
        .iter()
        .map(|w| format!("{w:.4}"))
        .collect();
    println!("weights [{}]", shown.join(", "));
    if let Some((d, idx)) = &labelled {
        let labels: Vec<usize> = idx.iter().map(|&i| d.traces()[i].command_id).collect();
        println!("ensemble accuracy {:.4}", accuracy(&predictions, &labels));
    }
    println!("wrote {}", path.display());
    Ok(cfg)
}

/// Row and class counts from a probability file's header and line count.
fn probe_shape(path: &Path) -> Result<(usize, usize)> {
    let text = fs::read_to_string(path)
        .map_err(vcfp::Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| vcfp::Error::Format(format!("{} is empty", path.display())))?;
    let classes = header.split(',').count().saturating_sub(1);
    Ok((lines.filter(|l| !l.trim().is_empty()).count(), classes))
}
