use std::path::Path;

use serde::{Deserialize, Serialize};
use vcfp::classic::TrainParams;
use vcfp::defense::{
    NoiseMechanism, DEFAULT_MAX_WIRE_SIZE, DEFAULT_MIN_WIRE_SIZE, DEFAULT_SENSITIVITY,
};
use vcfp::preprocess::{EncodeConfig, DEFAULT_FOLDS};
use vcfp::synthgen::GenConfig;
use vcfp::trace::DEFAULT_BURST_GAP_THRESHOLD_MS;

/// Pipeline settings read from `--config`. Missing sections take defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub generate: GenConfig,
    /// Time-sensitive epochs covered by a generated dataset.
    pub epochs: usize,
    pub encode: EncodeConfig,
    pub folds: usize,
    pub train: TrainParams,
    pub defense: DefenseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            generate: GenConfig::default(),
            epochs: 1,
            encode: EncodeConfig::default(),
            folds: DEFAULT_FOLDS,
            train: TrainParams::default(),
            defense: DefenseConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefenseConfig {
    pub epsilon: f64,
    pub sensitivity: f64,
    pub noise_mechanism: NoiseMechanism,
    pub min_wire_size: u32,
    pub max_wire_size: u32,
    pub adaptive_padding: bool,
    pub burst_gap_threshold_ms: f64,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            epsilon: 0.05,
            sensitivity: DEFAULT_SENSITIVITY,
            noise_mechanism: NoiseMechanism::default(),
            min_wire_size: DEFAULT_MIN_WIRE_SIZE,
            max_wire_size: DEFAULT_MAX_WIRE_SIZE,
            adaptive_padding: true,
            burst_gap_threshold_ms: DEFAULT_BURST_GAP_THRESHOLD_MS,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> vcfp::Result<Self> {
        let mut cfg: RunConfig = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.generate.seed = cfg.seed;
        cfg.train.seed = cfg.seed;
        Ok(cfg)
    }
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: &'a RunConfig,
}

pub fn write_run_manifest(out: &Path, command: &str, cfg: &RunConfig) -> vcfp::Result<()> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        args: std::env::args().skip(1).collect(),
        seed: cfg.seed,
        config: cfg,
    };
    let path = out.join(format!("run-{command}.json"));
    std::fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}
