//! Pipeline configuration: defaults, a JSON or key=value file, then flag overrides.

use std::path::Path;

use clap::Args;
use drawseg::graph::{feature_dim, ClassScheme};
use drawseg::nn::{ModelConfig, Preset, TrainConfig};
use drawseg::pipeline::VectorizeConfig;
use drawseg::skeleton::ThinningMethod;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub threshold: u16,
    pub method: ThinningMethod,
    pub max_spur_len: usize,
    pub spike_threshold: f64,
    pub merge_radius: f64,
    pub n: usize,
    pub scheme: ClassScheme,
    pub preset: String,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub split: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let v = VectorizeConfig::default();
        let t = TrainConfig::default();
        Self {
            threshold: v.threshold,
            method: v.method,
            max_spur_len: v.max_spur_len,
            spike_threshold: v.spike_threshold,
            merge_radius: v.merge_radius,
            n: v.n,
            scheme: ClassScheme::TextContourDimension,
            preset: Preset::Gs3.name().into(),
            learning_rate: t.learning_rate,
            weight_decay: t.weight_decay,
            max_epochs: t.max_epochs,
            batch_size: t.batch_size,
            split: t.split,
            seed: t.seed,
        }
    }
}

/// Help text listing every config key with its default.
pub fn keys_help() -> String {
    let defaults = serde_json::to_value(PipelineConfig::default()).expect("config serializes");
    let mut s = String::from(
        "Config keys (set in a --config file as JSON or key=value lines; flags of the same name override):\n",
    );
    if let serde_json::Value::Object(m) = defaults {
        let order = [
            "threshold", "method", "max_spur_len", "spike_threshold", "merge_radius", "n", "scheme", "preset",
            "learning_rate", "weight_decay", "max_epochs", "batch_size", "split", "seed",
        ];
        debug_assert_eq!(order.len(), m.len());
        for k in order {
            s.push_str(&format!("  {k:<16} default {}\n", m[k]));
        }
    }
    s
}

fn parse_file(text: &str) -> Result<serde_json::Map<String, serde_json::Value>, String> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    let mut m = serde_json::Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let v = v.trim();
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.into()));
        m.insert(k.trim().into(), value);
    }
    Ok(m)
}

/// Flags shared by commands that vectorize or train.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Config file, JSON object or key=value lines
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Binarization threshold; gray values below it are ink
    #[arg(long)]
    pub threshold: Option<u16>,
    /// Thinning method
    #[arg(long)]
    pub method: Option<String>,
    /// Longest skeleton spur removed, in pixels
    #[arg(long)]
    pub max_spur_len: Option<usize>,
    /// Corner split threshold on the second angle difference, in radians
    #[arg(long)]
    pub spike_threshold: Option<f64>,
    /// Terminal merge radius, in pixels
    #[arg(long)]
    pub merge_radius: Option<f64>,
    /// Samples per component
    #[arg(long)]
    pub n: Option<usize>,
    /// Label scheme: text_nontext or text_contour_dimension
    #[arg(long)]
    pub scheme: Option<String>,
    /// Model preset: gs3, gs4, gs5, gcn or mlp
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Graphs per optimization step
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Training fraction of the drawing-level split
    #[arg(long)]
    pub split: Option<f64>,
    /// Seed for the split, shuffling and weight initialization
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut map = match serde_json::to_value(PipelineConfig::default()).expect("config serializes") {
            serde_json::Value::Object(m) => m,
            _ => unreachable!(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file = parse_file(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            map.extend(file);
        }
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    map.insert(stringify!($f).into(), serde_json::json!(v));
                }
            )*};
        }
        set!(
            threshold, method, max_spur_len, spike_threshold, merge_radius, n, scheme, preset, learning_rate,
            weight_decay, max_epochs, batch_size, split, seed
        );
        let cfg: PipelineConfig =
            serde_json::from_value(map.into()).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.vectorize().validate()?;
        self.train().validate()?;
        self.preset()?;
        Ok(())
    }

    pub fn vectorize(&self) -> VectorizeConfig {
        VectorizeConfig {
            threshold: self.threshold,
            method: self.method,
            max_spur_len: self.max_spur_len,
            spike_threshold: self.spike_threshold,
            merge_radius: self.merge_radius,
            n: self.n,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            split: self.split,
            seed: self.seed,
        }
    }

    pub fn preset(&self) -> Result<Preset, CliError> {
        self.preset.parse().map_err(|e: drawseg::Error| CliError::Usage(e.to_string()))
    }

    pub fn model(&self) -> Result<ModelConfig, CliError> {
        Ok(self.preset()?.config(feature_dim(self.n), self.scheme.num_classes()))
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    drawseg::io::write_atomic(path, text.as_bytes()).map_err(CliError::from)
}
