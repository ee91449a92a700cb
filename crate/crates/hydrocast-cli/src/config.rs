//! Run configuration: a TOML file plus command-line overrides.
//!
//! Every value can live in the config file; every flag overrides the file;
//! built-in defaults fill the rest. A run is reproducible from the config
//! file and the seed alone.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use hydrocast::cluster::{ClusterParams, Preset};
use hydrocast::dataset::{parse_dataset, Dataset};
use hydrocast::eval::Method;
use hydrocast::neural::TrainConfig;
use hydrocast::synth::{generate_synthetic, SynthConfig};

/// The config-file schema. All keys optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
    pub preset: Option<String>,
    pub cluster: Option<ClusterSection>,
    pub methods: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub train: Option<TrainSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub min_pts: usize,
    pub eps: f64,
    pub cos_threshold: f64,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub cluster_epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub hidden_size: Option<usize>,
    pub window: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
    }
}

/// Where the series come from: a CSV on disk or a seeded generator.
#[derive(Debug)]
pub enum DataSource {
    Input(PathBuf),
    Synth(SynthConfig),
}

impl DataSource {
    /// Resolve flags against a config file. Exactly one of input/synth must
    /// come out.
    pub fn resolve(
        input_flag: Option<&Path>,
        synth_flag: Option<&Path>,
        file: &FileConfig,
        seed_override: Option<u64>,
    ) -> Result<Self> {
        let mut source = match (input_flag, synth_flag) {
            (Some(_), Some(_)) => bail!("--input and --synth are mutually exclusive"),
            (Some(path), None) => DataSource::Input(path.to_owned()),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read synth config {}", path.display()))?;
                let config: SynthConfig = toml::from_str(&text)
                    .with_context(|| format!("cannot parse {}", path.display()))?;
                DataSource::Synth(config)
            }
            (None, None) => match (&file.input, &file.synth) {
                (Some(_), Some(_)) => {
                    bail!("config file sets both `input` and `[synth]`; pick one")
                }
                (Some(path), None) => DataSource::Input(path.clone()),
                (None, Some(config)) => DataSource::Synth(config.clone()),
                (None, None) => bail!("no data source: pass --input PATH or --synth CFG"),
            },
        };
        if let (DataSource::Synth(config), Some(seed)) = (&mut source, seed_override) {
            config.seed = seed;
        }
        Ok(source)
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Input(path) => parse_dataset(path)
                .with_context(|| format!("cannot load dataset {}", path.display())),
            DataSource::Synth(config) => {
                generate_synthetic(config).context("cannot generate synthetic dataset")
            }
        }
    }
}

/// Resolve the clustering parameters: explicit flags beat the preset flag,
/// which beats the file's `[cluster]` section, which beats the file's
/// `preset` key.
pub fn resolve_cluster_params(
    preset_flag: Option<Preset>,
    explicit: Option<ClusterSection>,
    file: &FileConfig,
) -> Result<Option<(String, ClusterParams)>> {
    let section_to_params = |section: ClusterSection| -> Result<(String, ClusterParams)> {
        let params = ClusterParams::new(section.min_pts, section.eps, section.cos_threshold)
            .context("invalid cluster parameters")?;
        Ok(("custom".to_owned(), params))
    };
    if let Some(section) = explicit {
        return section_to_params(section).map(Some);
    }
    if let Some(preset) = preset_flag {
        return Ok(Some((preset.name().to_owned(), preset.params())));
    }
    if let Some(section) = file.cluster {
        return section_to_params(section).map(Some);
    }
    if let Some(name) = &file.preset {
        let preset: Preset = name.parse().map_err(anyhow::Error::msg)?;
        return Ok(Some((preset.name().to_owned(), preset.params())));
    }
    Ok(None)
}

/// Parse `--methods baseline,sarima,...`; `all` expands to every method.
pub fn resolve_methods(flag: Option<&str>, file: &FileConfig) -> Result<Vec<Method>> {
    let names: Vec<String> = match (flag, &file.methods) {
        (Some(list), _) => list.split(',').map(|s| s.trim().to_owned()).collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => vec!["all".to_owned()],
    };
    let mut methods = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            methods.extend(Method::ALL);
        } else {
            methods.push(name.parse().map_err(anyhow::Error::msg)?);
        }
    }
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        bail!("empty method list");
    }
    Ok(methods)
}

/// Apply the `[train]` section and derive the per-series / per-cluster
/// configs.
pub fn resolve_train(file: &FileConfig) -> (TrainConfig, TrainConfig) {
    let section = file.train.unwrap_or_default();
    let mut per_series = TrainConfig::per_series();
    if let Some(v) = section.epochs {
        per_series.epochs = v;
    }
    if let Some(v) = section.learning_rate {
        per_series.learning_rate = v;
    }
    if let Some(v) = section.beta1 {
        per_series.beta1 = v;
    }
    if let Some(v) = section.beta2 {
        per_series.beta2 = v;
    }
    if let Some(v) = section.epsilon {
        per_series.epsilon = v;
    }
    if let Some(v) = section.hidden_size {
        per_series.hidden_size = v;
    }
    if let Some(v) = section.window {
        per_series.window = v;
    }
    let mut per_cluster = TrainConfig {
        epochs: section.cluster_epochs.unwrap_or(TrainConfig::per_cluster().epochs),
        ..per_series
    };
    if let Some(v) = section.cluster_epochs {
        per_cluster.epochs = v;
    }
    (per_series, per_cluster)
}
