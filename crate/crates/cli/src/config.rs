//! Run configuration: TOML files with `include`, named presets, and
//! `section.key=value` overrides, resolved into one [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use cnml_core::datagen::{AugmentConfig, FilterMode, MineConfig, OracleBudget, PairGenConfig};
use cnml_neural::{ProbeConfig, TrainConfig};

pub const CONFIG_ENV: &str = "CNML_CONFIG";

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchConfig {
    pub batch_size: usize,
    /// `none`, `oracle`, or `sampled:<cells>`.
    pub filter: String,
    pub oracle: OracleBudget,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { batch_size: 32, filter: "oracle".into(), oracle: OracleBudget::default() }
    }
}

impl BatchConfig {
    pub fn filter_mode(&self) -> Result<FilterMode, ConfigError> {
        self.filter.parse().map_err(ConfigError)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinetuneConfig {
    /// Size of the balanced labeled set.
    pub pairs: usize,
    pub test_fraction: f64,
    pub probe: ProbeConfig,
    pub oracle: OracleBudget,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig { pairs: 2000, test_fraction: 0.2, probe: ProbeConfig::default(), oracle: OracleBudget::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub wl_iterations: usize,
    /// Include the text and graph baselines on intra-modal sets.
    pub baselines: bool,
    pub random_seed: u64,
    pub histogram_bins: usize,
    /// Rows of the similarity heatmap.
    pub heatmap_size: usize,
    /// Labeled pairs drawn for the similarity report.
    pub report_pairs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            wl_iterations: 3,
            baselines: true,
            random_seed: 0,
            histogram_bins: 40,
            heatmap_size: 32,
            report_pairs: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub generation: PairGenConfig,
    pub augmentation: AugmentConfig,
    pub batching: BatchConfig,
    pub mining: MineConfig,
    pub training: TrainConfig,
    pub finetune: FinetuneConfig,
    pub evaluation: EvalConfig,
    pub check: OracleBudget,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 1,
            generation: PairGenConfig::default(),
            augmentation: AugmentConfig::default(),
            batching: BatchConfig::default(),
            mining: MineConfig::default(),
            training: TrainConfig::desk(),
            finetune: FinetuneConfig::default(),
            evaluation: EvalConfig::default(),
            check: OracleBudget::default(),
        }
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "desk" => Ok(RunConfig::default()),
            "paper-scale" => {
                let training = TrainConfig::paper_scale();
                Ok(RunConfig {
                    batching: BatchConfig { batch_size: training.batch_size, ..BatchConfig::default() },
                    training,
                    ..RunConfig::default()
                })
            }
            _ => Err(ConfigError(format!("unknown preset `{name}` (desk, paper-scale)"))),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Where the configuration comes from, in increasing priority.
#[derive(Clone, Debug, Default)]
pub struct Sources {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    pub overrides: Vec<String>,
}

pub fn resolve(src: &Sources) -> Result<RunConfig, ConfigError> {
    let mut merged = Value::try_from(RunConfig::preset(src.preset.as_deref().unwrap_or("desk"))?)
        .map_err(|e| ConfigError(e.to_string()))?;
    if let Some(path) = &src.file {
        let mut stack = Vec::new();
        let file = load_with_includes(path, &mut stack)?;
        merge(&mut merged, Value::Table(file));
    }
    for o in &src.overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| ConfigError(format!("override `{o}` is not key=value")))?;
        let value = parse_scalar(raw.trim());
        set_path(&mut merged, key.trim(), value)?;
    }
    let config: RunConfig = merged.try_into().map_err(|e: toml::de::Error| ConfigError(e.message().to_string()))?;
    validate(&config)?;
    Ok(config)
}

pub fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    c.generation.validate().map_err(|e| ConfigError(format!("generation: {e}")))?;
    c.training.validate().map_err(|e| ConfigError(format!("training: {e}")))?;
    c.batching.filter_mode()?;
    if c.batching.batch_size == 0 {
        return Err(ConfigError("batching.batch_size must be positive".into()));
    }
    if c.workers == 0 {
        return Err(ConfigError("workers must be positive".into()));
    }
    if !(0.0..1.0).contains(&c.finetune.test_fraction) {
        return Err(ConfigError("finetune.test_fraction must lie in [0, 1)".into()));
    }
    if c.evaluation.histogram_bins == 0 {
        return Err(ConfigError("evaluation.histogram_bins must be positive".into()));
    }
    Ok(())
}

/// `include = ["a.toml", ...]` paths are relative to the including file;
/// the including file wins over what it includes.
fn load_with_includes(path: &Path, stack: &mut Vec<PathBuf>) -> Result<Table, ConfigError> {
    let canon = fs::canonicalize(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if stack.contains(&canon) {
        return Err(ConfigError(format!("{}: include cycle", path.display())));
    }
    let text = fs::read_to_string(&canon).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError(format!("{}: {e}", path.display())))?;
    let includes = match table.remove("include") {
        None => vec![],
        Some(Value::String(s)) => vec![s],
        Some(Value::Array(a)) => a
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                _ => Err(ConfigError(format!("{}: include entries must be strings", path.display()))),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(ConfigError(format!("{}: include must be a string or list", path.display()))),
    };
    stack.push(canon.clone());
    let dir = canon.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut base = Value::Table(Table::new());
    for inc in includes {
        merge(&mut base, Value::Table(load_with_includes(&dir.join(inc), stack)?));
    }
    stack.pop();
    merge(&mut base, Value::Table(table));
    match base {
        Value::Table(t) => Ok(t),
        _ => unreachable!(),
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// A TOML literal when it parses as one, otherwise a bare string.
fn parse_scalar(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for (k, part) in parts.iter().enumerate() {
        let Value::Table(t) = cur else {
            return Err(ConfigError(format!("`{}` is not a section", parts[..k].join("."))));
        };
        if k + 1 == parts.len() {
            t.insert(part.to_string(), value);
            return Ok(());
        }
        cur = t.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
    }
    Err(ConfigError("empty override key".into()))
}

/// Writes the resolved configuration next to an output artifact.
pub fn write_snapshot(artifact: &Path, config: &RunConfig) -> std::io::Result<PathBuf> {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.toml");
    let path = artifact.with_file_name(name);
    fs::write(&path, config.to_toml())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_snapshot_round_trips() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let p = RunConfig::preset("paper-scale").unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn paper_scale_preset_values() {
        let t = RunConfig::preset("paper-scale").unwrap().training;
        assert_eq!((t.lr, t.beta1, t.beta2, t.weight_decay), (2e-4, 0.9, 0.999, 0.01));
        assert_eq!((t.warmup_steps, t.batch_size, t.accumulation), (12_000, 128, 2));
        assert_eq!((t.lambda, t.tau, t.model.encoder.d_proj), (0.25, 0.07, 1024));
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let src = Sources {
            overrides: vec!["training.lr=0.5".into(), "batching.filter=none".into(), "seed=9".into()],
            ..Sources::default()
        };
        let c = resolve(&src).unwrap();
        assert_eq!((c.training.lr, c.batching.filter.as_str(), c.seed), (0.5, "none", 9));
        let bad = Sources { overrides: vec!["training.bogus=1".into()], ..Sources::default() };
        assert!(resolve(&bad).is_err());
        let bad = Sources { overrides: vec!["generation.count=0".into()], ..Sources::default() };
        assert!(resolve(&bad).is_err());
    }

    #[test]
    fn includes_merge_with_priority() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("base.toml"), "seed = 4\n[training]\nlr = 0.1\nbatch_size = 8\n").unwrap();
        fs::write(dir.path().join("run.toml"), "include = \"base.toml\"\n[training]\nlr = 0.2\n").unwrap();
        let src = Sources { file: Some(dir.path().join("run.toml")), ..Sources::default() };
        let c = resolve(&src).unwrap();
        assert_eq!((c.seed, c.training.lr, c.training.batch_size), (4, 0.2, 8));
        fs::write(dir.path().join("loop.toml"), "include = \"loop.toml\"\n").unwrap();
        let src = Sources { file: Some(dir.path().join("loop.toml")), ..Sources::default() };
        assert!(resolve(&src).unwrap_err().0.contains("cycle"));
    }
}
