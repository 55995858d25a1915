//! Run configuration: defaults, then a JSON file, then command-line overrides.
//!
//! Keys are addressed by dotted paths (`ma.np`, `kernel.delta`). A config file
//! may use flat dotted keys, nested objects, or a mix of both. Every key must
//! already exist in the default tree, so typos are rejected instead of
//! silently ignored.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use kfrs_core::baselines::{BaselineConfig, OptimizerKind};
use kfrs_core::evaluation::DEFAULT_K;
use kfrs_core::oracle::DEFAULT_MAX_N;
use kfrs_core::{KernelConfig, MAConfig, SynthSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub kinds: Vec<OptimizerKind>,
    /// Seeds `seed, seed + 1, ..., seed + runs - 1`.
    pub runs: usize,
    /// Use the exhaustive optimum as the success reference when the feature
    /// count is at most `certify_max_n`.
    pub oracle_certify: bool,
    pub certify_max_n: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            kinds: vec![OptimizerKind::Ma, OptimizerKind::Bde, OptimizerKind::Ga, OptimizerKind::Bpso],
            runs: 20,
            oracle_certify: true,
            certify_max_n: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub max_n: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { max_n: DEFAULT_MAX_N }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub train_fraction: f64,
    /// Drives the split and every optimizer; `ma.seed` and `baselines.seed`
    /// are overwritten with it.
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    /// Neighbours used by the k-NN evaluation.
    pub k: usize,
    /// Include wall-clock `elapsed_ms` in the run log (breaks byte-identity).
    pub log_timing: bool,
    pub kernel: KernelConfig,
    pub ma: MAConfig,
    pub baselines: BaselineConfig,
    pub compare: CompareSection,
    pub oracle: OracleSection,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            train_fraction: 0.66,
            seed: 0,
            out: PathBuf::from("out"),
            workers: 1,
            k: DEFAULT_K,
            log_timing: false,
            kernel: KernelConfig::default(),
            ma: MAConfig::default(),
            baselines: BaselineConfig::default(),
            compare: CompareSection::default(),
            oracle: OracleSection::default(),
            synth: SynthSpec::standard_benchmark(),
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid with `file` (if any), overlaid with `overrides`
    /// (`key=value` pairs, applied in order).
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut tree = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let doc: Value =
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            let Value::Object(doc) = doc else {
                bail!("config {} must be a JSON object", path.display());
            };
            merge_object(&mut tree, "", doc)?;
        }
        for (key, raw) in overrides {
            set_path(&mut tree, key, |current| parse_override(current, raw))?;
        }
        let mut cfg: RunConfig = serde_json::from_value(tree).context("invalid configuration")?;
        cfg.sync_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    fn sync_seeds(&mut self) {
        self.ma.seed = self.seed;
        self.baselines.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1), got {}", self.train_fraction);
        }
        if self.workers == 0 {
            bail!("workers must be >= 1");
        }
        if self.k == 0 {
            bail!("k must be >= 1");
        }
        self.kernel.validate()?;
        self.ma.validate()?;
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| anyhow!("no data file given (use --data or the `data` key)"))
    }
}

fn merge_object(tree: &mut Value, prefix: &str, doc: Map<String, Value>) -> Result<()> {
    for (key, value) in doc {
        let path = if prefix.is_empty() {
            key
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            Value::Object(inner) if lookup(tree, &path).is_some_and(Value::is_object) => {
                merge_object(tree, &path, inner)?
            }
            v => set_path(tree, &path, |_| Ok(v))?,
        }
    }
    Ok(())
}

fn lookup<'a>(tree: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(tree, |node, seg| node.get(seg))
}

fn set_path(tree: &mut Value, path: &str, make: impl FnOnce(&Value) -> Result<Value>) -> Result<()> {
    let mut node = tree;
    for seg in path.split('.') {
        node = node
            .as_object_mut()
            .and_then(|obj| obj.get_mut(seg))
            .ok_or_else(|| anyhow!("unknown configuration key `{path}`"))?;
    }
    *node = make(node)?;
    Ok(())
}

/// Strings and paths take the raw text; everything else is read as JSON.
fn parse_override(current: &Value, raw: &str) -> Result<Value> {
    match current {
        Value::String(_) | Value::Null => Ok(Value::String(raw.to_string())),
        Value::Array(_) if !raw.trim_start().starts_with('[') => Ok(Value::Array(
            raw.split(',')
                .map(|s| Value::String(s.trim().to_string()))
                .collect(),
        )),
        _ => serde_json::from_str(raw).map_err(|e| anyhow!("bad value {raw:?}: {e}")),
    }
}

/// `(key, raw value)` pairs in the order given.
pub type Overrides = Vec<(String, String)>;

/// Splits `--a.b=v`, `--a.b v` and `--set key=v` out of an argument list.
/// Returns the remaining arguments and the collected overrides.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--set" {
            let kv = it.next().ok_or_else(|| anyhow!("--set needs KEY=VALUE"))?;
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set needs KEY=VALUE, got {kv:?}"))?;
            overrides.push((k.to_string(), v.to_string()));
            continue;
        }
        let Some(body) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (body, None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| anyhow!("--{key} needs a value"))?,
        };
        overrides.push((key.to_string(), value));
    }
    Ok((rest, overrides))
}
