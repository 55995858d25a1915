//! Pipeline commands behind the `kfrs-select` binary.
//!
//! Every command that touches data runs the same preparation: load the CSV,
//! split it into train/test with the run seed, and z-score both parts with
//! statistics fitted on the training part only. Selection, comparison and
//! the oracle all optimize the criterion on the standardized training part.

pub mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kfrs_core::baselines::{self, CompareSpec, ComparisonTable};
use kfrs_core::dataset::{self, load_csv, synth_clusters, write_csv};
use kfrs_core::evaluation::{evaluate_subset, MetricsReport};
use kfrs_core::memetic::run_ma_with;
use kfrs_core::oracle::exhaustive_best_with_workers;
use kfrs_core::{Dataset, FeatureMask, KfrsFitness, SelectionResult, Termination};
use serde::Serialize;

pub use config::RunConfig;

pub const SELECTION_FILE: &str = "selection.json";
pub const RUNLOG_FILE: &str = "runlog.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const COMPARE_FILE: &str = "compare.csv";
pub const ORACLE_FILE: &str = "oracle.json";
pub const SYNTH_FILE: &str = "synth.csv";

/// Standardized train and test parts of the configured data file.
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let path = cfg.data_path()?;
    let raw = load_csv(path).with_context(|| format!("loading {}", path.display()))?;
    let (train, test) = dataset::split(&raw, cfg.train_fraction, cfg.seed)?;
    let params = dataset::zscore_fit(&train);
    Ok(Prepared {
        train: dataset::zscore_apply(&train, &params)?,
        test: dataset::zscore_apply(&test, &params)?,
    })
}

/// Writes through a temporary file in the target directory, then renames it
/// into place so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn selected_names(ds: &Dataset, mask: &FeatureMask) -> Vec<String> {
    mask.selected()
        .into_iter()
        .map(|j| ds.feature_names()[j].clone())
        .collect()
}

/// Contents of `selection.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub selected_features: Vec<String>,
    pub mask_hex: String,
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub terminated_by: Termination,
    pub generations: usize,
    pub total_evaluations: usize,
    pub seed: u64,
}

pub struct SelectOutcome {
    pub report: SelectionReport,
    pub result: SelectionResult,
    pub metrics: MetricsReport,
}

pub fn cmd_select(cfg: &RunConfig) -> Result<SelectOutcome> {
    let data = prepare(cfg)?;
    let fitness = KfrsFitness::new(&data.train, cfg.kernel)?.with_workers(cfg.workers)?;
    let result = run_ma_with(data.train.n_features(), &cfg.ma, &fitness)?;
    let metrics = evaluate_subset(&data.train, &data.test, &result.best_mask, cfg.k)?;

    let report = SelectionReport {
        selected_features: selected_names(&data.train, &result.best_mask),
        mask_hex: result.best_mask.to_hex(),
        best_mask: result.best_mask.clone(),
        best_fitness: result.best_fitness,
        terminated_by: result.terminated_by,
        generations: result.generations(),
        total_evaluations: result.total_evaluations,
        seed: cfg.seed,
    };
    write_json(&cfg.out.join(SELECTION_FILE), &report)?;
    write_atomic(&cfg.out.join(RUNLOG_FILE), |w| {
        result.log.write_jsonl(w, cfg.log_timing)?;
        Ok(())
    })?;
    write_json(&cfg.out.join(METRICS_FILE), &metrics)?;
    Ok(SelectOutcome {
        report,
        result,
        metrics,
    })
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<ComparisonTable> {
    let data = prepare(cfg)?;
    let cmp = &cfg.compare;
    if cmp.kinds.is_empty() {
        bail!("compare.kinds is empty");
    }
    let n = data.train.n_features();
    let reference_optimum = if cmp.oracle_certify && n <= cmp.certify_max_n {
        Some(exhaustive_best_with_workers(&data.train, &cfg.kernel, cmp.certify_max_n, cfg.workers)?.best_fitness)
    } else {
        None
    };
    let spec = CompareSpec {
        kinds: cmp.kinds.clone(),
        seeds: (0..cmp.runs as u64).map(|i| cfg.seed.wrapping_add(i)).collect(),
        ma: cfg.ma.clone(),
        baseline: cfg.baselines.clone(),
        reference_optimum,
        workers: cfg.workers,
    };
    let table = baselines::compare(&data.train, &cfg.kernel, &spec)?;
    write_atomic(&cfg.out.join(COMPARE_FILE), |w| Ok(table.write_csv(w)?))?;
    Ok(table)
}

/// Contents of `oracle.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub selected_features: Vec<String>,
    pub mask_hex: String,
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub evaluated: u64,
    pub runner_up_fitness: Option<f64>,
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let data = prepare(cfg)?;
    let r = exhaustive_best_with_workers(&data.train, &cfg.kernel, cfg.oracle.max_n, cfg.workers)?;
    let report = OracleReport {
        selected_features: selected_names(&data.train, &r.best_mask),
        mask_hex: r.best_mask.to_hex(),
        best_mask: r.best_mask,
        best_fitness: r.best_fitness,
        evaluated: r.evaluated,
        runner_up_fitness: r.runner_up_fitness,
    };
    write_json(&cfg.out.join(ORACLE_FILE), &report)?;
    Ok(report)
}

/// Writes a synthetic dataset to `csv`, or to `<out>/synth.csv`.
pub fn cmd_synth(cfg: &RunConfig, csv: Option<&Path>) -> Result<PathBuf> {
    let ds = synth_clusters(&cfg.synth, cfg.seed)?;
    let path = csv.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join(SYNTH_FILE));
    write_atomic(&path, |w| Ok(write_csv(&ds, w)?))?;
    Ok(path)
}

/// Parses a mask given as comma-separated feature names or hex bits.
///
/// Names win when every token names a feature; otherwise the text is read as
/// hex (bit i = feature i).
pub fn parse_mask(ds: &Dataset, text: &str) -> Result<FeatureMask> {
    let tokens: Vec<&str> = text.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let indices: Option<Vec<usize>> = tokens.iter().map(|t| ds.feature_index(t)).collect();
    let mask = match indices {
        Some(idx) if !idx.is_empty() => FeatureMask::from_indices(ds.n_features(), &idx),
        _ if tokens.len() == 1 => FeatureMask::parse_hex(tokens[0], ds.n_features())
            .with_context(|| format!("{text:?} is neither a list of feature names nor a hex mask"))?,
        _ => {
            let unknown: Vec<&str> = tokens.iter().copied().filter(|t| ds.feature_index(t).is_none()).collect();
            bail!("unknown feature name(s): {}", unknown.join(", "));
        }
    };
    if mask.none_selected() {
        bail!("mask {text:?} selects no features");
    }
    Ok(mask)
}

pub fn cmd_evaluate(cfg: &RunConfig, mask: &str) -> Result<MetricsReport> {
    let data = prepare(cfg)?;
    let mask = parse_mask(&data.train, mask)?;
    let report = evaluate_subset(&data.train, &data.test, &mask, cfg.k)?;
    write_json(&cfg.out.join(METRICS_FILE), &report)?;
    Ok(report)
}
