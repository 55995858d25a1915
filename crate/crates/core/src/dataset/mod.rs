//! Labelled sample matrices: CSV loading, z-score standardization, random
//! train/test splitting and synthetic benchmark generation.

mod catalog;
mod io;
mod synth;

use std::collections::{BTreeSet, HashSet};

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{catalog, CatalogEntry, FeatureCatalog};
pub use io::{load_csv, read_csv, write_csv};
pub use synth::{synth_clusters, SynthSpec, INFORMATIVE_SUFFIX};

/// Standard deviations below this are treated as zero.
pub const MIN_STD: f64 = 1e-12;

/// An immutable classification dataset: `|U|` rows by `N` feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Array2<f64>,
    labels: Vec<i64>,
    feature_names: Vec<String>,
    class_ids: Vec<i64>,
}

impl Dataset {
    pub fn new(samples: Array2<f64>, labels: Vec<i64>, feature_names: Vec<String>) -> Result<Self> {
        if labels.len() != samples.nrows() {
            return Err(Error::DimensionMismatch {
                expected: samples.nrows(),
                found: labels.len(),
            });
        }
        if feature_names.len() != samples.ncols() {
            return Err(Error::DimensionMismatch {
                expected: samples.ncols(),
                found: feature_names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeatureName(name.clone()));
            }
        }
        if let Some(((row, column), _)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, column });
        }
        let class_ids: Vec<i64> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        if class_ids.len() < 2 {
            return Err(Error::TooFewClasses {
                found: class_ids.len(),
            });
        }
        Ok(Self {
            samples,
            labels,
            feature_names,
            class_ids,
        })
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.samples.row(i)
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Sorted distinct labels.
    pub fn class_ids(&self) -> &[i64] {
        &self.class_ids
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.samples.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_ids.len()
    }

    /// Position of `class` within [`Dataset::class_ids`].
    pub fn class_index(&self, class: i64) -> Option<usize> {
        self.class_ids.binary_search(&class).ok()
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.samples.select(Axis(0), indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.feature_names.clone(),
        )
    }

    /// Indices of features whose name is flagged with [`INFORMATIVE_SUFFIX`].
    pub fn informative_features(&self) -> Vec<usize> {
        self.feature_names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.ends_with(INFORMATIVE_SUFFIX).then_some(i))
            .collect()
    }

    /// Looks up a feature by exact name, falling back to the name without the
    /// informative suffix.
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name).or_else(|| {
            self.feature_names
                .iter()
                .position(|n| n.strip_suffix(INFORMATIVE_SUFFIX) == Some(name))
        })
    }
}

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn zscore_fit(ds: &Dataset) -> StandardizationParams {
    let n = ds.n_samples() as f64;
    let mut means = Vec::with_capacity(ds.n_features());
    let mut stds = Vec::with_capacity(ds.n_features());
    for col in ds.samples.columns() {
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    StandardizationParams { means, stds }
}

pub fn zscore_apply(ds: &Dataset, p: &StandardizationParams) -> Result<Dataset> {
    let n = ds.n_features();
    if p.means.len() != n || p.stds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.means.len().min(p.stds.len()),
        });
    }
    let mut samples = ds.samples.clone();
    for (j, mut col) in samples.columns_mut().into_iter().enumerate() {
        let (mean, std) = (p.means[j], p.stds[j]);
        if std < MIN_STD {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|x| (x - mean) / std);
        }
    }
    Ok(Dataset {
        samples,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        class_ids: ds.class_ids.clone(),
    })
}

const SPLIT_ATTEMPTS: usize = 100;

/// Random partition of row indices; both parts sorted ascending.
pub fn split_indices(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    let n = ds.n_samples();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..SPLIT_ATTEMPTS {
        perm.shuffle(&mut rng);
        let (train, test) = perm.split_at(n_train);
        let covers = |part: &[usize]| {
            let present: BTreeSet<i64> = part.iter().map(|&i| ds.labels[i]).collect();
            present.len() == ds.class_ids.len()
        };
        if covers(train) && covers(test) {
            let mut train = train.to_vec();
            let mut test = test.to_vec();
            train.sort_unstable();
            test.sort_unstable();
            return Ok((train, test));
        }
    }
    Err(Error::SplitInfeasible {
        attempts: SPLIT_ATTEMPTS,
    })
}

pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, train_fraction, seed)?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}
