use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Appended to the names of ground-truth informative columns.
pub const INFORMATIVE_SUFFIX: &str = "!inf";

/// Two-class Gaussian benchmark layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_informative: usize,
    pub n_noise: usize,
    pub samples_per_class: usize,
    /// Distance between the class means along each informative axis.
    pub cluster_separation: f64,
    pub noise_std: f64,
}

impl SynthSpec {
    /// 3 informative + 7 noise columns, 100 samples per class, separation 6.
    pub fn standard_benchmark() -> Self {
        Self {
            n_informative: 3,
            n_noise: 7,
            samples_per_class: 100,
            cluster_separation: 6.0,
            noise_std: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_informative < 1 {
            return Err(Error::InvalidConfig("n_informative must be >= 1".into()));
        }
        if self.samples_per_class < 1 {
            return Err(Error::InvalidConfig("samples_per_class must be >= 1".into()));
        }
        if !(self.cluster_separation >= 0.0 && self.cluster_separation.is_finite()) {
            return Err(Error::InvalidConfig("cluster_separation must be >= 0".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
        }
        Ok(())
    }
}

/// Draws a two-class dataset (labels -1 then +1). Informative columns have
/// class means `±separation/2` and spread `noise_std`; noise columns are
/// standard normal. Column order is shuffled by `seed`, and informative
/// columns carry [`INFORMATIVE_SUFFIX`] in their names.
pub fn synth_clusters(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_features = spec.n_informative + spec.n_noise;
    let n_rows = 2 * spec.samples_per_class;

    let mut order: Vec<usize> = (0..n_features).collect();
    order.shuffle(&mut rng);

    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let half = spec.cluster_separation / 2.0;
    let mut samples = Array2::zeros((n_rows, n_features));
    let mut labels = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let label: i64 = if r < spec.samples_per_class { -1 } else { 1 };
        labels.push(label);
        for (source, &target) in order.iter().enumerate() {
            let z: f64 = std_normal.sample(&mut rng);
            samples[[r, target]] = if source < spec.n_informative {
                label as f64 * half + spec.noise_std * z
            } else {
                z
            };
        }
    }
    let mut names: Vec<String> = (0..n_features).map(|j| format!("f{j}")).collect();
    for &target in &order[..spec.n_informative] {
        names[target].push_str(INFORMATIVE_SUFFIX);
    }
    Dataset::new(samples, labels, names)
}
