//! Exhaustive ground truth for small feature sets.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{self, KernelConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

pub const DEFAULT_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub evaluated: u64,
    /// Second-ranked fitness; absent when only one mask exists.
    pub runner_up_fitness: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    fitness: f64,
    popcount: u32,
    value: u64,
}

/// Higher fitness first, then fewer features, then the smaller integer.
fn rank(a: &Scored, b: &Scored) -> Ordering {
    b.fitness
        .total_cmp(&a.fitness)
        .then(a.popcount.cmp(&b.popcount))
        .then(a.value.cmp(&b.value))
}

#[derive(Debug, Clone, Copy, Default)]
struct Top2 {
    first: Option<Scored>,
    second: Option<Scored>,
    count: u64,
}

impl Top2 {
    fn push(mut self, s: Scored) -> Self {
        self.count += 1;
        match self.first {
            None => self.first = Some(s),
            Some(f) if rank(&s, &f) == Ordering::Less => {
                self.second = Some(f);
                self.first = Some(s);
            }
            _ => {
                if self.second.is_none_or(|sec| rank(&s, &sec) == Ordering::Less) {
                    self.second = Some(s);
                }
            }
        }
        self
    }

    fn merge(self, other: Top2) -> Top2 {
        let count = self.count + other.count;
        let mut out = [self.first, self.second, other.first, other.second]
            .into_iter()
            .flatten()
            .fold(Top2::default(), Top2::push);
        out.count = count;
        out
    }
}

/// Scores every non-empty mask and returns the best under the deterministic
/// tie-break (fewer features, then smaller integer value).
pub fn exhaustive_best(ds: &Dataset, kcfg: &KernelConfig, max_n: usize) -> Result<OracleResult> {
    exhaustive_best_with_workers(ds, kcfg, max_n, 1)
}

pub fn exhaustive_best_with_workers(
    ds: &Dataset,
    kcfg: &KernelConfig,
    max_n: usize,
    workers: usize,
) -> Result<OracleResult> {
    let n = ds.n_features();
    if n > max_n || n > 63 {
        return Err(Error::ExceedsMaxN { n, max_n });
    }
    kcfg.validate()?;
    let upper = 1u64 << n;
    let score = |value: u64| -> Scored {
        let mask = FeatureMask::from_u64(n, value);
        let fitness = criterion::gc(ds, &mask, kcfg).expect("width checked").gc;
        Scored {
            fitness,
            popcount: value.count_ones(),
            value,
        }
    };

    let top = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| {
            (1..upper)
                .into_par_iter()
                .fold(Top2::default, |acc, v| acc.push(score(v)))
                .reduce(Top2::default, Top2::merge)
        })
    } else {
        (1..upper).fold(Top2::default(), |acc, v| acc.push(score(v)))
    };

    let best = top.first.expect("at least one feature");
    Ok(OracleResult {
        best_mask: FeatureMask::from_u64(n, best.value),
        best_fitness: best.fitness,
        evaluated: top.count,
        runner_up_fitness: top.second.map(|s| s.fitness),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_clusters, SynthSpec};
    use ndarray::Array2;

    fn data(n_informative: usize, n_noise: usize, seed: u64) -> Dataset {
        synth_clusters(
            &SynthSpec {
                n_informative,
                n_noise,
                samples_per_class: 12,
                cluster_separation: 3.0,
                noise_std: 1.0,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn counts_every_non_empty_mask() {
        let r = exhaustive_best(&data(1, 2, 0), &KernelConfig::default(), 20).unwrap();
        assert_eq!(r.evaluated, 7);
        assert!(r.best_fitness >= r.runner_up_fitness.unwrap());
    }

    #[test]
    fn single_feature() {
        let ds = data(1, 0, 0);
        let r = exhaustive_best(&ds, &KernelConfig::default(), 20).unwrap();
        assert_eq!(r.best_mask, FeatureMask::full(1));
        assert_eq!(r.evaluated, 1);
        assert_eq!(r.runner_up_fitness, None);
        let gc = criterion::gc(&ds, &FeatureMask::full(1), &KernelConfig::default()).unwrap().gc;
        assert_eq!(r.best_fitness, gc);
    }

    #[test]
    fn guard_on_width() {
        let ds = data(2, 4, 0);
        assert!(matches!(
            exhaustive_best(&ds, &KernelConfig::default(), 5),
            Err(Error::ExceedsMaxN { n: 6, max_n: 5 })
        ));
    }

    #[test]
    fn ties_prefer_fewer_features_then_smaller_value() {
        // Duplicate columns: {0}, {1} and {0,1} all score the same.
        let col: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let samples = Array2::from_shape_fn((10, 2), |(i, _)| col[i]);
        let ds = Dataset::new(samples, (0..10).map(|i| (i % 2) as i64).collect(), vec!["a".into(), "b".into()])
            .unwrap();
        let kcfg = KernelConfig::default();
        let r = exhaustive_best(&ds, &kcfg, 20).unwrap();
        assert_eq!(r.best_mask, FeatureMask::from_indices(2, &[0]));
    }

    #[test]
    fn independent_of_parallelism() {
        let ds = data(2, 5, 4);
        let kcfg = KernelConfig::default();
        let a = exhaustive_best(&ds, &kcfg, 20).unwrap();
        let b = exhaustive_best_with_workers(&ds, &kcfg, 20, 4).unwrap();
        assert_eq!(a, b);
    }
}
