use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::criterion::{self, KernelConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

/// Fitness of the empty subset; strictly below the criterion's lower bound of -0.5.
pub const EMPTY_MASK_FITNESS: f64 = -1.0;

/// Objective maximized by every optimizer.
///
/// Implementations must be pure: the same mask always yields the same bits.
pub trait Fitness: Sync {
    fn evaluate(&self, mask: &FeatureMask) -> f64;

    fn evaluate_batch(&self, masks: &[FeatureMask]) -> Vec<f64> {
        masks.iter().map(|m| self.evaluate(m)).collect()
    }

    /// Number of fresh (uncached) objective computations so far.
    fn evaluations(&self) -> usize {
        0
    }
}

impl<F> Fitness for F
where
    F: Fn(&FeatureMask) -> f64 + Sync,
{
    fn evaluate(&self, mask: &FeatureMask) -> f64 {
        self(mask)
    }
}

/// Memoized separability criterion over one dataset.
///
/// Batches are deduplicated against the cache before any work is scheduled,
/// so the evaluation counter and every returned value are the same for any
/// worker count.
pub struct KfrsFitness<'a> {
    ds: &'a Dataset,
    cfg: KernelConfig,
    cache: Mutex<HashMap<FeatureMask, f64>>,
    evaluations: AtomicUsize,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl<'a> KfrsFitness<'a> {
    pub fn new(ds: &'a Dataset, cfg: KernelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            ds,
            cfg,
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicUsize::new(0),
            pool: None,
        })
    }

    /// Evaluates batches on `workers` threads (1 keeps everything on the caller).
    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            self.pool = Some(Arc::new(pool));
        }
        Ok(self)
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.cfg
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    fn compute(&self, mask: &FeatureMask) -> f64 {
        criterion::gc(self.ds, mask, &self.cfg)
            .expect("optimizer masks match the dataset width")
            .gc
    }
}

impl Fitness for KfrsFitness<'_> {
    fn evaluate(&self, mask: &FeatureMask) -> f64 {
        if mask.none_selected() {
            return EMPTY_MASK_FITNESS;
        }
        if let Some(&v) = self.cache.lock().unwrap().get(mask) {
            return v;
        }
        let v = self.compute(mask);
        let mut cache = self.cache.lock().unwrap();
        *cache.entry(mask.clone()).or_insert_with(|| {
            self.evaluations.fetch_add(1, Ordering::Relaxed);
            v
        })
    }

    fn evaluate_batch(&self, masks: &[FeatureMask]) -> Vec<f64> {
        let pending: Vec<FeatureMask> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = HashSet::new();
            masks
                .iter()
                .filter(|m| !m.none_selected() && !cache.contains_key(*m) && seen.insert(*m))
                .cloned()
                .collect()
        };
        if !pending.is_empty() {
            let values: Vec<f64> = match &self.pool {
                Some(pool) if pending.len() > 1 => {
                    pool.install(|| pending.par_iter().map(|m| self.compute(m)).collect())
                }
                _ => pending.iter().map(|m| self.compute(m)).collect(),
            };
            let mut cache = self.cache.lock().unwrap();
            for (m, v) in pending.into_iter().zip(values) {
                if cache.insert(m, v).is_none() {
                    self.evaluations.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
        let cache = self.cache.lock().unwrap();
        masks
            .iter()
            .map(|m| {
                if m.none_selected() {
                    EMPTY_MASK_FITNESS
                } else {
                    cache[m]
                }
            })
            .collect()
    }

    fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }
}

/// Batch evaluation with the empty-mask sentinel enforced regardless of the objective.
pub fn evaluate_guarded(fitness: &dyn Fitness, masks: &[FeatureMask]) -> Vec<f64> {
    let mut values = fitness.evaluate_batch(masks);
    for (v, m) in values.iter_mut().zip(masks) {
        if m.none_selected() {
            *v = EMPTY_MASK_FITNESS;
        }
    }
    values
}

/// One-shot fitness: the criterion for non-empty masks, the sentinel otherwise.
pub fn fitness(mask: &FeatureMask, ds: &Dataset, cfg: &KernelConfig) -> Result<f64> {
    if mask.none_selected() {
        return Ok(EMPTY_MASK_FITNESS);
    }
    Ok(criterion::gc(ds, mask, cfg)?.gc)
}
