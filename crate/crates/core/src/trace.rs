use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::fitness::Fitness;
use crate::mask::FeatureMask;

/// One line of an optimizer's fitness curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub g: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub sigma_sq: f64,
    /// Scale factor in effect; `None` for optimizers without one.
    pub f_g: Option<f64>,
    /// Crossover rate in effect; `None` for optimizers without one.
    pub cr_g: Option<f64>,
    pub best_mask: FeatureMask,
    pub evaluations_so_far: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub generations: Vec<GenerationRecord>,
}

impl RunLog {
    /// JSON lines, one record per generation. Without `with_timing` the
    /// wall-clock field is dropped so that seeded runs are byte-identical.
    pub fn write_jsonl<W: Write>(&self, mut out: W, with_timing: bool) -> std::io::Result<()> {
        for rec in &self.generations {
            let mut value = serde_json::to_value(rec).map_err(std::io::Error::other)?;
            if !with_timing {
                if let Some(obj) = value.as_object_mut() {
                    obj.remove("elapsed_ms");
                }
            }
            serde_json::to_writer(&mut out, &value).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GenerationLimit,
    FitnessStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub log: RunLog,
    pub terminated_by: Termination,
    pub total_evaluations: usize,
}

impl SelectionResult {
    pub fn generations(&self) -> usize {
        self.log.len()
    }
}

/// Best-so-far bookkeeping and termination shared by all optimizers.
pub(crate) struct Tracker {
    start: Instant,
    best_mask: FeatureMask,
    best_fitness: f64,
    fitness_stop: f64,
    log: RunLog,
}

impl Tracker {
    pub(crate) fn new(pop: &[FeatureMask], fit: &[f64], fitness_stop: f64) -> Self {
        let i = argmax(fit);
        Self {
            start: Instant::now(),
            best_mask: pop[i].clone(),
            best_fitness: fit[i],
            fitness_stop,
            log: RunLog::default(),
        }
    }

    /// Adopts the population's best when it strictly beats the best so far.
    pub(crate) fn observe(&mut self, pop: &[FeatureMask], fit: &[f64]) {
        let i = argmax(fit);
        if fit[i] > self.best_fitness {
            self.best_fitness = fit[i];
            self.best_mask = pop[i].clone();
        }
    }

    /// Logs generation `g`; returns true when the stop threshold is exceeded.
    pub(crate) fn record(
        &mut self,
        g: usize,
        sigma_sq: f64,
        f_g: Option<f64>,
        cr_g: Option<f64>,
        fit: &[f64],
        evaluations: usize,
    ) -> bool {
        self.log.generations.push(GenerationRecord {
            g,
            best_fitness: self.best_fitness,
            mean_fitness: fit.iter().sum::<f64>() / fit.len() as f64,
            sigma_sq,
            f_g,
            cr_g,
            best_mask: self.best_mask.clone(),
            evaluations_so_far: evaluations,
            elapsed_ms: self.start.elapsed().as_millis() as u64,
        });
        self.best_fitness > self.fitness_stop
    }

    pub(crate) fn finish(self, terminated_by: Termination, fitness: &dyn Fitness) -> SelectionResult {
        SelectionResult {
            best_mask: self.best_mask,
            best_fitness: self.best_fitness,
            log: self.log,
            terminated_by,
            total_evaluations: fitness.evaluations(),
        }
    }
}

/// Index of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
