//! Reference optimizers over the same fitness: a generational GA, binary PSO
//! with a sigmoid transfer, and binary DE with fixed control parameters.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criterion::KernelConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fitness::{evaluate_guarded, Fitness, KfrsFitness};
use crate::mask::FeatureMask;
use crate::memetic::{self, bde_crossover, bde_mutate, bde_select, random_mask, repair, MAConfig, Survivor};
use crate::trace::{SelectionResult, Termination, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "GA")]
    Ga,
    #[serde(rename = "BPSO")]
    Bpso,
    #[serde(rename = "BDE")]
    Bde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub np: usize,
    pub g_max: usize,
    pub ga_crossover: f64,
    pub ga_mutation: f64,
    pub pso_c1: f64,
    pub pso_c2: f64,
    pub pso_inertia: f64,
    pub pso_vmax: f64,
    pub bde_f: f64,
    pub bde_cr: f64,
    pub fitness_stop: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            kind: BaselineKind::Bde,
            np: 80,
            g_max: 300,
            ga_crossover: 0.85,
            ga_mutation: 0.01,
            pso_c1: 2.0,
            pso_c2: 2.0,
            pso_inertia: 1.0,
            pso_vmax: 4.0,
            bde_f: 0.65,
            bde_cr: 0.55,
            fitness_stop: 0.9950,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in [0,1], got {v}")))
            }
        };
        prob("baselines.ga_crossover", self.ga_crossover)?;
        prob("baselines.ga_mutation", self.ga_mutation)?;
        prob("baselines.bde_f", self.bde_f)?;
        prob("baselines.bde_cr", self.bde_cr)?;
        if self.np < 2 {
            return Err(Error::InvalidConfig("baselines.np must be >= 2".into()));
        }
        if self.kind == BaselineKind::Bde && self.np < 4 {
            return Err(Error::InvalidConfig("BDE needs np >= 4".into()));
        }
        if self.pso_vmax.is_nan() || self.pso_vmax <= 0.0 {
            return Err(Error::InvalidConfig("baselines.pso_vmax must be > 0".into()));
        }
        Ok(())
    }
}

pub fn run_baseline(ds: &Dataset, kcfg: &KernelConfig, cfg: &BaselineConfig) -> Result<SelectionResult> {
    let fitness = KfrsFitness::new(ds, *kcfg)?;
    run_baseline_with(ds.n_features(), cfg, &fitness)
}

pub fn run_baseline_with(n_features: usize, cfg: &BaselineConfig, fitness: &dyn Fitness) -> Result<SelectionResult> {
    cfg.validate()?;
    if n_features == 0 {
        return Err(Error::InvalidConfig("dataset has no features".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(match cfg.kind {
        BaselineKind::Ga => run_ga(n_features, cfg, fitness, &mut rng),
        BaselineKind::Bpso => run_bpso(n_features, cfg, fitness, &mut rng),
        BaselineKind::Bde => run_bde(n_features, cfg, fitness, &mut rng),
    })
}

fn random_population<R: Rng>(n_features: usize, np: usize, rng: &mut R) -> Vec<FeatureMask> {
    (0..np).map(|_| random_mask(n_features, rng)).collect()
}

/// Size-2 tournament; the earlier draw wins ties.
fn tournament<R: Rng>(fit: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..fit.len());
    let b = rng.random_range(0..fit.len());
    if fit[b] > fit[a] {
        b
    } else {
        a
    }
}

fn run_ga<R: Rng>(n: usize, cfg: &BaselineConfig, fitness: &dyn Fitness, rng: &mut R) -> SelectionResult {
    let mut pop = random_population(n, cfg.np, rng);
    let mut fit = evaluate_guarded(fitness, &pop);
    let mut tracker = Tracker::new(&pop, &fit, cfg.fitness_stop);
    let mut terminated_by = Termination::GenerationLimit;

    for g in 1..=cfg.g_max {
        let sigma_sq = memetic::group_variance(&fit);
        let elite = crate::trace::argmax(&fit);
        let mut next = Vec::with_capacity(cfg.np);
        next.push(pop[elite].clone());
        while next.len() < cfg.np {
            let p1 = &pop[tournament(&fit, rng)];
            let p2 = &pop[tournament(&fit, rng)];
            let (mut c1, mut c2) = (p1.clone(), p2.clone());
            if rng.random::<f64>() < cfg.ga_crossover {
                for j in 0..n {
                    if rng.random::<bool>() {
                        c1.set(j, p2.get(j));
                        c2.set(j, p1.get(j));
                    }
                }
            }
            for child in [&mut c1, &mut c2] {
                for j in 0..n {
                    if rng.random::<f64>() < cfg.ga_mutation {
                        child.flip(j);
                    }
                }
                repair(child, rng);
            }
            next.push(c1);
            if next.len() < cfg.np {
                next.push(c2);
            }
        }
        pop = next;
        fit = evaluate_guarded(fitness, &pop);
        tracker.observe(&pop, &fit);
        if tracker.record(g, sigma_sq, None, None, &fit, fitness.evaluations()) {
            terminated_by = Termination::FitnessStop;
            break;
        }
    }
    tracker.finish(terminated_by, fitness)
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn run_bpso<R: Rng>(n: usize, cfg: &BaselineConfig, fitness: &dyn Fitness, rng: &mut R) -> SelectionResult {
    let mut pos = random_population(n, cfg.np, rng);
    let mut vel: Vec<Vec<f64>> = (0..cfg.np)
        .map(|_| (0..n).map(|_| rng.random_range(-cfg.pso_vmax..=cfg.pso_vmax)).collect())
        .collect();
    let mut fit = evaluate_guarded(fitness, &pos);
    let mut pbest = pos.clone();
    let mut pbest_fit = fit.clone();
    let mut tracker = Tracker::new(&pos, &fit, cfg.fitness_stop);
    let mut terminated_by = Termination::GenerationLimit;

    for g in 1..=cfg.g_max {
        let sigma_sq = memetic::group_variance(&fit);
        let gi = crate::trace::argmax(&pbest_fit);
        let gbest = pbest[gi].clone();
        for p in 0..cfg.np {
            let mut bits = Vec::with_capacity(n);
            for j in 0..n {
                let x = pos[p].get(j) as u8 as f64;
                let pb = pbest[p].get(j) as u8 as f64;
                let gb = gbest.get(j) as u8 as f64;
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = cfg.pso_inertia * vel[p][j] + cfg.pso_c1 * r1 * (pb - x) + cfg.pso_c2 * r2 * (gb - x);
                let v = v.clamp(-cfg.pso_vmax, cfg.pso_vmax);
                vel[p][j] = v;
                bits.push(rng.random::<f64>() < sigmoid(v));
            }
            let mut m = FeatureMask::from_bits(bits);
            repair(&mut m, rng);
            pos[p] = m;
        }
        fit = evaluate_guarded(fitness, &pos);
        for p in 0..cfg.np {
            if fit[p] > pbest_fit[p] {
                pbest_fit[p] = fit[p];
                pbest[p] = pos[p].clone();
            }
        }
        tracker.observe(&pbest, &pbest_fit);
        if tracker.record(g, sigma_sq, None, None, &fit, fitness.evaluations()) {
            terminated_by = Termination::FitnessStop;
            break;
        }
    }
    tracker.finish(terminated_by, fitness)
}

fn run_bde<R: Rng>(n: usize, cfg: &BaselineConfig, fitness: &dyn Fitness, rng: &mut R) -> SelectionResult {
    let mut pop = random_population(n, cfg.np, rng);
    let mut fit = evaluate_guarded(fitness, &pop);
    let mut tracker = Tracker::new(&pop, &fit, cfg.fitness_stop);
    let mut terminated_by = Termination::GenerationLimit;

    for g in 1..=cfg.g_max {
        let sigma_sq = memetic::group_variance(&fit);
        let trials: Vec<FeatureMask> = (0..cfg.np)
            .map(|i| {
                let mutant = bde_mutate(&pop, i, cfg.bde_f, rng);
                bde_crossover(&pop[i], &mutant, cfg.bde_cr, rng)
            })
            .collect();
        let trial_fit = evaluate_guarded(fitness, &trials);
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fit).enumerate() {
            if bde_select(fit[i], tf) == Survivor::Trial {
                pop[i] = trial;
                fit[i] = tf;
            }
        }
        tracker.observe(&pop, &fit);
        if tracker.record(g, sigma_sq, Some(cfg.bde_f), Some(cfg.bde_cr), &fit, fitness.evaluations()) {
            terminated_by = Termination::FitnessStop;
            break;
        }
    }
    tracker.finish(terminated_by, fitness)
}

/// Any optimizer that can appear in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[serde(rename = "MA")]
    Ma,
    #[serde(rename = "GA")]
    Ga,
    #[serde(rename = "BPSO", alias = "DPSO", alias = "PSO")]
    Bpso,
    #[serde(rename = "BDE")]
    Bde,
}

impl OptimizerKind {
    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            OptimizerKind::Ma => None,
            OptimizerKind::Ga => Some(BaselineKind::Ga),
            OptimizerKind::Bpso => Some(BaselineKind::Bpso),
            OptimizerKind::Bde => Some(BaselineKind::Bde),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Ma => "MA",
            OptimizerKind::Ga => "GA",
            OptimizerKind::Bpso => "BPSO",
            OptimizerKind::Bde => "BDE",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MA" => Ok(OptimizerKind::Ma),
            "GA" => Ok(OptimizerKind::Ga),
            "BPSO" | "DPSO" | "PSO" => Ok(OptimizerKind::Bpso),
            "BDE" => Ok(OptimizerKind::Bde),
            other => Err(Error::InvalidConfig(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// What to run in a comparison study.
#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub kinds: Vec<OptimizerKind>,
    pub seeds: Vec<u64>,
    pub ma: MAConfig,
    pub baseline: BaselineConfig,
    /// Certified optimum (e.g. from the exhaustive oracle). When absent the
    /// best final fitness seen by any optimizer is the reference.
    pub reference_optimum: Option<f64>,
    pub workers: usize,
}

/// Runs within this distance of the reference count as successes.
pub const SUCCESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub optimizer: OptimizerKind,
    pub mean_time_s: f64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub success_rate_pct: f64,
    #[serde(skip)]
    pub final_fitnesses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub reference: f64,
}

impl ComparisonTable {
    pub fn row(&self, kind: OptimizerKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.optimizer == kind)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["optimizer", "mean_time_s", "best_fitness", "mean_fitness", "success_rate_pct"])?;
        for r in &self.rows {
            wtr.write_record([
                r.optimizer.to_string(),
                format!("{:.6}", r.mean_time_s),
                format!("{:.12}", r.best_fitness),
                format!("{:.12}", r.mean_fitness),
                format!("{:.2}", r.success_rate_pct),
            ])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<compare csv>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Runs one optimizer with a fresh memoized fitness.
pub fn run_optimizer(
    ds: &Dataset,
    kcfg: &KernelConfig,
    kind: OptimizerKind,
    ma: &MAConfig,
    baseline: &BaselineConfig,
    seed: u64,
    workers: usize,
) -> Result<SelectionResult> {
    let fitness = KfrsFitness::new(ds, *kcfg)?.with_workers(workers)?;
    match kind.baseline() {
        None => memetic::run_ma_with(ds.n_features(), &MAConfig { seed, ..ma.clone() }, &fitness),
        Some(b) => run_baseline_with(
            ds.n_features(),
            &BaselineConfig {
                kind: b,
                seed,
                ..baseline.clone()
            },
            &fitness,
        ),
    }
}

pub fn compare(ds: &Dataset, kcfg: &KernelConfig, spec: &CompareSpec) -> Result<ComparisonTable> {
    if spec.seeds.is_empty() {
        return Err(Error::InvalidConfig("compare needs at least one run".into()));
    }
    let mut finals: Vec<(OptimizerKind, Vec<f64>, f64)> = Vec::new();
    for &kind in &spec.kinds {
        let mut values = Vec::with_capacity(spec.seeds.len());
        let mut seconds = 0.0;
        for &seed in &spec.seeds {
            let start = Instant::now();
            let res = run_optimizer(ds, kcfg, kind, &spec.ma, &spec.baseline, seed, spec.workers)?;
            seconds += start.elapsed().as_secs_f64();
            values.push(res.best_fitness);
        }
        finals.push((kind, values, seconds / spec.seeds.len() as f64));
    }
    Ok(tabulate(finals, spec.reference_optimum))
}

/// Builds the table from per-run final fitnesses and mean run times.
pub fn tabulate(finals: Vec<(OptimizerKind, Vec<f64>, f64)>, reference_optimum: Option<f64>) -> ComparisonTable {
    let observed = finals
        .iter()
        .flat_map(|(_, v, _)| v.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let reference = reference_optimum.unwrap_or(observed);
    let rows = finals
        .into_iter()
        .map(|(optimizer, values, mean_time_s)| {
            let n = values.len() as f64;
            let hits = values.iter().filter(|&&v| v >= reference - SUCCESS_TOLERANCE).count();
            ComparisonRow {
                optimizer,
                mean_time_s,
                best_fitness: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_fitness: values.iter().sum::<f64>() / n,
                success_rate_pct: 100.0 * hits as f64 / n,
                final_fitnesses: values,
            }
        })
        .collect();
    ComparisonTable { rows, reference }
}
