//! Memetic search over feature masks: adaptive binary differential evolution
//! explores the subset space, and tabu search refines the elite individual of
//! every generation.
//!
//! All randomness is drawn on the calling thread in a fixed order; only
//! fitness evaluation may fan out to workers, so a seed fully determines the
//! run regardless of parallelism.

use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criterion::KernelConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fitness::{evaluate_guarded, Fitness, KfrsFitness};
use crate::mask::FeatureMask;
use crate::trace::{SelectionResult, Termination, Tracker};

/// Neighbourhoods larger than this are sampled instead of scanned.
pub const TS_CANDIDATE_LIMIT: usize = 500;

/// Guard for the best-fitness denominator of the group variance.
const VARIANCE_DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MAConfig {
    pub np: usize,
    pub g_max: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub cr_min: f64,
    pub cr_max: f64,
    /// Tabu list length, in moves.
    pub tl: usize,
    pub ts_iters: usize,
    pub fitness_stop: f64,
    pub init_neighbors: usize,
    /// Individuals refined by tabu search each generation; 0 gives plain BDE.
    pub elite_count: usize,
    pub seed: u64,
}

impl Default for MAConfig {
    fn default() -> Self {
        Self {
            np: 80,
            g_max: 300,
            f_min: 0.4,
            f_max: 0.9,
            cr_min: 0.3,
            cr_max: 0.8,
            tl: 20,
            ts_iters: 200,
            fitness_stop: 0.9950,
            init_neighbors: 5,
            elite_count: 1,
            seed: 0,
        }
    }
}

impl MAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.np < 4 {
            return bad(format!("ma.np must be >= 4, got {}", self.np));
        }
        if !(0.0 < self.f_min && self.f_min <= self.f_max) {
            return bad(format!("need 0 < ma.f_min <= ma.f_max, got {} / {}", self.f_min, self.f_max));
        }
        if !(0.0 < self.cr_min && self.cr_min <= self.cr_max && self.cr_max <= 1.0) {
            return bad(format!(
                "need 0 < ma.cr_min <= ma.cr_max <= 1, got {} / {}",
                self.cr_min, self.cr_max
            ));
        }
        if self.tl < 1 {
            return bad("ma.tl must be >= 1".into());
        }
        if self.elite_count > self.np {
            return bad("ma.elite_count cannot exceed ma.np".into());
        }
        Ok(())
    }
}

/// Population spread: `Σ ((f_i − f_avg) / f_best)²`, with `|f_best|` floored
/// at 1e-12.
pub fn group_variance(fitnesses: &[f64]) -> f64 {
    let n = fitnesses.len() as f64;
    // Shifted mean: exact when every value is equal.
    let pivot = fitnesses[0];
    let avg = pivot + fitnesses.iter().map(|f| f - pivot).sum::<f64>() / n;
    let best = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let den = best.abs().max(VARIANCE_DENOM_FLOOR);
    fitnesses.iter().map(|f| ((f - avg) / den).powi(2)).sum()
}

/// Scale factor and crossover rate for the current spread. A converged
/// population (`σ² → 0`) gets a small F and a large C_R.
pub fn adapt_params(sigma_sq: f64, cfg: &MAConfig) -> (f64, f64) {
    let t = 1.0 - sigma_sq / cfg.np as f64;
    let f_g = (cfg.f_max - (cfg.f_max - cfg.f_min) * t).clamp(cfg.f_min, cfg.f_max);
    let cr_g = (cfg.cr_min + (cfg.cr_max - cfg.cr_min) * t).clamp(cfg.cr_min, cfg.cr_max);
    (f_g, cr_g)
}

/// Binary mutation `base ⊕ ((a ⊕ b) ∧ [u < f_g])` with `u` drawn per bit.
pub fn binary_mutation<R: Rng + ?Sized>(
    base: &FeatureMask,
    a: &FeatureMask,
    b: &FeatureMask,
    f_g: f64,
    rng: &mut R,
) -> FeatureMask {
    let bits = (0..base.len())
        .map(|j| {
            let apply = rng.random::<f64>() < f_g;
            base.get(j) ^ (apply && (a.get(j) ^ b.get(j)))
        })
        .collect();
    FeatureMask::from_bits(bits)
}

/// Three distinct population indices, all different from `i`.
fn draw_donors<R: Rng + ?Sized>(np: usize, i: usize, rng: &mut R) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let r = rng.random_range(0..np);
        if r != i && !picked[..k].contains(&r) {
            picked[k] = r;
            k += 1;
        }
    }
    picked
}

/// Mutant for individual `i` from three random distinct donors.
pub fn bde_mutate<R: Rng + ?Sized>(pop: &[FeatureMask], i: usize, f_g: f64, rng: &mut R) -> FeatureMask {
    assert!(pop.len() >= 4, "binary DE needs at least 4 individuals");
    let [r1, r2, r3] = draw_donors(pop.len(), i, rng);
    binary_mutation(&pop[r1], &pop[r2], &pop[r3], f_g, rng)
}

/// Binomial crossover with the forced index supplied by the caller.
pub fn crossover_at<R: Rng + ?Sized>(
    target: &FeatureMask,
    mutant: &FeatureMask,
    cr_g: f64,
    j_rand: usize,
    rng: &mut R,
) -> FeatureMask {
    assert_eq!(target.len(), mutant.len());
    let bits = (0..target.len())
        .map(|j| {
            let cross = rng.random::<f64>() < cr_g;
            if j == j_rand || cross {
                mutant.get(j)
            } else {
                target.get(j)
            }
        })
        .collect();
    FeatureMask::from_bits(bits)
}

/// Binomial crossover: one random position always comes from the mutant.
pub fn bde_crossover<R: Rng + ?Sized>(
    target: &FeatureMask,
    mutant: &FeatureMask,
    cr_g: f64,
    rng: &mut R,
) -> FeatureMask {
    let j_rand = rng.random_range(0..target.len());
    crossover_at(target, mutant, cr_g, j_rand, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Survivor {
    Target,
    Trial,
}

/// Greedy replacement; ties go to the trial.
pub fn bde_select(target_fitness: f64, trial_fitness: f64) -> Survivor {
    if trial_fitness >= target_fitness {
        Survivor::Trial
    } else {
        Survivor::Target
    }
}

/// Uniform random mask; an all-zero draw gets one random bit set.
pub fn random_mask<R: Rng + ?Sized>(n_features: usize, rng: &mut R) -> FeatureMask {
    let mut m = FeatureMask::from_bits((0..n_features).map(|_| rng.random::<bool>()).collect());
    repair(&mut m, rng);
    m
}

pub(crate) fn repair<R: Rng + ?Sized>(mask: &mut FeatureMask, rng: &mut R) {
    if mask.none_selected() && !mask.is_empty() {
        let j = rng.random_range(0..mask.len());
        mask.set(j, true);
    }
}

/// `np` random masks, each replaced by the best of itself and
/// `init_neighbors` random single-bit-flip neighbours.
pub fn init_population<R: Rng + ?Sized>(
    n_features: usize,
    cfg: &MAConfig,
    fitness: &dyn Fitness,
    rng: &mut R,
) -> (Vec<FeatureMask>, Vec<f64>) {
    let mut pop: Vec<FeatureMask> = (0..cfg.np).map(|_| random_mask(n_features, rng)).collect();
    let mut candidates = Vec::with_capacity(cfg.np * cfg.init_neighbors);
    for m in &pop {
        for _ in 0..cfg.init_neighbors {
            let mut nb = m.clone();
            nb.flip(rng.random_range(0..n_features));
            candidates.push(nb);
        }
    }
    let mut fit = evaluate_guarded(fitness, &pop);
    let cand_fit = evaluate_guarded(fitness, &candidates);
    for i in 0..cfg.np {
        for k in 0..cfg.init_neighbors {
            let c = i * cfg.init_neighbors + k;
            if cand_fit[c] > fit[i] {
                fit[i] = cand_fit[c];
                pop[i] = candidates[c].clone();
            }
        }
    }
    (pop, fit)
}

/// A local move: flip one bit, or exchange a selected feature for an unselected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Flip(usize),
    Swap { out: usize, into: usize },
}

impl Move {
    fn touches(&self, pos: usize) -> bool {
        match *self {
            Move::Flip(j) => j == pos,
            Move::Swap { out, into } => out == pos || into == pos,
        }
    }

    fn positions(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Move::Flip(j) => (j, None),
            Move::Swap { out, into } => (out, Some(into)),
        };
        std::iter::once(a).chain(b)
    }

    fn apply(&self, mask: &FeatureMask) -> FeatureMask {
        let mut m = mask.clone();
        match *self {
            Move::Flip(j) => m.flip(j),
            Move::Swap { out, into } => {
                m.set(out, false);
                m.set(into, true);
            }
        }
        m
    }
}

/// Flips that keep at least one feature, then every selected/unselected swap.
fn neighborhood(mask: &FeatureMask) -> Vec<Move> {
    let selected = mask.selected();
    let unselected = mask.unselected();
    let mut moves = Vec::with_capacity(mask.len() + selected.len() * unselected.len());
    for j in 0..mask.len() {
        if !(mask.get(j) && selected.len() == 1) {
            moves.push(Move::Flip(j));
        }
    }
    for &out in &selected {
        for &into in &unselected {
            moves.push(Move::Swap { out, into });
        }
    }
    moves
}

struct TabuList {
    moves: VecDeque<Move>,
    capacity: usize,
}

impl TabuList {
    fn new(capacity: usize) -> Self {
        Self {
            moves: VecDeque::with_capacity(capacity + 1),
            capacity,
        }
    }

    fn forbids(&self, mv: &Move) -> bool {
        mv.positions().any(|p| self.moves.iter().any(|t| t.touches(p)))
    }

    fn push(&mut self, mv: Move) {
        self.moves.push_back(mv);
        if self.moves.len() > self.capacity {
            self.moves.pop_front();
        }
    }
}

fn tabu_search<R: Rng + ?Sized>(
    start: &FeatureMask,
    cfg: &MAConfig,
    fitness: &dyn Fitness,
    rng: &mut R,
    mut trail: Option<&mut Vec<FeatureMask>>,
) -> (FeatureMask, f64) {
    let mut current = start.clone();
    let mut best = start.clone();
    let mut best_fit = fitness.evaluate(start);
    let mut tabu = TabuList::new(cfg.tl);
    if let Some(t) = trail.as_deref_mut() {
        t.push(current.clone());
    }

    for _ in 0..cfg.ts_iters {
        let mut moves = neighborhood(&current);
        if moves.len() > TS_CANDIDATE_LIMIT {
            let mut picked = index::sample(rng, moves.len(), TS_CANDIDATE_LIMIT).into_vec();
            picked.sort_unstable();
            moves = picked.into_iter().map(|k| moves[k]).collect();
        }
        let candidates: Vec<FeatureMask> = moves.iter().map(|m| m.apply(&current)).collect();
        let values = fitness.evaluate_batch(&candidates);

        let mut chosen: Option<usize> = None;
        for (k, mv) in moves.iter().enumerate() {
            let admissible = !tabu.forbids(mv) || values[k] > best_fit;
            if admissible && chosen.is_none_or(|c| values[k] > values[c]) {
                chosen = Some(k);
            }
        }
        // Every move is tabu and none aspirates.
        let Some(k) = chosen else { break };

        current = candidates[k].clone();
        tabu.push(moves[k]);
        if let Some(t) = trail.as_deref_mut() {
            t.push(current.clone());
        }
        if values[k] > best_fit {
            best_fit = values[k];
            best = current.clone();
        }
    }
    (best, best_fit)
}

/// Tabu search from `start`; returns the best mask visited.
///
/// Each iteration moves to the best admissible neighbour even when it is worse
/// than the current mask. A move is tabu while any position it touches was
/// touched by one of the last `tl` moves, unless it beats the best so far.
/// The search ends early when no move is admissible.
pub fn ts_local_search<R: Rng + ?Sized>(
    start: &FeatureMask,
    cfg: &MAConfig,
    fitness: &dyn Fitness,
    rng: &mut R,
) -> FeatureMask {
    tabu_search(start, cfg, fitness, rng, None).0
}

/// Runs the memetic search with a fresh memoized criterion.
pub fn run_ma(ds: &Dataset, kcfg: &KernelConfig, cfg: &MAConfig) -> Result<SelectionResult> {
    let fitness = KfrsFitness::new(ds, *kcfg)?;
    run_ma_with(ds.n_features(), cfg, &fitness)
}

/// Runs the memetic search against any objective.
pub fn run_ma_with(n_features: usize, cfg: &MAConfig, fitness: &dyn Fitness) -> Result<SelectionResult> {
    cfg.validate()?;
    if n_features == 0 {
        return Err(Error::InvalidConfig("dataset has no features".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut pop, mut fit) = init_population(n_features, cfg, fitness, &mut rng);
    let mut tracker = Tracker::new(&pop, &fit, cfg.fitness_stop);
    let mut terminated_by = Termination::GenerationLimit;

    for g in 1..=cfg.g_max {
        let sigma_sq = group_variance(&fit);
        let (f_g, cr_g) = adapt_params(sigma_sq, cfg);

        let trials: Vec<FeatureMask> = (0..cfg.np)
            .map(|i| {
                let mutant = bde_mutate(&pop, i, f_g, &mut rng);
                bde_crossover(&pop[i], &mutant, cr_g, &mut rng)
            })
            .collect();
        let trial_fit = evaluate_guarded(fitness, &trials);
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fit).enumerate() {
            if bde_select(fit[i], tf) == Survivor::Trial {
                pop[i] = trial;
                fit[i] = tf;
            }
        }

        for e in elite_indices(&fit, cfg.elite_count) {
            let (refined, rf) = tabu_search(&pop[e], cfg, fitness, &mut rng, None);
            if rf > fit[e] {
                pop[e] = refined;
                fit[e] = rf;
            }
        }

        tracker.observe(&pop, &fit);
        if tracker.record(g, sigma_sq, Some(f_g), Some(cr_g), &fit, fitness.evaluations()) {
            terminated_by = Termination::FitnessStop;
            break;
        }
    }
    Ok(tracker.finish(terminated_by, fitness))
}

/// Indices of the `count` fittest individuals; ties favour lower indices.
fn elite_indices(fit: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}
