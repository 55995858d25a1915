//! The criterion against a literal, allocation-heavy transcription of its
//! definition, plus structural properties that must hold for any input.

use kfrs_core::{gc, Dataset, FeatureMask, KernelConfig};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight from the definition: for every sample and every other class,
/// average `sqrt(1 - k^2)` over the nearest members of that class, then
/// normalize by `(classes - 1) * samples`.
fn brute_force(x: &[Vec<f64>], y: &[i64], mask: &[bool], delta: f64, per_feature: bool, n_k: usize) -> (f64, f64, f64) {
    let selected: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    let width = if per_feature { delta * selected.len() as f64 } else { delta };
    let mut classes: Vec<i64> = y.to_vec();
    classes.sort();
    classes.dedup();
    let n = x.len();

    let mut gamma_sum = 0.0;
    let mut omega_sum = 0.0;
    for i in 0..n {
        for &d in &classes {
            if d == y[i] {
                continue;
            }
            let mut cands: Vec<(f64, usize)> = Vec::new();
            for j in 0..n {
                if y[j] == d {
                    let mut s = 0.0;
                    for &f in &selected {
                        s += (x[i][f] - x[j][f]).powi(2);
                    }
                    cands.push((s, j));
                }
            }
            cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            cands.truncate(n_k);
            let lows: Vec<f64> = cands
                .iter()
                .map(|&(s, _)| {
                    let k = (-s / width).exp();
                    (1.0 - k * k).sqrt()
                })
                .collect();
            let m = lows.len() as f64;
            gamma_sum += lows.iter().sum::<f64>() / m;
            omega_sum += lows.iter().map(|l| l - (1.0 - l)).sum::<f64>() / m;
        }
    }
    let norm = ((classes.len() - 1) * n) as f64;
    let g = gamma_sum / norm;
    let w = omega_sum / norm;
    (g, w, (g + w) / 2.0)
}

struct Case {
    x: Vec<Vec<f64>>,
    y: Vec<i64>,
    mask: Vec<bool>,
    cfg: KernelConfig,
}

impl Case {
    fn dataset(&self) -> Dataset {
        let n = self.x.len();
        let f = self.x[0].len();
        let flat: Vec<f64> = self.x.iter().flatten().copied().collect();
        Dataset::new(
            Array2::from_shape_vec((n, f), flat).unwrap(),
            self.y.clone(),
            (0..f).map(|j| format!("c{j}")).collect(),
        )
        .unwrap()
    }
}

fn random_case(rng: &mut ChaCha8Rng, max_samples: usize, max_features: usize) -> Case {
    let n = rng.random_range(2..=max_samples);
    let f = rng.random_range(1..=max_features);
    let n_classes = rng.random_range(2..=3.min(n));
    // Small integer grid half the time, so exact distance ties occur.
    let grid = rng.random_bool(0.5);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..f)
                .map(|_| {
                    if grid {
                        rng.random_range(-2..=2) as f64
                    } else {
                        rng.random_range(-3.0..3.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut y: Vec<i64> = (0..n).map(|i| (i % n_classes) as i64 * 3 - 1).collect();
    for i in (1..n).rev() {
        y.swap(i, rng.random_range(0..=i));
    }
    let mut mask: Vec<bool> = (0..f).map(|_| rng.random_bool(0.5)).collect();
    if !mask.contains(&true) {
        mask[rng.random_range(0..f)] = true;
    }
    let cfg = KernelConfig {
        delta: rng.random_range(0.1..4.0),
        per_feature_normalization: rng.random_bool(0.5),
        n_k: rng.random_range(1..=4),
    };
    Case { x, y, mask, cfg }
}

#[test]
fn matches_brute_force_on_small_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let c = random_case(&mut rng, 8, 4);
        let v = gc(&c.dataset(), &FeatureMask::from_bits(c.mask.clone()), &c.cfg).unwrap();
        let (g, w, t) = brute_force(&c.x, &c.y, &c.mask, c.cfg.delta, c.cfg.per_feature_normalization, c.cfg.n_k);
        assert!((v.g_gamma - g).abs() <= 1e-12, "g_gamma {} vs {}", v.g_gamma, g);
        assert!((v.g_omega - w).abs() <= 1e-12, "g_omega {} vs {}", v.g_omega, w);
        assert!((v.gc - t).abs() <= 1e-12, "gc {} vs {}", v.gc, t);
    }
}

#[test]
fn bounds_hold_on_larger_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let c = random_case(&mut rng, 30, 8);
        let v = gc(&c.dataset(), &FeatureMask::from_bits(c.mask.clone()), &c.cfg).unwrap();
        assert!((0.0..=1.0).contains(&v.g_gamma));
        assert!((-1.0..=1.0).contains(&v.g_omega));
        assert!((-0.5..=1.0).contains(&v.gc));
    }
}

fn permuted(c: &Case, order: &[usize]) -> Case {
    Case {
        x: order.iter().map(|&i| c.x[i].clone()).collect(),
        y: order.iter().map(|&i| c.y[i]).collect(),
        mask: c.mask.clone(),
        cfg: c.cfg,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sample_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_case(&mut rng, 20, 5);
        let mut order: Vec<usize> = (0..c.x.len()).collect();
        order.reverse();
        order.rotate_left(seed as usize % c.x.len());
        let p = permuted(&c, &order);
        let mask = FeatureMask::from_bits(c.mask.clone());
        let a = gc(&c.dataset(), &mask, &c.cfg).unwrap();
        let b = gc(&p.dataset(), &mask, &c.cfg).unwrap();
        prop_assert!((a.gc - b.gc).abs() <= 1e-12);
        prop_assert!((a.g_gamma - b.g_gamma).abs() <= 1e-12);
    }

    #[test]
    fn feature_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_case(&mut rng, 20, 5);
        let f = c.mask.len();
        let cols: Vec<usize> = (0..f).rev().collect();
        let swapped = Case {
            x: c.x.iter().map(|row| cols.iter().map(|&j| row[j]).collect()).collect(),
            y: c.y.clone(),
            mask: cols.iter().map(|&j| c.mask[j]).collect(),
            cfg: c.cfg,
        };
        let a = gc(&c.dataset(), &FeatureMask::from_bits(c.mask.clone()), &c.cfg).unwrap();
        let b = gc(&swapped.dataset(), &FeatureMask::from_bits(swapped.mask.clone()), &c.cfg).unwrap();
        prop_assert!((a.gc - b.gc).abs() <= 1e-12);
    }

    #[test]
    fn unselected_columns_are_ignored(seed in any::<u64>(), junk in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = random_case(&mut rng, 12, 4);
        let a = gc(&c.dataset(), &FeatureMask::from_bits(c.mask.clone()), &c.cfg).unwrap();
        for (i, row) in c.x.iter_mut().enumerate() {
            row.push(junk * i as f64);
        }
        c.mask.push(false);
        let b = gc(&c.dataset(), &FeatureMask::from_bits(c.mask.clone()), &c.cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
