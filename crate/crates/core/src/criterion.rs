//! Kernelized fuzzy-rough class separability.
//!
//! Similarity between two samples restricted to a feature subset is the
//! Gaussian kernel `k(x, y) = exp(-‖x − y‖² / δ)`. From it the lower
//! approximation `√(1 − k²)` measures how certainly a sample is kept apart
//! from another class, and `1 − √(1 − k²)` how much it could be confused
//! with it.
//!
//! The separability score of a subset averages these quantities over the
//! `n_k` nearest neighbours each sample has in every *other* class:
//!
//! * `g_gamma`: mean lower-approximation mass, in `[0, 1]`;
//! * `g_omega`: lower mass minus upper (confusion) mass, in `[-1, 1]`;
//! * `gc = (g_gamma + g_omega) / 2`, in `[-0.5, 1]`.
//!
//! Perfectly separated classes give `gc → 1`; coincident samples from
//! different classes pull it toward `-0.5`.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

/// Gaussian width and neighbourhood size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Gaussian width `δ`.
    pub delta: f64,
    /// Scale `δ` by the number of selected features, so that the similarity of
    /// two random standardized samples does not shrink as the subset grows.
    pub per_feature_normalization: bool,
    /// Neighbours taken from each other class.
    pub n_k: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            per_feature_normalization: true,
            n_k: 3,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("kernel.delta must be > 0, got {}", self.delta)));
        }
        if self.n_k < 1 {
            return Err(Error::InvalidConfig("kernel.n_k must be >= 1".into()));
        }
        Ok(())
    }

    /// Width actually used for a subset of `popcount` features.
    pub fn effective_width(&self, popcount: usize) -> f64 {
        if self.per_feature_normalization {
            self.delta * popcount as f64
        } else {
            self.delta
        }
    }
}

/// `(g_gamma, g_omega, gc)` for one dataset and feature subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub g_gamma: f64,
    pub g_omega: f64,
    pub gc: f64,
}

/// Lower and upper approximation memberships of one sample to one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Memberships {
    pub lower_s: f64,
    pub lower_theta: f64,
    pub upper_t: f64,
    pub upper_sigma: f64,
}

/// The nearest members of one other class, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassNeighbors {
    pub class: i64,
    pub indices: Vec<usize>,
    pub sq_distances: Vec<f64>,
}

/// Per-sample cross-class neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    /// `per_sample[i]` holds one entry per class other than sample `i`'s,
    /// in ascending class-id order.
    pub per_sample: Vec<Vec<ClassNeighbors>>,
    /// The kernel width in effect for the mask the sets were built with.
    pub width: f64,
}

/// Selected columns copied into a dense row-major buffer.
struct Projection {
    data: Vec<f64>,
    dim: usize,
}

impl Projection {
    fn new(ds: &Dataset, mask: &FeatureMask) -> Result<Self> {
        check_mask(ds, mask)?;
        let cols = mask.selected();
        let mut data = Vec::with_capacity(ds.n_samples() * cols.len());
        for row in ds.samples().rows() {
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Ok(Self {
            data,
            dim: cols.len(),
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

fn check_mask(ds: &Dataset, mask: &FeatureMask) -> Result<()> {
    if mask.len() != ds.n_features() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_features(),
            found: mask.len(),
        });
    }
    if mask.none_selected() {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

/// Gaussian similarity of two rows over the selected features.
pub fn gaussian_kernel(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
    mask: &FeatureMask,
    cfg: &KernelConfig,
) -> Result<f64> {
    if x.len() != mask.len() || y.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            found: x.len().min(y.len()),
        });
    }
    if mask.none_selected() {
        return Err(Error::EmptyMask);
    }
    let d2: f64 = mask
        .selected()
        .into_iter()
        .map(|j| (x[j] - y[j]) * (x[j] - y[j]))
        .sum();
    Ok(kernel_from_sq_dist(d2, cfg.effective_width(mask.count_ones())))
}

#[inline]
fn kernel_from_sq_dist(d2: f64, width: f64) -> f64 {
    (-d2 / width).exp()
}

/// Certainty that a pair with similarity `k` is distinguishable.
#[inline]
fn lower_theta(k: f64) -> f64 {
    (1.0 - k * k).max(0.0).sqrt()
}

/// Memberships of sample `i` to the lower/upper approximations of `class`.
///
/// Lower approximations range over samples outside `class`, upper ones over
/// its members (sample `i` included when it belongs to `class`).
pub fn approx_memberships(
    i: usize,
    class: i64,
    ds: &Dataset,
    mask: &FeatureMask,
    cfg: &KernelConfig,
) -> Result<Memberships> {
    if ds.class_index(class).is_none() {
        return Err(Error::UnknownClass(class));
    }
    let proj = Projection::new(ds, mask)?;
    let width = cfg.effective_width(proj.dim);
    let mut out = Memberships {
        lower_s: f64::INFINITY,
        lower_theta: f64::INFINITY,
        upper_t: 0.0,
        upper_sigma: 0.0,
    };
    let mut outside = 0usize;
    for (j, &label) in ds.labels().iter().enumerate() {
        let k = kernel_from_sq_dist(proj.sq_dist(i, j), width);
        if label == class {
            out.upper_t = out.upper_t.max(k);
            out.upper_sigma = out.upper_sigma.max(1.0 - lower_theta(k));
        } else {
            outside += 1;
            out.lower_s = out.lower_s.min(1.0 - k);
            out.lower_theta = out.lower_theta.min(lower_theta(k));
        }
    }
    if outside == 0 {
        return Err(Error::NoOutsideClassSamples(class));
    }
    Ok(out)
}

/// For every sample and every other class, the `min(n_k, |class|)` nearest
/// members of that class. Ties are broken by ascending sample index.
pub fn find_neighbors(ds: &Dataset, mask: &FeatureMask, cfg: &KernelConfig) -> Result<NeighborSets> {
    cfg.validate()?;
    let proj = Projection::new(ds, mask)?;
    let n = ds.n_samples();
    let labels = ds.labels();
    let members: Vec<(i64, Vec<usize>)> = ds
        .class_ids()
        .iter()
        .map(|&c| (c, (0..n).filter(|&j| labels[j] == c).collect()))
        .collect();

    let mut d2 = vec![0.0; n];
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut per_sample = Vec::with_capacity(n);
    for i in 0..n {
        for (j, slot) in d2.iter_mut().enumerate() {
            *slot = proj.sq_dist(i, j);
        }
        let mut lists = Vec::with_capacity(members.len() - 1);
        for (class, idx) in &members {
            if *class == labels[i] {
                continue;
            }
            candidates.clear();
            candidates.extend(idx.iter().map(|&j| (d2[j], j)));
            let take = cfg.n_k.min(candidates.len());
            let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if take < candidates.len() {
                candidates.select_nth_unstable_by(take - 1, order);
                candidates.truncate(take);
            }
            candidates.sort_unstable_by(order);
            lists.push(ClassNeighbors {
                class: *class,
                indices: candidates.iter().map(|c| c.1).collect(),
                sq_distances: candidates.iter().map(|c| c.0).collect(),
            });
        }
        per_sample.push(lists);
    }
    Ok(NeighborSets {
        per_sample,
        width: cfg.effective_width(proj.dim),
    })
}

impl NeighborSets {
    /// Evaluates both neighbour sums in one pass.
    ///
    /// Each (sample, other class) term is averaged over the neighbours that
    /// class actually supplied, so classes smaller than `n_k` do not push the
    /// scores out of range.
    pub fn criterion(&self) -> CriterionValue {
        let n = self.per_sample.len();
        let mut gamma = 0.0;
        let mut omega = 0.0;
        let mut n_other_classes = 0usize;
        for lists in &self.per_sample {
            n_other_classes = n_other_classes.max(lists.len());
            for cls in lists {
                let m = cls.sq_distances.len() as f64;
                let (mut certain, mut confused) = (0.0, 0.0);
                for &d2 in &cls.sq_distances {
                    let l = lower_theta(kernel_from_sq_dist(d2, self.width));
                    certain += l;
                    confused += 1.0 - l;
                }
                gamma += certain / m;
                omega += (certain - confused) / m;
            }
        }
        let norm = (n_other_classes * n) as f64;
        let g_gamma = gamma / norm;
        let g_omega = omega / norm;
        CriterionValue {
            g_gamma,
            g_omega,
            gc: (g_gamma + g_omega) / 2.0,
        }
    }
}

/// Generalized dependency of the class attribute on the subset.
pub fn g_gamma(ds: &Dataset, mask: &FeatureMask, cfg: &KernelConfig) -> Result<f64> {
    Ok(gc(ds, mask, cfg)?.g_gamma)
}

/// Generalized classification certainty of the subset.
pub fn g_omega(ds: &Dataset, mask: &FeatureMask, cfg: &KernelConfig) -> Result<f64> {
    Ok(gc(ds, mask, cfg)?.g_omega)
}

/// Separability criterion of the subset.
pub fn gc(ds: &Dataset, mask: &FeatureMask, cfg: &KernelConfig) -> Result<CriterionValue> {
    Ok(find_neighbors(ds, mask, cfg)?.criterion())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn ds_1d(values: &[f64], labels: &[i64]) -> Dataset {
        let samples = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        Dataset::new(samples, labels.to_vec(), vec!["x".into()]).unwrap()
    }

    fn cfg(n_k: usize) -> KernelConfig {
        KernelConfig {
            n_k,
            ..KernelConfig::default()
        }
    }

    #[test]
    fn kernel_hand_values() {
        let x = array![0.0, 0.0];
        let y = array![1.0, 1.0];
        let mask = FeatureMask::full(2);
        let on = KernelConfig::default();
        let off = KernelConfig {
            per_feature_normalization: false,
            ..on
        };
        assert_eq!(gaussian_kernel(x.view(), x.view(), &mask, &on).unwrap(), 1.0);
        assert!((gaussian_kernel(x.view(), y.view(), &mask, &on).unwrap() - 0.367879).abs() < 1e-6);
        assert!((gaussian_kernel(x.view(), y.view(), &mask, &off).unwrap() - 0.135335).abs() < 1e-6);
        let sym = gaussian_kernel(y.view(), x.view(), &mask, &off).unwrap();
        assert_eq!(sym, gaussian_kernel(x.view(), y.view(), &mask, &off).unwrap());
    }

    #[test]
    fn kernel_ignores_unselected_features() {
        let x = array![0.0, 100.0];
        let y = array![0.0, -100.0];
        let mask = FeatureMask::from_indices(2, &[0]);
        assert_eq!(gaussian_kernel(x.view(), y.view(), &mask, &cfg(3)).unwrap(), 1.0);
        assert!(matches!(
            gaussian_kernel(x.view(), y.view(), &FeatureMask::empty(2), &cfg(3)),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn memberships() {
        let ds = ds_1d(&[0.0, 0.0, 1.0], &[1, -1, -1]);
        let mask = FeatureMask::full(1);
        // Sample 0 coincides with sample 1 of the other class.
        let m = approx_memberships(0, 1, &ds, &mask, &cfg(3)).unwrap();
        assert_eq!(m.lower_theta, 0.0);
        assert_eq!(m.lower_s, 0.0);
        assert_eq!(m.upper_t, 1.0);

        let ds = ds_1d(&[0.0, 1.0], &[1, -1]);
        let m = approx_memberships(0, 1, &ds, &mask, &cfg(3)).unwrap();
        assert!((m.lower_theta - 0.929874).abs() < 1e-6);
        assert_eq!(m.upper_t, 1.0);
        assert_eq!(m.upper_sigma, 1.0);
        assert!((m.lower_s - (1.0 - (-1.0f64).exp())).abs() < 1e-15);

        assert!(matches!(
            approx_memberships(0, 7, &ds, &mask, &cfg(3)),
            Err(Error::UnknownClass(7))
        ));
    }

    #[test]
    fn neighbor_lists_respect_class_size() {
        let ds = ds_1d(&[0.0, 3.0], &[1, -1]);
        let sets = find_neighbors(&ds, &FeatureMask::full(1), &cfg(3)).unwrap();
        for lists in &sets.per_sample {
            assert_eq!(lists.len(), 1);
            assert_eq!(lists[0].indices.len(), 1);
        }
    }

    #[test]
    fn nearest_other_class_neighbor() {
        let ds = ds_1d(&[0.0, 0.1, 5.0, 5.1], &[1, 1, -1, -1]);
        let sets = find_neighbors(&ds, &FeatureMask::full(1), &cfg(1)).unwrap();
        assert_eq!(sets.per_sample[0][0].indices, vec![2]);
        assert_eq!(sets.per_sample[3][0].indices, vec![1]);
    }

    #[test]
    fn equidistant_candidates_prefer_lower_index() {
        let values = [0.0, 9.0, 9.0, 9.0, 1.0, 9.0, 9.0, -1.0];
        let labels = [1, 1, 1, 1, -1, 1, 1, -1];
        let ds = ds_1d(&values, &labels);
        let sets = find_neighbors(&ds, &FeatureMask::full(1), &cfg(1)).unwrap();
        assert_eq!(sets.per_sample[0][0].indices, vec![4]);
        let sets = find_neighbors(&ds, &FeatureMask::full(1), &cfg(2)).unwrap();
        assert_eq!(sets.per_sample[0][0].indices, vec![4, 7]);
    }

    #[test]
    fn neighbor_lists_exclude_self_and_are_sorted() {
        let ds = Dataset::new(
            Array2::from_shape_fn((12, 2), |(i, j)| ((i * 5 + j * 3) % 7) as f64),
            (0..12).map(|i| (i % 3) as i64).collect(),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let sets = find_neighbors(&ds, &FeatureMask::full(2), &cfg(3)).unwrap();
        for (i, lists) in sets.per_sample.iter().enumerate() {
            assert_eq!(lists.len(), 2);
            for cls in lists {
                assert!(!cls.indices.contains(&i));
                assert!(cls.sq_distances.windows(2).all(|w| w[0] <= w[1]));
                assert!(cls.indices.iter().all(|&j| ds.labels()[j] == cls.class));
            }
        }
    }

    #[test]
    fn coincident_pair() {
        let ds = ds_1d(&[0.0, 0.0], &[1, -1]);
        let v = gc(&ds, &FeatureMask::full(1), &cfg(1)).unwrap();
        assert_eq!(v.g_gamma, 0.0);
        assert_eq!(v.g_omega, -1.0);
        assert_eq!(v.gc, -0.5);
    }

    #[test]
    fn unit_gap_pair() {
        let ds = ds_1d(&[0.0, 1.0], &[1, -1]);
        let v = gc(&ds, &FeatureMask::full(1), &cfg(1)).unwrap();
        let lower = (1.0 - (-2.0f64).exp()).sqrt();
        assert!((v.g_gamma - 0.929874).abs() < 1e-6);
        assert!((v.g_gamma - lower).abs() < 1e-15);
        assert!((v.g_omega - (2.0 * lower - 1.0)).abs() < 1e-15);
        assert!((v.gc - 0.894811).abs() < 1e-6);
    }

    #[test]
    fn well_separated_four_samples() {
        let ds = ds_1d(&[0.0, 0.1, 5.0, 5.1], &[1, 1, -1, -1]);
        let v = gc(&ds, &FeatureMask::full(1), &cfg(1)).unwrap();
        assert!((v.g_gamma - 1.0).abs() < 1e-9);
        assert!((v.g_omega - 1.0).abs() < 1e-9);
        assert!((v.gc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gc_is_mean_of_parts() {
        let ds = ds_1d(&[0.0, 0.4, 0.5, 2.0, 2.2], &[1, 1, -1, -1, 2]);
        let v = gc(&ds, &FeatureMask::full(1), &cfg(3)).unwrap();
        assert_eq!(v.gc, (v.g_gamma + v.g_omega) / 2.0);
        assert_eq!(g_gamma(&ds, &FeatureMask::full(1), &cfg(3)).unwrap(), v.g_gamma);
        assert_eq!(g_omega(&ds, &FeatureMask::full(1), &cfg(3)).unwrap(), v.g_omega);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = ds_1d(&[0.0, 1.0], &[1, -1]);
        assert!(matches!(gc(&ds, &FeatureMask::empty(1), &cfg(1)), Err(Error::EmptyMask)));
        assert!(matches!(
            gc(&ds, &FeatureMask::full(2), &cfg(1)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(gc(&ds, &FeatureMask::full(1), &cfg(0)).is_err());
    }

    #[test]
    fn separation_never_hurts() {
        let base = [0.0, 0.3, 0.7, 1.1];
        let mut prev = f64::NEG_INFINITY;
        for step in 0..=20 {
            let s = step as f64 * 0.5;
            let values: Vec<f64> = base.iter().copied().chain(base.iter().map(|v| v + s)).collect();
            let labels = [1, 1, 1, 1, -1, -1, -1, -1];
            let v = gc(&ds_1d(&values, &labels), &FeatureMask::full(1), &cfg(3)).unwrap().gc;
            assert!(v >= prev, "gc dropped at s={s}: {v} < {prev}");
            prev = v;
        }
    }
}
