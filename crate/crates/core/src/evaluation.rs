//! Classifier-based judgement of a feature subset: a k-nearest-neighbour
//! reference classifier scored by accuracy `a`, Cohen's kappa `K`, ROC AUC `r`
//! and their mean `η = (a + K + r) / 3`.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

pub const DEFAULT_K: usize = 5;

/// Rows are actual classes, columns predicted classes, both in `class_ids` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_ids: Vec<i64>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_predictions(class_ids: Vec<i64>, actual: &[i64], predicted: &[i64]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: actual.len(),
                found: predicted.len(),
            });
        }
        let k = class_ids.len();
        let mut counts = vec![vec![0usize; k]; k];
        let pos = |c: i64| class_ids.binary_search(&c).map_err(|_| Error::UnknownClass(c));
        for (&a, &p) in actual.iter().zip(predicted) {
            counts[pos(a)?][pos(p)?] += 1;
        }
        Ok(Self { class_ids, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucMethod {
    Binary,
    /// Unweighted mean of one-vs-rest AUCs.
    OneVsRestMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub a: f64,
    pub kappa: f64,
    pub auc: f64,
    pub eta: f64,
    pub confusion: ConfusionMatrix,
    pub dimension: usize,
    pub auc_method: AucMethod,
}

/// Per-class vote fractions among the k nearest training samples.
struct Votes {
    class_ids: Vec<i64>,
    fractions: Vec<Vec<f64>>,
}

fn knn_votes(train: &Dataset, test: &Dataset, mask: &FeatureMask, k: usize) -> Result<Votes> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if train.n_samples() == 0 {
        return Err(Error::EmptyTrain);
    }
    for ds in [train, test] {
        if mask.len() != ds.n_features() {
            return Err(Error::DimensionMismatch {
                expected: ds.n_features(),
                found: mask.len(),
            });
        }
    }
    if mask.none_selected() {
        return Err(Error::EmptyMask);
    }
    let cols = mask.selected();
    let class_ids = train.class_ids().to_vec();
    let k_eff = k.min(train.n_samples());
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(train.n_samples());
    let mut fractions = Vec::with_capacity(test.n_samples());
    for t in test.samples().rows() {
        dists.clear();
        for (i, r) in train.samples().rows().into_iter().enumerate() {
            let d2: f64 = cols.iter().map(|&j| (t[j] - r[j]) * (t[j] - r[j])).sum();
            dists.push((d2, i));
        }
        dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut counts = vec![0usize; class_ids.len()];
        for &(_, i) in &dists[..k_eff] {
            counts[train.class_index(train.labels()[i]).expect("train label")] += 1;
        }
        fractions.push(counts.iter().map(|&c| c as f64 / k_eff as f64).collect());
    }
    Ok(Votes { class_ids, fractions })
}

impl Votes {
    /// Majority class; ties go to the larger class id.
    fn predictions(&self) -> Vec<i64> {
        self.fractions
            .iter()
            .map(|f| {
                let mut best = 0;
                for (c, &v) in f.iter().enumerate() {
                    if v >= f[best] {
                        best = c;
                    }
                }
                self.class_ids[best]
            })
            .collect()
    }

    fn scores_for(&self, class_pos: usize) -> Vec<f64> {
        self.fractions.iter().map(|f| f[class_pos]).collect()
    }
}

/// k-NN labels and, for the positive (largest) class id, the fraction of the
/// k neighbours voting for it.
pub fn knn_predict(
    train: &Dataset,
    test: &Dataset,
    mask: &FeatureMask,
    k: usize,
) -> Result<(Vec<i64>, Vec<f64>)> {
    let votes = knn_votes(train, test, mask, k)?;
    let positive = votes.class_ids.len() - 1;
    Ok((votes.predictions(), votes.scores_for(positive)))
}

/// Cohen's kappa; 0 when chance agreement is already perfect.
pub fn kappa(c: &ConfusionMatrix) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::InvalidConfig("empty confusion matrix".into()));
    }
    let n = total as f64;
    let k = c.counts.len();
    let p_o = c.trace() as f64 / n;
    let p_e: f64 = (0..k)
        .map(|i| {
            let row: usize = c.counts[i].iter().sum();
            let col: usize = c.counts.iter().map(|r| r[i]).sum();
            row as f64 * col as f64
        })
        .sum::<f64>()
        / (n * n);
    if p_e >= 1.0 {
        return Ok(0.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Mann–Whitney estimate of P(score_pos > score_neg), ties counting one half.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: positive.len(),
        });
    }
    let pos: Vec<f64> = scores.iter().zip(positive).filter(|p| *p.1).map(|p| *p.0).collect();
    let neg: Vec<f64> = scores.iter().zip(positive).filter(|p| !*p.1).map(|p| *p.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::MissingClass);
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

/// Composite indicator; `a` is a fraction, not a percentage.
pub fn eta(a: f64, kappa: f64, auc: f64) -> f64 {
    (a + kappa + auc) / 3.0
}

/// Trains k-NN on `train` restricted to `mask` and scores it on `test`.
pub fn evaluate_subset(train: &Dataset, test: &Dataset, mask: &FeatureMask, k: usize) -> Result<MetricsReport> {
    let votes = knn_votes(train, test, mask, k)?;
    let predicted = votes.predictions();
    let class_ids: Vec<i64> = train
        .class_ids()
        .iter()
        .chain(test.class_ids())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let confusion = ConfusionMatrix::from_predictions(class_ids, test.labels(), &predicted)?;
    let a = confusion.accuracy();
    let kappa = kappa(&confusion)?;

    let (auc, auc_method) = if votes.class_ids.len() == 2 {
        let positive = votes.class_ids[1];
        let is_pos: Vec<bool> = test.labels().iter().map(|&l| l == positive).collect();
        (auc(&votes.scores_for(1), &is_pos)?, AucMethod::Binary)
    } else {
        let mut per_class = Vec::new();
        for (c, &class) in votes.class_ids.iter().enumerate() {
            let is_pos: Vec<bool> = test.labels().iter().map(|&l| l == class).collect();
            match auc(&votes.scores_for(c), &is_pos) {
                Ok(v) => per_class.push(v),
                Err(Error::MissingClass) => continue,
                Err(e) => return Err(e),
            }
        }
        if per_class.is_empty() {
            return Err(Error::MissingClass);
        }
        (
            per_class.iter().sum::<f64>() / per_class.len() as f64,
            AucMethod::OneVsRestMean,
        )
    };
    Ok(MetricsReport {
        a,
        kappa,
        auc,
        eta: eta(a, kappa, auc),
        confusion,
        dimension: mask.count_ones(),
        auc_method,
    })
}

/// Batch rows `mask_hex, dimension, a, kappa, auc, eta`.
pub fn write_batch_csv<W: Write>(rows: &[(FeatureMask, MetricsReport)], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["mask_hex", "dimension", "a", "kappa", "auc", "eta"])?;
    for (mask, r) in rows {
        wtr.write_record([
            mask.to_hex(),
            r.dimension.to_string(),
            r.a.to_string(),
            r.kappa.to_string(),
            r.auc.to_string(),
            r.eta.to_string(),
        ])?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<metrics csv>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_clusters, SynthSpec};
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn ds(values: Array2<f64>, labels: Vec<i64>) -> Dataset {
        let names = (0..values.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(values, labels, names).unwrap()
    }

    fn cm(counts: Vec<Vec<usize>>) -> ConfusionMatrix {
        ConfusionMatrix {
            class_ids: (0..counts.len() as i64).collect(),
            counts,
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(&cm(vec![vec![7, 0], vec![0, 3]])).unwrap(), 1.0);
        assert!((kappa(&cm(vec![vec![40, 10], vec![5, 45]])).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(kappa(&cm(vec![vec![50, 0], vec![50, 0]])).unwrap(), 0.0);
        assert_eq!(kappa(&cm(vec![vec![9, 0], vec![0, 0]])).unwrap(), 0.0);
        assert!(kappa(&cm(vec![vec![0, 0], vec![0, 0]])).is_err());
    }

    #[test]
    fn auc_examples() {
        let lab = [true, true, false, false];
        assert_eq!(auc(&[0.9, 0.8, 0.7, 0.1], &lab).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.4, 0.6, 0.1], &lab).unwrap(), 0.75);
        assert_eq!(auc(&[0.3; 4], &lab).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(Error::MissingClass)));
    }

    #[test]
    fn eta_examples() {
        assert!((eta(0.9866, 0.973, 0.9869) - 0.9822).abs() < 5e-5);
        assert!((eta(0.9813, 0.962, 0.9832) - 0.9755).abs() < 5e-5);
        assert_eq!(eta(1.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn knn_single_training_point() {
        let train = Dataset::new(array![[0.0], [100.0]], vec![1, -1], vec!["x".into()]).unwrap();
        let test = ds(array![[3.0], [-5.0], [1.0]], vec![1, -1, 1]);
        let (labels, _) = knn_predict(&train, &test, &FeatureMask::full(1), 1).unwrap();
        assert_eq!(labels, vec![1, 1, 1]);
    }

    #[test]
    fn knn_votes_and_scores() {
        let train = ds(array![[0.0], [0.1], [0.2], [5.0], [5.1]], vec![1, 1, -1, -1, -1]);
        let test = ds(array![[0.0], [5.05]], vec![1, -1]);
        let (labels, scores) = knn_predict(&train, &test, &FeatureMask::full(1), 3).unwrap();
        assert_eq!(labels[0], 1);
        assert!((scores[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(labels[1], -1);

        let (labels, _) = knn_predict(&train, &test, &FeatureMask::full(1), 1).unwrap();
        assert_eq!(labels, vec![1, -1]);
    }

    #[test]
    fn knn_vote_tie_goes_positive() {
        let train = ds(array![[0.0], [1.0]], vec![-1, 1]);
        let test = ds(array![[0.4], [0.6]], vec![-1, 1]);
        let (labels, scores) = knn_predict(&train, &test, &FeatureMask::full(1), 2).unwrap();
        assert_eq!(labels, vec![1, 1]);
        assert_eq!(scores, vec![0.5, 0.5]);
    }

    #[test]
    fn memorization_is_perfect() {
        let data = synth_clusters(&SynthSpec::standard_benchmark(), 1).unwrap();
        let r = evaluate_subset(&data, &data, &FeatureMask::full(10), 1).unwrap();
        assert_eq!((r.a, r.kappa, r.auc, r.eta), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(r.confusion.total(), 200);
    }

    #[test]
    fn informative_subset_beats_noise() {
        let data = synth_clusters(&SynthSpec::standard_benchmark(), 3).unwrap();
        let (train, test) = crate::dataset::split(&data, 0.66, 3).unwrap();
        let inf = FeatureMask::from_indices(10, &data.informative_features());
        let noise = FeatureMask::from_bits(inf.bits().iter().map(|b| !b).collect());
        let good = evaluate_subset(&train, &test, &inf, DEFAULT_K).unwrap();
        let bad = evaluate_subset(&train, &test, &noise, DEFAULT_K).unwrap();
        assert!(good.eta > 0.95, "{}", good.eta);
        assert!(bad.eta < good.eta);
        assert_eq!(good.dimension, 3);
        assert!((good.eta - (good.a + good.kappa + good.auc) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn multiclass_uses_one_vs_rest() {
        let train = ds(array![[0.0], [0.1], [5.0], [5.1], [10.0], [10.1]], vec![0, 0, 1, 1, 2, 2]);
        let r = evaluate_subset(&train, &train, &FeatureMask::full(1), 1).unwrap();
        assert_eq!(r.auc_method, AucMethod::OneVsRestMean);
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.confusion.counts.len(), 3);
    }

    #[test]
    fn batch_csv_header() {
        let data = synth_clusters(&SynthSpec::standard_benchmark(), 1).unwrap();
        let m = FeatureMask::full(10);
        let r = evaluate_subset(&data, &data, &m, 1).unwrap();
        let mut buf = Vec::new();
        write_batch_csv(&[(m, r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mask_hex,dimension,a,kappa,auc,eta\n3ff,10,1,1,1,1"));
    }

    fn direct_kappa(c: &[Vec<usize>]) -> f64 {
        let n: usize = c.iter().flatten().sum();
        let n = n as f64;
        let k = c.len();
        let agree: usize = (0..k).map(|i| c[i][i]).sum();
        let mut chance = 0.0;
        for i in 0..k {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..k {
                row += c[i][j] as f64;
                col += c[j][i] as f64;
            }
            chance += (row / n) * (col / n);
        }
        if chance >= 1.0 {
            0.0
        } else {
            (agree as f64 / n - chance) / (1.0 - chance)
        }
    }

    proptest! {
        #[test]
        fn kappa_matches_direct_formula(counts in prop::collection::vec(0usize..50, 9)) {
            prop_assume!(counts.iter().sum::<usize>() > 0);
            let m: Vec<Vec<usize>> = counts.chunks(3).map(|c| c.to_vec()).collect();
            let got = kappa(&cm(m.clone())).unwrap();
            prop_assert!((got - direct_kappa(&m)).abs() < 1e-12);
            prop_assert!(got <= 1.0 + 1e-12);
        }

        #[test]
        fn auc_invariant_under_monotone_transform(
            scores in prop::collection::vec(0.0f64..1.0, 2..40),
            flags in prop::collection::vec(any::<bool>(), 40),
        ) {
            let labels: Vec<bool> = flags[..scores.len()].to_vec();
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let base = auc(&scores, &labels).unwrap();
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 7.0).collect();
            prop_assert_eq!(auc(&warped, &labels).unwrap(), base);
            let flipped: Vec<bool> = labels.iter().map(|b| !b).collect();
            prop_assert!((auc(&scores, &flipped).unwrap() - (1.0 - base)).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_class_ids_preserves_accuracy_and_kappa() {
        let data = synth_clusters(
            &SynthSpec {
                n_informative: 1,
                n_noise: 2,
                samples_per_class: 30,
                cluster_separation: 1.5,
                noise_std: 1.0,
            },
            6,
        )
        .unwrap();
        let (train, test) = crate::dataset::split(&data, 0.6, 2).unwrap();
        let swap = |d: &Dataset| {
            Dataset::new(
                d.samples().clone(),
                d.labels().iter().map(|l| -l).collect(),
                d.feature_names().to_vec(),
            )
            .unwrap()
        };
        let m = FeatureMask::full(3);
        // k odd: no vote ties, so the tie-break direction cannot differ.
        let r1 = evaluate_subset(&train, &test, &m, 5).unwrap();
        let r2 = evaluate_subset(&swap(&train), &swap(&test), &m, 5).unwrap();
        assert_eq!(r1.a, r2.a);
        assert!((r1.kappa - r2.kappa).abs() < 1e-12);
        assert!((r1.auc - r2.auc).abs() < 1e-12);
    }
}
