//! Train/evaluation split plans.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SplitKind {
    /// Leave one series out.
    Loso,
    Kfold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fold {
    pub train: Vec<String>,
    pub eval: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitPlan {
    pub kind: SplitKind,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub seed: Option<u64>,
    pub folds: Vec<Fold>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub warnings: Vec<String>,
}

impl SplitPlan {
    /// Display name of fold `i`: the held-out series for leave-one-series-out
    /// plans, `fold-<i+1>` otherwise.
    pub fn fold_name(&self, corpus: &Corpus, i: usize) -> String {
        match self.kind {
            SplitKind::Loso => self.folds[i]
                .eval
                .first()
                .and_then(|id| corpus.get(id))
                .map(|r| r.series.clone())
                .unwrap_or_else(|| format!("fold-{}", i + 1)),
            SplitKind::Kfold => format!("fold-{}", i + 1),
        }
    }
}

/// One fold per distinct series, in lexicographic series order. Ids keep
/// corpus order inside each list.
pub fn leave_one_series_out(corpus: &Corpus) -> SplitPlan {
    let mut by_series: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for r in &corpus.records {
        by_series.entry(r.series.as_str()).or_default().push(r.id.clone());
    }
    let mut warnings = Vec::new();
    if by_series.len() == 1 {
        warnings.push(String::from("single series: the only fold has an empty training set"));
    }
    let folds = by_series
        .keys()
        .map(|&held_out| Fold {
            train: corpus
                .records
                .iter()
                .filter(|r| r.series != held_out)
                .map(|r| r.id.clone())
                .collect(),
            eval: by_series[held_out].clone(),
        })
        .collect();
    SplitPlan { kind: SplitKind::Loso, seed: None, folds, warnings }
}

/// Seeded shuffle, then `k` contiguous folds whose sizes differ by at most
/// one (the first `n mod k` folds take the extra record). Series are ignored.
pub fn kfold_cross_series(corpus: &Corpus, k: usize, seed: u64) -> SplitPlan {
    let k = k.max(1);
    let mut ids: Vec<String> = corpus.records.iter().map(|r| r.id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_prefix(&mut ids, usize::MAX, &mut rng);

    let mut warnings = Vec::new();
    if k == 1 {
        warnings.push(String::from("k = 1: evaluation covers everything, training is empty"));
    }
    if k > ids.len() {
        warnings.push(format!("k = {k} exceeds {} records: some folds are empty", ids.len()));
    }

    let n = ids.len();
    let (base, extra) = (n / k, n % k);
    let mut bounds = Vec::with_capacity(k + 1);
    bounds.push(0);
    for i in 0..k {
        bounds.push(bounds[i] + base + usize::from(i < extra));
    }
    let folds = (0..k)
        .map(|i| {
            let (lo, hi) = (bounds[i], bounds[i + 1]);
            Fold {
                train: ids[..lo].iter().chain(&ids[hi..]).cloned().collect(),
                eval: ids[lo..hi].to_vec(),
            }
        })
        .collect();
    SplitPlan { kind: SplitKind::Kfold, seed: Some(seed), folds, warnings }
}

/// Partial Fisher-Yates: after the call the first `min(k, len)` items are a
/// uniform sample without replacement, and the sample for a smaller `k` is
/// a prefix of the sample for a larger one.
pub fn shuffle_prefix<T, R: Rng>(items: &mut [T], k: usize, rng: &mut R) {
    let n = items.len();
    for i in 0..k.min(n.saturating_sub(1)) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NarrativeRecord;
    use alloc::collections::BTreeSet;

    fn corpus(series: &[(&str, usize)]) -> Corpus {
        let mut records = Vec::new();
        for (name, n) in series {
            for i in 0..*n {
                records.push(NarrativeRecord {
                    id: format!("{name}-{i:04}"),
                    series: String::from(*name),
                    dreamer: None,
                    text: String::new(),
                    gold: None,
                });
            }
        }
        Corpus::new(records)
    }

    #[test]
    fn loso_partitions() {
        let c = corpus(&[("ed", 3), ("bea1", 2), ("emma", 4)]);
        let plan = leave_one_series_out(&c);
        assert_eq!(plan.folds.len(), 3);
        assert_eq!(plan.fold_name(&c, 0), "bea1");
        assert_eq!(plan.fold_name(&c, 2), "emma");
        let mut seen = BTreeSet::new();
        for fold in &plan.folds {
            assert_eq!(fold.train.len() + fold.eval.len(), c.len());
            for id in &fold.eval {
                assert!(seen.insert(id.clone()));
                assert!(!fold.train.contains(id));
            }
        }
        assert_eq!(seen.len(), c.len());
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn loso_single_series() {
        let plan = leave_one_series_out(&corpus(&[("ed", 3)]));
        assert_eq!(plan.folds.len(), 1);
        assert!(plan.folds[0].train.is_empty());
        assert_eq!(plan.warnings.len(), 1);
    }

    #[test]
    fn kfold_sizes() {
        let c = corpus(&[("x", 1766)]);
        let plan = kfold_cross_series(&c, 5, 7);
        let sizes: Vec<_> = plan.folds.iter().map(|f| f.eval.len()).collect();
        assert_eq!(sizes, [354, 353, 353, 353, 353]);
        assert_eq!(plan, kfold_cross_series(&c, 5, 7));
        assert_ne!(plan.folds[0].eval, kfold_cross_series(&c, 5, 8).folds[0].eval);
    }

    #[test]
    fn kfold_single_fold() {
        let c = corpus(&[("x", 4)]);
        let plan = kfold_cross_series(&c, 1, 0);
        assert_eq!(plan.folds[0].eval.len(), 4);
        assert!(plan.folds[0].train.is_empty());
        assert!(!plan.warnings.is_empty());
    }

    #[test]
    fn prefix_sampling() {
        let base: Vec<u32> = (0..50).collect();
        let draw = |k| {
            let mut v = base.clone();
            shuffle_prefix(&mut v, k, &mut ChaCha8Rng::seed_from_u64(3));
            v[..k].to_vec()
        };
        let five = draw(5);
        assert_eq!(draw(3), five[..3]);
        assert_eq!(draw(1), five[..1]);
    }
}
