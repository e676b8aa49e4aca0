//! Stratified train/test splitting and class balancing by duplication.
//!
//! The test partition is carved out first, per class, and only the remaining
//! training partition is balanced. Balancing before splitting lets copies of
//! one pixel land on both sides; [`leakage_overlap`] measures that.

use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;

use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: PixelDataset,
    pub test: PixelDataset,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancePlan {
    /// Size of the largest class; every class is grown to this.
    pub target_count: usize,
    /// `(class, duplicates to add)` for every class present.
    pub per_class_duplicates: Vec<(u32, usize)>,
}

/// Number of test records for a class of `n` records: `ceil(fraction * n)`.
///
/// Products that land on an integer up to floating-point noise (e.g.
/// `0.2 * 1070`) are not bumped to the next integer.
pub fn test_count(n: usize, fraction: f64) -> usize {
    let x = fraction * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).min(n)
}

/// Per class, `test_count(n_c, test_fraction)` records drawn uniformly
/// without replacement go to the test partition. Both partitions keep the
/// input record order.
pub fn stratified_split(ds: &PixelDataset, test_fraction: f64, seed: u64) -> Result<SplitResult> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if ds.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let groups = ds.indices_by_class();
    if let Some(c) = groups.iter().position(|g| g.is_empty()) {
        return Err(Error::invalid(format!("class {} has no records", c + 1)));
    }

    let mut rng = rng::seeded(seed);
    let mut in_test = vec![false; ds.len()];
    for group in &groups {
        let k = test_count(group.len(), test_fraction);
        for j in index::sample(&mut rng, group.len(), k) {
            in_test[group[j]] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_test[i]);
    Ok(SplitResult {
        train: ds.select(&train_idx),
        test: ds.select(&test_idx),
        seed,
    })
}

pub fn balance_plan(train: &PixelDataset) -> Result<BalancePlan> {
    if train.is_empty() {
        return Err(Error::invalid("cannot balance an empty dataset"));
    }
    let counts = train.class_counts();
    let target_count = counts.iter().copied().max().unwrap_or(0);
    let per_class_duplicates = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(c, &n)| (c as u32 + 1, target_count - n))
        .collect();
    Ok(BalancePlan {
        target_count,
        per_class_duplicates,
    })
}

/// Grows every present class to the size of the largest one by appending
/// copies of its own records, drawn uniformly with replacement. Originals
/// come first in their input order; copies follow, class by class, and keep
/// their source `pixel_index`. Classes with no records stay absent.
pub fn balance_by_duplication(train: &PixelDataset, seed: u64) -> Result<PixelDataset> {
    let plan = balance_plan(train)?;
    let groups = train.indices_by_class();
    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for &(class, dups) in &plan.per_class_duplicates {
        let group = &groups[class as usize - 1];
        order.extend((0..dups).map(|_| group[rng.random_range(0..group.len())]));
    }
    Ok(train.select(&order))
}

/// Number of (train, test) record pairs that share a pixel index.
pub fn leakage_overlap(train: &PixelDataset, test: &PixelDataset) -> u64 {
    let mut test_counts: HashMap<usize, u64> = HashMap::new();
    for &p in test.pixel_indices() {
        *test_counts.entry(p).or_default() += 1;
    }
    train
        .pixel_indices()
        .iter()
        .map(|p| test_counts.get(p).copied().unwrap_or(0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn toy(counts: &[usize]) -> PixelDataset {
        let mut ds = PixelDataset::empty(2, counts.len() as u32);
        let mut p = 0;
        for (c, &n) in counts.iter().enumerate() {
            for k in 0..n {
                ds.push(&[c as f64, k as f64], c as u32 + 1, p).unwrap();
                p += 1;
            }
        }
        ds
    }

    #[test]
    fn ceil_rule() {
        assert_eq!(test_count(100, 0.2), 20);
        assert_eq!(test_count(46, 0.2), 10);
        assert_eq!(test_count(1070, 0.2), 214);
        assert_eq!(test_count(18649, 0.2), 3730);
        assert_eq!(test_count(1, 0.2), 1);
    }

    #[test]
    fn split_exact_fraction() {
        let s = stratified_split(&toy(&[100]), 0.2, 1).unwrap();
        assert_eq!(s.test.len(), 20);
        assert_eq!(s.train.len(), 80);
    }

    #[test]
    fn split_partitions_indices() {
        let ds = toy(&[13, 40, 7]);
        let s = stratified_split(&ds, 0.2, 9).unwrap();
        let train: HashSet<_> = s.train.pixel_indices().iter().copied().collect();
        let test: HashSet<_> = s.test.pixel_indices().iter().copied().collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.len() + test.len(), ds.len());
        assert_eq!(s.test.class_counts(), vec![3, 8, 2]);
        assert_eq!(leakage_overlap(&s.train, &s.test), 0);
    }

    #[test]
    fn split_errors() {
        assert!(stratified_split(&toy(&[5, 0, 5]), 0.2, 0).is_err());
        assert!(stratified_split(&PixelDataset::empty(2, 1), 0.2, 0).is_err());
        assert!(stratified_split(&toy(&[5]), 0.0, 0).is_err());
        assert!(stratified_split(&toy(&[5]), 1.0, 0).is_err());
    }

    #[test]
    fn split_is_seeded() {
        let ds = toy(&[1000]);
        let a = stratified_split(&ds, 0.2, 5).unwrap();
        let b = stratified_split(&ds, 0.2, 5).unwrap();
        let c = stratified_split(&ds, 0.2, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.test.pixel_indices(), c.test.pixel_indices());
    }

    #[test]
    fn balance_counts_and_copies() {
        let ds = toy(&[3, 10, 1]);
        let plan = balance_plan(&ds).unwrap();
        assert_eq!(plan.target_count, 10);
        assert_eq!(plan.per_class_duplicates, vec![(1, 7), (2, 0), (3, 9)]);

        let bal = balance_by_duplication(&ds, 4).unwrap();
        assert_eq!(bal.class_counts(), vec![10, 10, 10]);
        assert_eq!(bal.select(&(0..ds.len()).collect::<Vec<_>>()), ds);
        for i in ds.len()..bal.len() {
            let src = bal.pixel_index(i);
            assert_eq!(ds.label(src), bal.label(i));
            assert_eq!(ds.signature(src), bal.signature(i));
        }
    }

    #[test]
    fn balanced_input_unchanged() {
        let ds = toy(&[4, 4]);
        assert_eq!(balance_by_duplication(&ds, 0).unwrap(), ds);
        assert!(balance_by_duplication(&PixelDataset::empty(2, 2), 0).is_err());
    }

    #[test]
    fn disjoint_sets_do_not_leak() {
        let a = toy(&[3]);
        let mut b = PixelDataset::empty(2, 1);
        b.push(&[0.0, 0.0], 1, 100).unwrap();
        assert_eq!(leakage_overlap(&a, &b), 0);
    }

    #[test]
    fn leakage_counts_pairs() {
        let mut train = PixelDataset::empty(1, 1);
        let mut test = PixelDataset::empty(1, 1);
        for p in [1, 1, 2] {
            train.push(&[0.0], 1, p).unwrap();
        }
        for p in [1, 1, 3] {
            test.push(&[0.0], 1, p).unwrap();
        }
        assert_eq!(leakage_overlap(&train, &test), 4);
    }
}
