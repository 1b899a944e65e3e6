use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::SeededRng;

/// Assignment of every row to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

/// Stratified folds: each class is shuffled with the seed and dealt
/// round-robin. Class 1 continues dealing where class 0 stopped, so overall
/// fold sizes also differ by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::Rejected(format!("need at least 2 folds, got {k}")));
    }
    let mut assignment = vec![usize::MAX; labels.len()];
    let mut next = 0usize;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(EvalError::Rejected(format!(
                "class {class} has {} rows, fewer than {k} folds",
                members.len()
            )));
        }
        let mut rng = SeededRng::derived(seed, &["folds", &class.to_string()]);
        rng.shuffle(&mut members);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    if assignment.contains(&usize::MAX) {
        return Err(EvalError::Rejected("labels must be 0 or 1".into()));
    }
    Ok(FoldPlan { k, assignment, seed })
}

impl FoldPlan {
    /// Held-out rows of fold `f`, ascending.
    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == f).collect()
    }

    /// Training rows of fold `f`, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != f).collect()
    }

    /// Per-fold `(class 0, class 1)` counts.
    pub fn class_counts(&self, labels: &[u8]) -> Vec<(usize, usize)> {
        let mut c = vec![(0, 0); self.k];
        for (&f, &l) in self.assignment.iter().zip(labels) {
            if l == 1 {
                c[f].1 += 1;
            } else {
                c[f].0 += 1;
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_division() {
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let plan = stratified_folds(&labels, 10, 3).unwrap();
        assert!(plan.class_counts(&labels).iter().all(|&c| c == (1, 1)));
        assert_eq!(plan, stratified_folds(&labels, 10, 3).unwrap());
    }

    #[test]
    fn small_class_rejected() {
        let mut labels = vec![0u8; 30];
        labels[..5].fill(1);
        assert!(stratified_folds(&labels, 10, 0).is_err());
    }

    proptest! {
        #[test]
        fn spread_at_most_one(labels in proptest::collection::vec(0u8..2, 20..300), k in 2usize..11, seed in any::<u64>()) {
            let pos = labels.iter().filter(|&&l| l == 1).count();
            prop_assume!(pos >= k && labels.len() - pos >= k);
            let plan = stratified_folds(&labels, k, seed).unwrap();
            let counts = plan.class_counts(&labels);
            for side in 0..2 {
                let v: Vec<usize> = counts.iter().map(|c| if side == 0 { c.0 } else { c.1 }).collect();
                prop_assert!(v.iter().max().unwrap() - v.iter().min().unwrap() <= 1);
            }
            let sizes: Vec<usize> = counts.iter().map(|c| c.0 + c.1).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all: Vec<usize> = (0..k).flat_map(|f| plan.test_rows(f)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        }
    }
}
