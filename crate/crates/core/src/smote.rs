//! SMOTE oversampling.
//!
//! Base rows are visited in index order, cycling as often as needed, so each
//! minority row seeds `n_needed / rows` synthetic rows (±1). Each synthetic
//! row is `p + λ(q − p)` with `q` drawn uniformly from `p`'s `k` nearest
//! minority neighbors (Euclidean, ties to the lower row index) and `λ`
//! uniform on `[0, 1)`.

use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::rng::SeededRng;

#[derive(Debug, thiserror::Error)]
pub enum SmoteError {
    #[error("rejected input: {0}")]
    Rejected(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteParams {
    pub k: usize,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self { k: 5, seed: 0 }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other rows of `row`, nearest first.
pub fn nearest_neighbors(data: &Matrix, row: usize, k: usize) -> Vec<usize> {
    let p = data.row(row);
    let mut cand: Vec<(f64, usize)> = (0..data.rows())
        .filter(|&j| j != row)
        .map(|j| (sq_dist(p, data.row(j)), j))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(k);
    cand.into_iter().map(|(_, j)| j).collect()
}

pub fn smote(minority: &Matrix, n_needed: usize, params: SmoteParams) -> Result<Matrix, SmoteError> {
    let n = minority.rows();
    if n < 2 {
        return Err(SmoteError::Rejected(format!(
            "SMOTE needs at least 2 minority rows, got {n}"
        )));
    }
    if params.k < 1 || params.k > n - 1 {
        return Err(SmoteError::Rejected(format!(
            "k = {} must lie in 1..={} for {n} minority rows",
            params.k,
            n - 1
        )));
    }
    let mut out = Matrix::with_cols(minority.cols());
    if n_needed == 0 {
        return Ok(out);
    }
    let mut rng = SeededRng::new(params.seed);
    // neighbor lists are computed lazily; most calls touch every row anyway
    let mut neighbors: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut synth = vec![0.0; minority.cols()];
    for s in 0..n_needed {
        let base = s % n;
        let nn = neighbors[base].get_or_insert_with(|| nearest_neighbors(minority, base, params.k));
        let q = nn[rng.below(nn.len())];
        let lambda = rng.uniform();
        let (p, q) = (minority.row(base), minority.row(q));
        for ((o, &a), &b) in synth.iter_mut().zip(p).zip(q) {
            *o = a + lambda * (b - a);
        }
        out.push_row(&synth);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_rows_reproduce_themselves() {
        let m = Matrix::from_rows(&[[0.3, 0.7], [0.3, 0.7]]).unwrap();
        let s = smote(&m, 6, SmoteParams { k: 1, seed: 1 }).unwrap();
        assert_eq!(s.rows(), 6);
        assert!(s.row_iter().all(|r| r == [0.3, 0.7]));
    }

    #[test]
    fn two_point_segment() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let s = smote(&m, 5, SmoteParams { k: 1, seed: 2 }).unwrap();
        for r in s.row_iter() {
            assert!((r[0] - r[1]).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&r[0]));
        }
    }

    #[test]
    fn zero_needed_is_empty() {
        let m = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let s = smote(&m, 0, SmoteParams { k: 1, seed: 0 }).unwrap();
        assert_eq!(s.shape(), (0, 1));
    }

    #[test]
    fn rejects_bad_k_and_tiny_sets() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        assert!(smote(&m, 3, SmoteParams { k: 3, seed: 0 }).is_err());
        assert!(smote(&m, 3, SmoteParams { k: 0, seed: 0 }).is_err());
        let one = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(smote(&one, 3, SmoteParams { k: 1, seed: 0 }).is_err());
    }

    #[test]
    fn neighbor_ties_prefer_lower_index() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [-1.0], [1.0]]).unwrap();
        assert_eq!(nearest_neighbors(&m, 0, 2), vec![1, 2]);
        assert_eq!(nearest_neighbors(&m, 1, 1), vec![3]);
    }

    #[test]
    fn base_rows_cycle_in_order() {
        // with k=1 and distinct 1-D points, row s has base s % n and lies
        // between the base and its single neighbor
        let m = Matrix::from_rows(&[[0.0], [0.1], [0.5]]).unwrap();
        let s = smote(&m, 6, SmoteParams { k: 1, seed: 3 }).unwrap();
        let segments: [(f64, f64); 3] = [(0.0, 0.1), (0.1, 0.0), (0.5, 0.1)];
        for (i, r) in s.row_iter().enumerate() {
            let (a, b) = segments[i % 3];
            let (lo, hi) = (a.min(b), a.max(b));
            assert!(r[0] >= lo && r[0] <= hi, "row {i} = {}", r[0]);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let m = Matrix::from_rows(&[[0.1, 0.2], [0.4, 0.1], [0.9, 0.5], [0.3, 0.3]]).unwrap();
        let p = SmoteParams { k: 2, seed: 11 };
        assert_eq!(smote(&m, 17, p).unwrap(), smote(&m, 17, p).unwrap());
    }
}
