use serde::{Deserialize, Serialize};

use crate::nn::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Brute-force Euclidean k-nearest-neighbor vote. The score is the fraction
/// of positive labels among the `k` nearest training rows; distance ties go
/// to the lower training index.
#[derive(Clone, Debug, PartialEq)]
pub struct Knn {
    x: Matrix,
    y: Vec<u8>,
    k: usize,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[u8], params: &KnnParams) -> Self {
        Self {
            x: x.clone(),
            y: y.to_vec(),
            k: params.k.min(x.rows()).max(1),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .x
            .row_iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
        }
        let pos = d[..self.k].iter().filter(|&&(_, i)| self.y[i] == 1).count();
        pos as f64 / self.k as f64
    }
}
