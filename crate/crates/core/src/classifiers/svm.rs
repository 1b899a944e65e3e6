use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50 }
    }
}

/// Linear soft-margin SVM trained with Pegasos stochastic subgradient steps.
///
/// Minimizes `λ/2 |w|² + mean(hinge)` with `λ = 1 / (C n)`. The bias is a
/// constant feature and is regularized with the weights. The returned
/// weights are the average of the iterates over the final half of training.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    w: Vec<f64>,
    b: f64,
}

impl LinearSvm {
    pub fn fit(x: &Matrix, y: &[u8], params: &SvmParams, rng: &mut SeededRng) -> Self {
        let n = x.rows();
        let d = x.cols();
        let lambda = 1.0 / (params.c * n as f64);
        let mut w = vec![0.0; d + 1];
        let mut avg = vec![0.0; d + 1];
        let mut averaged = 0usize;
        let total = params.epochs * n;
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0usize;
        for _ in 0..params.epochs {
            rng.shuffle(&mut order);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let label = if y[i] == 1 { 1.0 } else { -1.0 };
                let row = x.row(i);
                let margin = label * (row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d]);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(row) {
                        *wj += eta * label * xj;
                    }
                    w[d] += eta * label;
                }
                if 2 * t > total {
                    averaged += 1;
                    for (a, v) in avg.iter_mut().zip(&w) {
                        *a += v;
                    }
                }
            }
        }
        let k = averaged.max(1) as f64;
        avg.iter_mut().for_each(|a| *a /= k);
        let b = avg.pop().unwrap();
        Self { w: avg, b }
    }

    /// Signed margin `w·x + b`.
    pub fn score(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.b
    }
}
