use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Tree, TreeParams};
use crate::nn::{sigmoid, softplus, Matrix};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbcParams {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for GbcParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

/// Logistic-loss gradient boosting with Newton leaf values.
///
/// Starts from the prior log-odds; each stage fits a squared-error tree to
/// the residuals `y - p` and replaces every leaf value with
/// `sum(residual) / sum(p(1 - p))` over the leaf's rows.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
    train_loss: Vec<f64>,
}

fn log_loss(raw: &[f64], y: &[f64]) -> f64 {
    // -[y log p + (1-y) log(1-p)] with p = sigmoid(f)
    raw.iter()
        .zip(y)
        .map(|(&f, &t)| t * softplus(-f) + (1.0 - t) * softplus(f))
        .sum::<f64>()
        / raw.len() as f64
}

impl GradientBoosting {
    pub fn fit(x: &Matrix, y: &[u8], params: &GbcParams, rng: &mut SeededRng) -> Self {
        let n = x.rows();
        let t: Vec<f64> = y.iter().map(|&l| l as f64).collect();
        let pos = t.iter().sum::<f64>() / n as f64;
        let init = (pos / (1.0 - pos)).ln();
        let mut raw = vec![init; n];
        let tp = TreeParams {
            max_depth: Some(params.max_depth),
            min_samples_split: 2,
            max_features: None,
        };
        let mut trees = Vec::with_capacity(params.n_stages);
        let mut train_loss = vec![log_loss(&raw, &t)];
        for _ in 0..params.n_stages {
            let p: Vec<f64> = raw.iter().map(|&f| sigmoid(f)).collect();
            let resid: Vec<f64> = t.iter().zip(&p).map(|(y, p)| y - p).collect();
            let mut tree = Tree::fit(x, &resid, (0..n).collect(), Criterion::SquaredError, tp, rng);
            let leaves: Vec<usize> = x.row_iter().map(|r| tree.apply(r)).collect();
            let mut num = vec![0.0; tree.nodes().len()];
            let mut den = vec![0.0; tree.nodes().len()];
            for i in 0..n {
                num[leaves[i]] += resid[i];
                den[leaves[i]] += p[i] * (1.0 - p[i]);
            }
            for leaf in 0..num.len() {
                let v = if den[leaf].abs() < 1e-150 { 0.0 } else { num[leaf] / den[leaf] };
                tree.set_leaf_value(leaf, v);
            }
            for i in 0..n {
                raw[i] += params.learning_rate * tree.predict(x.row(i));
            }
            train_loss.push(log_loss(&raw, &t));
            trees.push(tree);
        }
        Self {
            init,
            learning_rate: params.learning_rate,
            trees,
            train_loss,
        }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Training log-loss before the first stage and after each stage.
    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }

    /// Raw log-odds.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}
