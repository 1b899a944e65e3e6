use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Tree, TreeParams};
use crate::nn::Matrix;
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
        }
    }
}

/// Gini random forest; scores are the mean leaf positive fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    /// Trees are grown in index order from one stream: each draws its
    /// bootstrap sample first, then its per-split feature subsets.
    pub fn fit(x: &Matrix, y: &[u8], params: &ForestParams, rng: &mut SeededRng) -> Self {
        let targets: Vec<f64> = y.iter().map(|&l| l as f64).collect();
        let n = x.rows();
        let max_features = ((x.cols() as f64).sqrt() as usize).max(1);
        let tp = TreeParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            max_features: Some(max_features),
        };
        let trees = (0..params.n_trees)
            .map(|_| {
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.below(n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(x, &targets, rows, Criterion::Gini, tp, rng)
            })
            .collect();
        Self { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}
