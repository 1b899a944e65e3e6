//! CART trees shared by the random forest (Gini) and gradient boosting
//! (squared error).
//!
//! A node splits only when the weighted impurity of its children is strictly
//! below its own. Among equally good splits the lowest feature index wins,
//! then the lowest threshold. Rows go left when `x[feature] <= threshold`.

use crate::nn::Matrix;
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Targets are 0/1 class labels.
    Gini,
    /// Targets are real-valued.
    SquaredError,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all of them.
    pub max_features: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        impurity: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity: f64,
        /// Sample-weighted mean impurity of the two children.
        children_impurity: f64,
        samples: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

struct Stats {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn impurity(&self, c: Criterion) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        let mean = self.sum / self.n;
        match c {
            Criterion::Gini => 2.0 * mean * (1.0 - mean),
            Criterion::SquaredError => (self.sum_sq / self.n - mean * mean).max(0.0),
        }
    }
}

fn stats(targets: &[f64], rows: &[usize]) -> Stats {
    let mut s = Stats { n: 0.0, sum: 0.0, sum_sq: 0.0 };
    for &r in rows {
        let t = targets[r];
        s.n += 1.0;
        s.sum += t;
        s.sum_sq += t * t;
    }
    s
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    targets: &'a [f64],
    criterion: Criterion,
    params: TreeParams,
    rng: &'a mut SeededRng,
    nodes: Vec<Node>,
    order: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn candidate_features(&mut self, rows: &[usize]) -> Vec<usize> {
        let d = self.x.cols();
        let is_constant = |f: usize| {
            let v0 = self.x[(rows[0], f)];
            rows.iter().all(|&r| self.x[(r, f)] == v0)
        };
        match self.params.max_features {
            None => (0..d).filter(|&f| !is_constant(f)).collect(),
            Some(m) => {
                let mut perm: Vec<usize> = (0..d).collect();
                self.rng.shuffle(&mut perm);
                let mut chosen = Vec::with_capacity(m);
                for f in perm {
                    if chosen.len() == m {
                        break;
                    }
                    if !is_constant(f) {
                        chosen.push(f);
                    }
                }
                chosen.sort_unstable();
                chosen
            }
        }
    }

    fn best_split(&mut self, rows: &[usize], features: &[usize]) -> Option<Best> {
        let n = rows.len() as f64;
        let mut best: Option<Best> = None;
        for &f in features {
            self.order.clear();
            self.order
                .extend(rows.iter().map(|&r| (self.x[(r, f)], self.targets[r])));
            self.order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let total_sum: f64 = self.order.iter().map(|p| p.1).sum();
            let total_sq: f64 = self.order.iter().map(|p| p.1 * p.1).sum();
            let (mut ls, mut lsq) = (0.0, 0.0);
            for i in 0..self.order.len() - 1 {
                let (v, t) = self.order[i];
                ls += t;
                lsq += t * t;
                let next = self.order[i + 1].0;
                if next <= v {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = n - nl;
                let left = Stats { n: nl, sum: ls, sum_sq: lsq };
                let right = Stats { n: nr, sum: total_sum - ls, sum_sq: total_sq - lsq };
                let score = (nl * left.impurity(self.criterion) + nr * right.impurity(self.criterion)) / n;
                if best.as_ref().map_or(true, |b| score < b.score) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Best { score, feature: f, threshold });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let s = stats(self.targets, &rows);
        let impurity = s.impurity(self.criterion);
        let value = if s.n > 0.0 { s.sum / s.n } else { 0.0 };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value,
            impurity,
            samples: rows.len(),
        });
        let depth_ok = self.params.max_depth.map_or(true, |m| depth < m);
        if !depth_ok || rows.len() < self.params.min_samples_split || impurity <= 0.0 {
            return id;
        }
        let features = self.candidate_features(&rows);
        let Some(best) = self.best_split(&rows, &features) else {
            return id;
        };
        if !(best.score < impurity) {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&row| self.x[(row, best.feature)] <= best.threshold);
        drop(rows);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            impurity,
            children_impurity: best.score,
            samples: self.node_samples(left) + self.node_samples(right),
        };
        id
    }

    fn node_samples(&self, id: usize) -> usize {
        match &self.nodes[id] {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }
}

impl Tree {
    /// Fits a tree on `rows` of `x` (indices may repeat, as in a bootstrap
    /// sample). Leaf values are target means.
    pub fn fit(
        x: &Matrix,
        targets: &[f64],
        rows: Vec<usize>,
        criterion: Criterion,
        params: TreeParams,
        rng: &mut SeededRng,
    ) -> Tree {
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        let mut b = Builder {
            x,
            targets,
            criterion,
            params,
            rng,
            nodes: Vec::new(),
            order: Vec::new(),
        };
        b.build(rows, 0);
        Tree { nodes: b.nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Index of the leaf `row` falls into.
    pub fn apply(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.apply(row)] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn set_leaf_value(&mut self, leaf: usize, v: f64) {
        if let Node::Leaf { value, .. } = &mut self.nodes[leaf] {
            *value = v;
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    const ALL: TreeParams = TreeParams { max_depth: None, min_samples_split: 2, max_features: None };

    #[test]
    fn stump_threshold_matches_exhaustive_search() {
        let xs = [0.1, 0.35, 0.2, 0.8, 0.9, 0.65];
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let x = column(&xs);
        let params = TreeParams { max_depth: Some(1), ..ALL };
        let t = Tree::fit(&x, &y, (0..6).collect(), Criterion::Gini, params, &mut SeededRng::new(0));
        let Node::Split { threshold, .. } = t.nodes()[0] else { panic!("no split") };
        // exhaustive: any threshold in [0.35, 0.65) separates perfectly;
        // the midpoint between the two classes is chosen
        assert!((threshold - 0.5).abs() < 1e-12);
        assert_eq!(t.predict(&[0.3]), 0.0);
        assert_eq!(t.predict(&[0.7]), 1.0);
    }

    #[test]
    fn pure_node_is_leaf() {
        let x = column(&[0.1, 0.2, 0.3]);
        let t = Tree::fit(&x, &[1.0; 3], vec![0, 1, 2], Criterion::Gini, ALL, &mut SeededRng::new(0));
        assert_eq!(t.nodes().len(), 1);
    }

    #[test]
    fn no_split_without_strict_improvement() {
        // XOR on two features: no single split lowers Gini
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let t = Tree::fit(&x, &y, (0..4).collect(), Criterion::Gini, ALL, &mut SeededRng::new(0));
        assert_eq!(t.nodes().len(), 1);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // both features separate the classes equally well
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let t = Tree::fit(&x, &[0.0, 1.0], vec![0, 1], Criterion::Gini, ALL, &mut SeededRng::new(0));
        let Node::Split { feature, .. } = t.nodes()[0] else { panic!() };
        assert_eq!(feature, 0);
    }

    #[test]
    fn regression_tree_fits_step() {
        let x = column(&[0.0, 0.1, 0.2, 0.8, 0.9]);
        let y = [1.0, 1.0, 1.0, -2.0, -2.0];
        let t = Tree::fit(&x, &y, (0..5).collect(), Criterion::SquaredError, ALL, &mut SeededRng::new(0));
        assert_eq!(t.predict(&[0.05]), 1.0);
        assert_eq!(t.predict(&[0.95]), -2.0);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn every_split_strictly_decreases_impurity() {
        let mut rng = SeededRng::new(4);
        let rows: Vec<[f64; 3]> = (0..120).map(|_| [rng.uniform(), rng.uniform(), rng.uniform()]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| f64::from(r[0] + 0.3 * r[1] + 0.2 * rng.uniform() > 0.7))
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let params = TreeParams { max_features: Some(2), ..ALL };
        let t = Tree::fit(&x, &y, (0..120).collect(), Criterion::Gini, params, &mut rng);
        let mut splits = 0;
        for n in t.nodes() {
            if let Node::Split { impurity, children_impurity, .. } = n {
                assert!(children_impurity < impurity);
                splits += 1;
            }
        }
        assert!(splits > 3);
        // unlimited depth drives training rows to pure leaves
        for (r, &label) in rows.iter().zip(&y) {
            assert_eq!(t.predict(r), label);
        }
    }
}
