use super::tree::{Criterion, Node, Tree, TreeParams};
use super::*;
use crate::eval::auc;
use crate::nn::{gradient_check, Loss};

fn blobs(n: usize, d: usize, gap: f64, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = SeededRng::new(seed);
    let mut x = Matrix::with_cols(d);
    let mut y = Vec::new();
    for i in 0..n {
        let label = (i % 2) as u8;
        let shift = if label == 1 { gap } else { 0.0 };
        let row: Vec<f64> = (0..d).map(|_| rng.uniform() * (1.0 - gap) + shift).collect();
        x.push_row(&row);
        y.push(label);
    }
    (x, y)
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[test]
fn every_kind_separates_training_blobs() {
    let (x, y) = blobs(120, 3, 0.5, 1);
    for kind in ClassifierKind::all_defaults() {
        let m = train(&kind, &x, &y, 7).unwrap();
        let s = m.score_batch(&x).unwrap();
        assert_eq!(auc(&s, &y).unwrap(), 1.0, "{kind}");
    }
}

#[test]
fn knn_vote_fraction_on_equidistant_query() {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0]]).unwrap();
    let m = Knn::fit(&x, &[1, 1, 0, 0], &KnnParams { k: 3 });
    assert!((m.score(&[0.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn knn_matches_brute_force_oracle() {
    let (x, y) = blobs(150, 4, 0.05, 2);
    let (q, _) = blobs(40, 4, 0.05, 3);
    let k = 5;
    let m = Knn::fit(&x, &y, &KnnParams { k });
    for r in q.row_iter() {
        let mut d: Vec<(f64, usize)> = x.row_iter().enumerate().map(|(i, t)| (sq(t, r), i)).collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let votes = d[..k].iter().filter(|(_, i)| y[*i] == 1).count();
        let s = m.score(r);
        assert_eq!(s, votes as f64 / k as f64);
        assert!((s * k as f64).fract() == 0.0);
    }
}

#[test]
fn single_stump_splits_between_classes() {
    // 1-D data, class 0 below 0.4 and class 1 above 0.6
    let xs = [0.1, 0.25, 0.4, 0.6, 0.75, 0.9];
    let x = Matrix::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
    let y = [0u8, 0, 0, 1, 1, 1];
    let p = ForestParams {
        n_trees: 1,
        max_depth: Some(1),
        bootstrap: false,
        ..ForestParams::default()
    };
    let f = RandomForest::fit(&x, &y, &p, &mut SeededRng::new(0));
    match &f.trees()[0].nodes()[0] {
        Node::Split { feature, threshold, .. } => {
            assert_eq!(*feature, 0);
            assert!((threshold - 0.5).abs() < 1e-15);
        }
        n => panic!("expected a split, got {n:?}"),
    }
    // exhaustive oracle: the best midpoint has zero child impurity
    let gini = |ys: &[u8]| {
        let p = ys.iter().filter(|&&v| v == 1).count() as f64 / ys.len() as f64;
        2.0 * p * (1.0 - p)
    };
    let best = (1..xs.len())
        .map(|i| {
            let w = (i as f64 * gini(&y[..i]) + (6 - i) as f64 * gini(&y[i..])) / 6.0;
            (w, (xs[i - 1] + xs[i]) / 2.0)
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();
    assert_eq!(best.1, 0.5);
}

fn node_rows(tree: &Tree, x: &Matrix, rows: &[usize]) -> Vec<Vec<usize>> {
    let mut per = vec![Vec::new(); tree.nodes().len()];
    for &r in rows {
        let mut id = 0;
        loop {
            per[id].push(r);
            match &tree.nodes()[id] {
                Node::Leaf { .. } => break,
                Node::Split { feature, threshold, left, right, .. } => {
                    id = if x[(r, *feature)] <= *threshold { *left } else { *right };
                }
            }
        }
    }
    per
}

fn impurity(c: Criterion, t: &[f64]) -> f64 {
    let n = t.len() as f64;
    let m = t.iter().sum::<f64>() / n;
    match c {
        Criterion::Gini => 1.0 - m * m - (1.0 - m) * (1.0 - m),
        Criterion::SquaredError => t.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n,
    }
}

fn assert_strict_decrease(tree: &Tree, x: &Matrix, targets: &[f64], rows: &[usize], c: Criterion) {
    let per = node_rows(tree, x, rows);
    for (id, node) in tree.nodes().iter().enumerate() {
        if let Node::Split { left, right, .. } = node {
            let t = |rs: &[usize]| rs.iter().map(|&r| targets[r]).collect::<Vec<_>>();
            let n = per[id].len() as f64;
            let parent = impurity(c, &t(&per[id]));
            let (l, r) = (&per[*left], &per[*right]);
            assert!(!l.is_empty() && !r.is_empty());
            let children = (l.len() as f64 * impurity(c, &t(l)) + r.len() as f64 * impurity(c, &t(r))) / n;
            assert!(children < parent - 1e-12, "node {id}: {children} !< {parent}");
        }
    }
}

#[test]
fn forest_splits_strictly_decrease_gini() {
    let (x, y) = blobs(200, 5, 0.05, 4);
    let targets: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let f = RandomForest::fit(
        &x,
        &y,
        &ForestParams { n_trees: 5, bootstrap: false, ..ForestParams::default() },
        &mut SeededRng::new(4),
    );
    let rows: Vec<usize> = (0..x.rows()).collect();
    for t in f.trees() {
        assert_strict_decrease(t, &x, &targets, &rows, Criterion::Gini);
    }
}

#[test]
fn boosting_splits_strictly_decrease_squared_error() {
    let (x, y) = blobs(200, 4, 0.05, 5);
    let targets: Vec<f64> = y.iter().map(|&l| l as f64 - 0.5).collect();
    let rows: Vec<usize> = (0..x.rows()).collect();
    let params = TreeParams { max_depth: Some(3), min_samples_split: 2, max_features: None };
    let t = Tree::fit(&x, &targets, rows.clone(), Criterion::SquaredError, params, &mut SeededRng::new(0));
    assert_strict_decrease(&t, &x, &targets, &rows, Criterion::SquaredError);
}

#[test]
fn boosting_training_loss_never_rises() {
    let (x, y) = blobs(300, 4, 0.02, 6);
    let g = GradientBoosting::fit(&x, &y, &GbcParams::default(), &mut SeededRng::new(0));
    assert_eq!(g.train_loss().len(), 101);
    for w in g.train_loss().windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn duplicate_rows_score_identically() {
    let (mut x, y) = blobs(80, 3, 0.1, 8);
    let dup = x.row(5).to_vec();
    x.push_row(&dup);
    let mut y2 = y.clone();
    y2.push(y[5]);
    for kind in ClassifierKind::all_defaults() {
        let m = train(&kind, &x, &y2, 3).unwrap();
        let s = m.score_batch(&x).unwrap();
        assert_eq!(s[5], s[80], "{kind}");
    }
}

#[test]
fn same_seed_same_scores() {
    let (x, y) = blobs(100, 3, 0.05, 9);
    for kind in ClassifierKind::all_defaults() {
        let a = train(&kind, &x, &y, 11).unwrap().score_batch(&x).unwrap();
        let b = train(&kind, &x, &y, 11).unwrap().score_batch(&x).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn ann_gradient_matches_finite_differences() {
    let (x, y) = blobs(30, 3, 0.1, 10);
    let params = AnnParams { hidden: 8, max_epochs: 3, ..AnnParams::default() };
    let ann = Ann::fit(&x, &y, &params, &mut SeededRng::new(1)).unwrap();
    let labels: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let r = gradient_check(ann.network(), &x, &Loss::CrossEntropy(labels)).unwrap();
    assert!(r.max_relative_error < 1e-6, "{r:?}");
}

#[test]
fn rejects_bad_training_input() {
    let (x, y) = blobs(20, 2, 0.1, 12);
    let kind = ClassifierKind::from_name("rf").unwrap();
    assert!(matches!(train(&kind, &x, &[1; 20], 0), Err(ClassifierError::Rejected(_))));
    assert!(matches!(train(&kind, &x, &y[..10], 0), Err(ClassifierError::Rejected(_))));
    let m = train(&kind, &x, &y, 0).unwrap();
    assert!(m.score_batch(&Matrix::zeros(2, 3)).is_err());
    assert!(ClassifierKind::from_name("frobnicate").is_none());
}
