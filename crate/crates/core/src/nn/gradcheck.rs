//! Finite-difference verification of [`MlpParams::backward`].

use super::{Activation, Gradients, Matrix, MlpParams, NnError};
use crate::rng::SeededRng;

/// Scalar losses over a network output, used by the gradient checker.
#[derive(Clone, Debug)]
pub enum Loss {
    /// Sum of squared residuals per row, averaged over rows.
    SquaredError(Matrix),
    /// Mean binary cross-entropy; the output must be a probability column.
    CrossEntropy(Vec<f64>),
    /// Weighted sum of outputs (a linear probe, as in the critic objective).
    Linear(Matrix),
}

impl Loss {
    pub fn value(&self, out: &Matrix) -> f64 {
        let n = out.rows().max(1) as f64;
        match self {
            Loss::SquaredError(t) => {
                out.as_slice()
                    .iter()
                    .zip(t.as_slice())
                    .map(|(o, y)| (o - y).powi(2))
                    .sum::<f64>()
                    / n
            }
            Loss::CrossEntropy(y) => {
                out.as_slice()
                    .iter()
                    .zip(y)
                    .map(|(p, y)| -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
                    .sum::<f64>()
                    / n
            }
            Loss::Linear(w) => out.as_slice().iter().zip(w.as_slice()).map(|(o, w)| o * w).sum(),
        }
    }

    /// `value(up) - value(down)` given `delta = up - down` computed
    /// without cancellation.
    pub fn difference(&self, up: &Matrix, down: &Matrix, delta: &Matrix) -> f64 {
        let n = up.rows().max(1) as f64;
        let triples = up.as_slice().iter().zip(down.as_slice()).zip(delta.as_slice());
        match self {
            Loss::SquaredError(t) => {
                triples
                    .zip(t.as_slice())
                    .map(|(((u, d), dl), y)| dl * (u + d - 2.0 * y))
                    .sum::<f64>()
                    / n
            }
            Loss::CrossEntropy(y) => {
                triples
                    .zip(y)
                    .map(|(((_, d), dl), y)| -(y * (dl / d).ln_1p() + (1.0 - y) * (-dl / (1.0 - d)).ln_1p()))
                    .sum::<f64>()
                    / n
            }
            Loss::Linear(w) => triples.zip(w.as_slice()).map(|((_, dl), w)| w * dl).sum(),
        }
    }

    /// Gradient with respect to the output.
    pub fn grad(&self, out: &Matrix) -> Matrix {
        let n = out.rows().max(1) as f64;
        let data: Vec<f64> = match self {
            Loss::SquaredError(t) => out
                .as_slice()
                .iter()
                .zip(t.as_slice())
                .map(|(o, y)| 2.0 * (o - y) / n)
                .collect(),
            Loss::CrossEntropy(y) => out
                .as_slice()
                .iter()
                .zip(y)
                .map(|(p, y)| (p - y) / (p * (1.0 - p)) / n)
                .collect(),
            Loss::Linear(w) => w.as_slice().to_vec(),
        };
        Matrix::from_vec(out.rows(), out.cols(), data).expect("loss gradient shape")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// (parameter block, index within block) of the worst entry.
    pub worst: (usize, usize),
    pub checked: usize,
}

pub const FD_STEP: f64 = 1e-5;

/// `act(u) - act(d)` from `du = u - d`, free of cancellation.
fn activation_difference(act: Activation, u: f64, d: f64, du: f64) -> f64 {
    match act {
        Activation::Identity => du,
        Activation::Relu => {
            if u > 0.0 && d > 0.0 {
                du
            } else if u <= 0.0 && d <= 0.0 {
                0.0
            } else {
                u.max(0.0) - d.max(0.0)
            }
        }
        // tanh u - tanh d = sinh(u - d) / (cosh u cosh d)
        Activation::Tanh => du.sinh() / (u.cosh() * d.cosh()),
        // sigmoid x = (1 + tanh(x/2)) / 2
        Activation::Sigmoid => (du / 2.0).sinh() / (2.0 * (u / 2.0).cosh() * (d / 2.0).cosh()),
    }
}

/// Outputs of two networks that differ in few parameters, plus their
/// difference carried layer by layer rather than by subtracting outputs.
fn forward_pair(up: &MlpParams, down: &MlpParams, x: &Matrix) -> (Matrix, Matrix, Matrix) {
    let rows = x.rows();
    let mut au = x.clone();
    let mut ad = x.clone();
    let mut da = Matrix::zeros(rows, x.cols());
    let last = up.num_layers() - 1;
    for l in 0..up.num_layers() {
        let (wu, wd) = (&up.weights()[l], &down.weights()[l]);
        let (bu, bd) = (&up.biases()[l], &down.biases()[l]);
        let act = if l == last { up.output_activation() } else { up.hidden_activation() };
        let out = wu.rows();
        let (mut nu, mut nd, mut nda) = (Matrix::zeros(rows, out), Matrix::zeros(rows, out), Matrix::zeros(rows, out));
        for r in 0..rows {
            for j in 0..out {
                let (ru, rd) = (wu.row(j), wd.row(j));
                let mut zu = bu[j];
                let mut zd = bd[j];
                let mut dz = bu[j] - bd[j];
                for k in 0..ru.len() {
                    zu += ru[k] * au[(r, k)];
                    zd += rd[k] * ad[(r, k)];
                    dz += ru[k] * da[(r, k)] + (ru[k] - rd[k]) * ad[(r, k)];
                }
                nu.as_mut_slice()[r * out + j] = act.apply(zu);
                nd.as_mut_slice()[r * out + j] = act.apply(zd);
                nda.as_mut_slice()[r * out + j] = activation_difference(act, zu, zd, dz);
            }
        }
        au = nu;
        ad = nd;
        da = nda;
    }
    (au, ad, da)
}

/// `(L(p + h) - L(p - h)) / 2h` for one parameter, with the actual
/// floating-point step in the denominator.
fn central_difference(probe: &mut MlpParams, batch: &Matrix, loss: &Loss, at: (usize, usize), h: f64) -> f64 {
    let (b, i) = at;
    let orig = probe.param_slices()[b][i];
    probe.param_slices_mut()[b][i] = orig + h;
    let hi = probe.param_slices()[b][i];
    let up = probe.clone();
    probe.param_slices_mut()[b][i] = orig - h;
    let lo = probe.param_slices()[b][i];
    let (out_up, out_down, delta) = forward_pair(&up, probe, batch);
    probe.param_slices_mut()[b][i] = orig;
    loss.difference(&out_up, &out_down, &delta) / (hi - lo)
}

/// Smallest |pre-activation| feeding a relu, over the whole batch. Finite
/// differences are only meaningful when this is well above the step.
pub fn kink_margin(mlp: &MlpParams, batch: &Matrix) -> Result<f64, NnError> {
    let stack = mlp.forward(batch)?;
    let last = mlp.num_layers() - 1;
    let mut margin = f64::INFINITY;
    for (l, pre) in stack.pre.iter().enumerate() {
        let act = if l == last { mlp.output_activation() } else { mlp.hidden_activation() };
        if act == Activation::Relu {
            margin = pre.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
        }
    }
    Ok(margin)
}

/// A random network with Glorot weights and biases uniform on ±0.5, plus a
/// batch of `rows` inputs uniform on ±1 resampled until every relu input
/// sits at least `1e-3` from the kink.
pub fn random_case(
    rng: &mut SeededRng,
    widths: &[usize],
    hidden: Activation,
    output: Activation,
    rows: usize,
) -> Result<(MlpParams, Matrix), NnError> {
    let mut net = MlpParams::glorot(widths, hidden, output, rng)?;
    for (b, block) in net.param_slices_mut().into_iter().enumerate() {
        if b % 2 == 1 {
            block.iter_mut().for_each(|v| *v = rng.uniform_in(-0.5, 0.5));
        }
    }
    for _ in 0..10_000 {
        let data = (0..rows * widths[0]).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let batch = Matrix::from_vec(rows, widths[0], data)?;
        if kink_margin(&net, &batch)? > 1e-3 {
            return Ok((net, batch));
        }
    }
    Err(NnError::Shape("no kink-free batch found".into()))
}

/// Compares backprop gradients against central differences at steps
/// `FD_STEP` and `2 * FD_STEP`, combined by Richardson extrapolation.
pub fn gradient_check(mlp: &MlpParams, batch: &Matrix, loss: &Loss) -> Result<GradCheckReport, NnError> {
    gradient_check_with(mlp, batch, loss, |net, b, l| {
        let stack = net.forward(b)?;
        net.backward(&stack, &l.grad(stack.output()))
    })
}

/// As [`gradient_check`], with the analytic gradient supplied by `analytic`.
pub fn gradient_check_with<F>(
    mlp: &MlpParams,
    batch: &Matrix,
    loss: &Loss,
    analytic: F,
) -> Result<GradCheckReport, NnError>
where
    F: Fn(&MlpParams, &Matrix, &Loss) -> Result<Gradients, NnError>,
{
    if mlp.param_count() > 10_000 {
        return Err(NnError::Shape(format!(
            "gradient check limited to 10000 parameters, network has {}",
            mlp.param_count()
        )));
    }
    let grads = analytic(mlp, batch, loss)?;
    let analytic_blocks: Vec<Vec<f64>> = grads.param_slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = mlp.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    for (b, block) in analytic_blocks.iter().enumerate() {
        for (i, &a) in block.iter().enumerate() {
            let d1 = central_difference(&mut probe, batch, loss, (b, i), FD_STEP);
            let d2 = central_difference(&mut probe, batch, loss, (b, i), 2.0 * FD_STEP);
            // Richardson: the O(h^2) error terms of d1 and d2 differ by 4x
            let numeric = (4.0 * d1 - d2) / 3.0;
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (b, i);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .unwrap()
    }

    #[test]
    fn difference_matches_value_gap() {
        let up = Matrix::from_rows(&[[0.7, 0.2]]).unwrap();
        let down = Matrix::from_rows(&[[0.6, 0.25]]).unwrap();
        let delta = Matrix::from_rows(&[[0.1, -0.05]]).unwrap();
        let t = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        for loss in [
            Loss::SquaredError(t.clone()),
            Loss::CrossEntropy(vec![1.0, 0.0]),
            Loss::Linear(t),
        ] {
            let direct = loss.value(&up) - loss.value(&down);
            assert!((loss.difference(&up, &down, &delta) - direct).abs() < 1e-14, "{loss:?}");
        }
    }

    #[test]
    fn relu_net_away_from_kinks() {
        let mut rng = SeededRng::new(9);
        let (net, x) = random_case(&mut rng, &[5, 16, 8, 2], Activation::Relu, Activation::Relu, 6).unwrap();
        assert!(kink_margin(&net, &x).unwrap() > 1e-3);
        let y = random(&mut rng, 6, 2);
        let r = gradient_check(&net, &x, &Loss::SquaredError(y)).unwrap();
        assert!(r.max_relative_error < 1e-6, "{r:?}");
    }

    #[test]
    fn linear_squared_error_is_exact() {
        let mut rng = SeededRng::new(1);
        let net = MlpParams::glorot(&[4, 3], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = random(&mut rng, 6, 4);
        let y = random(&mut rng, 6, 3);
        let r = gradient_check(&net, &x, &Loss::SquaredError(y)).unwrap();
        assert!(r.max_relative_error < 1e-9, "{r:?}");
        assert_eq!(r.checked, 15);
    }

    #[test]
    fn sigmoid_cross_entropy() {
        let mut rng = SeededRng::new(2);
        let net =
            MlpParams::glorot(&[3, 5, 1], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
        let x = random(&mut rng, 8, 3);
        let y = (0..8).map(|i| (i % 2) as f64).collect();
        let r = gradient_check(&net, &x, &Loss::CrossEntropy(y)).unwrap();
        assert!(r.max_relative_error < 1e-6, "{r:?}");
    }

    #[test]
    fn sign_flipped_backward_is_caught() {
        let mut rng = SeededRng::new(3);
        let net =
            MlpParams::glorot(&[3, 6, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let x = random(&mut rng, 5, 3);
        let y = random(&mut rng, 5, 2);
        let r = gradient_check_with(&net, &x, &Loss::SquaredError(y), |n, b, l| {
            let s = n.forward(b)?;
            let mut g = n.backward(&s, &l.grad(s.output()))?;
            for v in g.weights[0].as_mut_slice() {
                *v = -*v;
            }
            Ok(g)
        })
        .unwrap();
        assert!(r.max_relative_error > 0.1, "{r:?}");
    }
}
