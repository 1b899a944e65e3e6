use serde::{Deserialize, Serialize};

use crate::nn::{sigmoid, softplus, Activation, Matrix, MlpParams, NnError, OptimizerConfig, OptimizerState};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// L2 penalty.
    pub alpha: f64,
    /// Stop once the epoch loss fails to improve by `tol` this many epochs running.
    pub n_iter_no_change: usize,
    pub tol: f64,
}

impl Default for AnnParams {
    fn default() -> Self {
        Self {
            hidden: 100,
            learning_rate: 1e-3,
            max_epochs: 200,
            batch_size: 200,
            alpha: 1e-4,
            n_iter_no_change: 10,
            tol: 1e-4,
        }
    }
}

/// One-hidden-layer relu network with a logistic output, trained by Adam on
/// cross-entropy plus an L2 penalty. Scores are output logits.
#[derive(Clone, Debug, PartialEq)]
pub struct Ann {
    net: MlpParams,
    epochs_run: usize,
}

impl Ann {
    pub fn fit(x: &Matrix, y: &[u8], params: &AnnParams, rng: &mut SeededRng) -> Result<Self, NnError> {
        let mut net = MlpParams::glorot(
            &[x.cols(), params.hidden, 1],
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        )?;
        let mut opt = OptimizerState::new(OptimizerConfig::adam(params.learning_rate), &net);
        let n = x.rows();
        let bs = params.batch_size.min(n).max(1);
        let mut order: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        let mut stall = 0;
        let mut epochs_run = 0;
        for _ in 0..params.max_epochs {
            rng.shuffle(&mut order);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(bs) {
                let xb = x.select_rows(chunk);
                let m = chunk.len() as f64;
                let stack = net.forward(&xb)?;
                let logits = stack.output_pre();
                let mut data_loss = 0.0;
                let grad: Vec<f64> = chunk
                    .iter()
                    .zip(logits.as_slice())
                    .map(|(&i, &s)| {
                        let t = y[i] as f64;
                        data_loss += t * softplus(-s) + (1.0 - t) * softplus(s);
                        (sigmoid(s) - t) / m
                    })
                    .collect();
                let sq: f64 = net.weights().iter().flat_map(|w| w.as_slice()).map(|v| v * v).sum();
                epoch_loss += (data_loss / m + 0.5 * params.alpha * sq / m) * m;
                let g = Matrix::from_vec(chunk.len(), 1, grad)?;
                let mut grads = net.backward_from_logits(&stack, &g)?;
                for (gw, w) in grads.weights.iter_mut().zip(net.weights()) {
                    for (gv, wv) in gw.as_mut_slice().iter_mut().zip(w.as_slice()) {
                        *gv += params.alpha * wv / m;
                    }
                }
                opt.step(&mut net, &grads)?;
            }
            epochs_run += 1;
            let loss = epoch_loss / n as f64;
            if loss > best - params.tol {
                stall += 1;
            } else {
                stall = 0;
            }
            best = best.min(loss);
            if stall > params.n_iter_no_change {
                break;
            }
        }
        Ok(Self { net, epochs_run })
    }

    pub fn network(&self) -> &MlpParams {
        &self.net
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>, NnError> {
        Ok(self.net.forward(x)?.output_pre().as_slice().to_vec())
    }
}
