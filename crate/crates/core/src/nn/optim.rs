use serde::{Deserialize, Serialize};

use super::{Gradients, MlpParams, NnError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[serde(rename = "rmsprop")]
    RmsProp,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "rmsprop" => Ok(Self::RmsProp),
            "adam" => Ok(Self::Adam),
            other => Err(format!("unknown optimizer `{other}` (expected sgd, rmsprop, adam)")),
        }
    }
}

/// Update-rule hyperparameters.
///
/// `decay` is the squared-gradient average coefficient (RMSProp rho, Adam
/// beta2); `momentum` is Adam's beta1 and is unused otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub decay: f64,
    pub momentum: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
            decay: 0.0,
            momentum: 0.0,
            epsilon: 0.0,
        }
    }

    /// RMSProp with rho 0.99 and epsilon 1e-8.
    pub fn rmsprop(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::RmsProp,
            learning_rate,
            decay: 0.99,
            momentum: 0.0,
            epsilon: 1e-8,
        }
    }

    /// Adam with beta1 0.9, beta2 0.999, epsilon 1e-8.
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            decay: 0.999,
            momentum: 0.9,
            epsilon: 1e-8,
        }
    }

    pub fn for_kind(kind: OptimizerKind, learning_rate: f64) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::sgd(learning_rate),
            OptimizerKind::RmsProp => Self::rmsprop(learning_rate),
            OptimizerKind::Adam => Self::adam(learning_rate),
        }
    }
}

/// Optimizer accumulators, one block per parameter block of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    config: OptimizerConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, params: &MlpParams) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .param_slices()
            .iter()
            .map(|s| vec![0.0; s.len()])
            .collect();
        let first = if config.kind == OptimizerKind::Adam {
            zeros.clone()
        } else {
            Vec::new()
        };
        let second = if config.kind == OptimizerKind::Sgd {
            Vec::new()
        } else {
            zeros
        };
        Self {
            config,
            step: 0,
            first,
            second,
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Squared-gradient accumulators (RMSProp/Adam), per parameter block.
    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    /// One descent step on `params` along `grads`.
    pub fn step(&mut self, params: &mut MlpParams, grads: &Gradients) -> Result<(), NnError> {
        let gblocks = grads.param_slices();
        let mut pblocks = params.param_slices_mut();
        if gblocks.len() != pblocks.len()
            || gblocks.iter().zip(&pblocks).any(|(g, p)| g.len() != p.len())
        {
            return Err(NnError::Shape("gradients do not match parameters".into()));
        }
        for (b, g) in gblocks.iter().enumerate() {
            if g.iter().any(|v| !v.is_finite()) {
                let kind = if b % 2 == 0 { "weights" } else { "biases" };
                return Err(NnError::NonFinite(format!(
                    "gradient of layer {} {kind}",
                    b / 2
                )));
            }
        }
        self.step += 1;
        let c = self.config;
        match c.kind {
            OptimizerKind::Sgd => {
                for (p, g) in pblocks.iter_mut().zip(&gblocks) {
                    for (pv, gv) in p.iter_mut().zip(g.iter()) {
                        *pv -= c.learning_rate * gv;
                    }
                }
            }
            OptimizerKind::RmsProp => {
                for ((p, g), v) in pblocks.iter_mut().zip(&gblocks).zip(&mut self.second) {
                    for ((pv, gv), vv) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                        *vv = c.decay * *vv + (1.0 - c.decay) * gv * gv;
                        *pv -= c.learning_rate * gv / (vv.sqrt() + c.epsilon);
                    }
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let bc1 = 1.0 - c.momentum.powi(t);
                let bc2 = 1.0 - c.decay.powi(t);
                for (((p, g), m), v) in pblocks
                    .iter_mut()
                    .zip(&gblocks)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((pv, gv), mv), vv) in
                        p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *mv = c.momentum * *mv + (1.0 - c.momentum) * gv;
                        *vv = c.decay * *vv + (1.0 - c.decay) * gv * gv;
                        let mhat = *mv / bc1;
                        let vhat = *vv / bc2;
                        *pv -= c.learning_rate * mhat / (vhat.sqrt() + c.epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Matrix};

    // a 1->1 linear net is a single scalar weight plus a bias
    fn scalar_net(w: f64) -> MlpParams {
        let mut net = MlpParams::zeros(&[1, 1], Activation::Relu, Activation::Identity).unwrap();
        net.param_slices_mut()[0][0] = w;
        net
    }

    fn scalar_grad(g: f64) -> Gradients {
        Gradients {
            weights: vec![Matrix::from_vec(1, 1, vec![g]).unwrap()],
            biases: vec![vec![0.0]],
            input: Matrix::zeros(0, 0),
        }
    }

    #[test]
    fn sgd_single_step() {
        let mut net = scalar_net(1.0);
        let mut st = OptimizerState::new(OptimizerConfig::sgd(0.1), &net);
        st.step(&mut net, &scalar_grad(0.5)).unwrap();
        assert!((net.param_slices()[0][0] - 0.95).abs() < 1e-15);
        assert_eq!(st.steps(), 1);
    }

    #[test]
    fn rmsprop_zero_gradient_decays_accumulator_only() {
        let mut net = scalar_net(1.0);
        let mut st = OptimizerState::new(OptimizerConfig::rmsprop(0.01), &net);
        st.step(&mut net, &scalar_grad(2.0)).unwrap();
        let before = net.clone();
        let v = st.second_moments()[0][0];
        st.step(&mut net, &scalar_grad(0.0)).unwrap();
        assert_eq!(net, before);
        assert!((st.second_moments()[0][0] - 0.99 * v).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_two_steps_match_recurrence() {
        // v1 = 0.01*0.25 = 0.0025; p1 = 1 - 0.1*0.5/(0.05+1e-8)
        // v2 = 0.99*0.0025 + 0.01*1.0 = 0.012475; p2 = p1 + 0.1*1/(sqrt(v2)+1e-8)
        let mut net = scalar_net(1.0);
        let mut st = OptimizerState::new(OptimizerConfig::rmsprop(0.1), &net);
        st.step(&mut net, &scalar_grad(0.5)).unwrap();
        let p1 = 1.0 - 0.1 * 0.5 / (0.05 + 1e-8);
        assert!((net.param_slices()[0][0] - p1).abs() < 1e-12);
        st.step(&mut net, &scalar_grad(-1.0)).unwrap();
        let v2: f64 = 0.012475;
        let p2 = p1 + 0.1 / (v2.sqrt() + 1e-8);
        assert!((st.second_moments()[0][0] - v2).abs() < 1e-15);
        assert!((net.param_slices()[0][0] - p2).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut net = scalar_net(0.0);
        let mut st = OptimizerState::new(OptimizerConfig::adam(0.01), &net);
        st.step(&mut net, &scalar_grad(3.0)).unwrap();
        assert!((net.param_slices()[0][0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_names_layer() {
        let mut net = scalar_net(1.0);
        let mut st = OptimizerState::new(OptimizerConfig::sgd(0.1), &net);
        let mut g = scalar_grad(0.0);
        g.biases[0][0] = f64::NAN;
        let err = st.step(&mut net, &g).unwrap_err();
        assert!(err.to_string().contains("layer 0 biases"), "{err}");
        assert_eq!(st.steps(), 0);
    }

    #[test]
    fn accumulators_mirror_parameter_shapes() {
        let net = MlpParams::zeros(&[3, 5, 2], Activation::Relu, Activation::Identity).unwrap();
        let st = OptimizerState::new(OptimizerConfig::adam(0.1), &net);
        let shapes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
        let acc: Vec<usize> = st.first_moments().iter().map(|s| s.len()).collect();
        assert_eq!(shapes, acc);
        assert_eq!(shapes, st.second_moments().iter().map(|s| s.len()).collect::<Vec<_>>());
    }
}
