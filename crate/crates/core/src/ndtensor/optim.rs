use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer with L2 weight decay folded into the gradient.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    steps: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            kind,
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn sgd(learning_rate: f64, weight_decay: f64) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, weight_decay)
    }

    pub fn adam(learning_rate: f64, weight_decay: f64) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate, weight_decay)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update to `params` in place. Non-finite gradients abort
    /// the step before any parameter is touched.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<(), TensorError> {
        if params.len() != grads.len() {
            return Err(TensorError::InvalidArgument(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "optimizer_step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
            if !g.is_finite() {
                return Err(TensorError::NonFinite {
                    op: "optimizer_step",
                });
            }
        }
        if self.kind == OptimizerKind::Adam {
            if self.first.is_empty() {
                self.first = params.iter().map(|p| Array2::zeros(p.shape())).collect();
                self.second = self.first.clone();
            } else if self.first.len() != params.len()
                || self.first.iter().zip(params.iter()).any(|(m, p)| m.dim() != p.shape())
            {
                return Err(TensorError::InvalidArgument(
                    "parameter set changed between optimizer steps".into(),
                ));
            }
        }
        self.steps += 1;
        let lr = self.learning_rate;
        let wd = self.weight_decay;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    let p = p.as_array_mut();
                    ndarray::Zip::from(p)
                        .and(g.as_array())
                        .for_each(|p, &g| *p -= lr * (g + wd * *p));
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
                let t = self.steps as i32;
                let c1 = 1.0 - b1.powi(t);
                let c2 = 1.0 - b2.powi(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.first.iter_mut().zip(self.second.iter_mut()))
                {
                    ndarray::Zip::from(p.as_array_mut())
                        .and(g.as_array())
                        .and(m)
                        .and(v)
                        .for_each(|p, &g, m, v| {
                            let g = g + wd * *p;
                            *m = b1 * *m + (1.0 - b1) * g;
                            *v = b2 * *v + (1.0 - b2) * g * g;
                            let m_hat = *m / c1;
                            let v_hat = *v / c2;
                            *p -= lr * m_hat / (v_hat.sqrt() + eps);
                        });
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(TensorError::NonFinite {
                op: "optimizer_step",
            });
        }
        Ok(())
    }
}
