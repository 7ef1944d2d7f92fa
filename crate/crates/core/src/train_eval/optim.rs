use ndarray::ArrayD;
use serde::{Deserialize, Serialize};

use crate::params::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerSpec {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimiser state over a fixed list of tensors.
#[derive(Clone, Debug)]
pub struct Optimizer {
    spec: OptimizerSpec,
    lr: f64,
    step: i32,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl Optimizer {
    pub fn new<P: ParamSet>(spec: OptimizerSpec, lr: f64, params: &P) -> Self {
        let zeros: Vec<ArrayD<f64>> = params
            .tensors()
            .iter()
            .map(|(_, t)| ArrayD::zeros(t.raw_dim()))
            .collect();
        let v = if matches!(spec, OptimizerSpec::Adam { .. }) {
            zeros.clone()
        } else {
            Vec::new()
        };
        Optimizer {
            spec,
            lr,
            step: 0,
            m: if v.is_empty() { Vec::new() } else { zeros },
            v,
        }
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) {
        self.step += 1;
        let lr = self.lr;
        match self.spec {
            OptimizerSpec::Sgd => {
                for ((_, mut p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                    p.scaled_add(-lr, &g);
                }
            }
            OptimizerSpec::Adam { beta1, beta2, epsilon } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                let tensors = params.tensors_mut().into_iter().zip(grads.tensors());
                for (((_, mut p), (_, g)), (m, v)) in tensors.zip(self.m.iter_mut().zip(self.v.iter_mut())) {
                    ndarray::Zip::from(&mut p)
                        .and(&g)
                        .and(m)
                        .and(v)
                        .for_each(|p, &g, m, v| {
                            *m = beta1 * *m + (1.0 - beta1) * g;
                            *v = beta2 * *v + (1.0 - beta2) * g * g;
                            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                        });
                }
            }
        }
    }
}
