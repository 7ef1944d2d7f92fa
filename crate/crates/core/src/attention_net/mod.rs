//! Property attention, neighbour attention and the classifier head.

mod engine;
mod ops;

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use engine::{backward, backward_into, forward_batch, forward_user, ForwardTrace, HeadTrace, Target};
pub use ops::{
    aggregate, aggregate_input, argmax, classify, hidden_state, neighbour_scores,
    property_attention, softmax, Aggregation,
};

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::post_encoder::uniform_fill;

pub const ATTENTION_HIDDEN: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionDims {
    /// Property-vector width D.
    pub width: usize,
    pub hidden: usize,
    pub classes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionConfig {
    #[serde(default = "yes")]
    pub property_attention: bool,
    #[serde(default = "yes")]
    pub neighbour_attention: bool,
    #[serde(default)]
    pub aggregation: Aggregation,
}

fn yes() -> bool {
    true
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            property_attention: true,
            neighbour_attention: true,
            aggregation: Aggregation::Sigmoid,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    /// `[own half ‖ neighbour half]`, length 2·hidden.
    pub w3: Array1<f64>,
    /// A single shared scalar.
    pub b3: Array1<f64>,
    pub w4: Array2<f64>,
    pub b4: Array1<f64>,
    pub w5: Array2<f64>,
    pub b5: Array1<f64>,
}

impl AttentionParams {
    pub fn zeros(dims: AttentionDims) -> Self {
        let AttentionDims { width: d, hidden: h, classes: c } = dims;
        AttentionParams {
            w1: Array2::zeros((d, d)),
            b1: Array1::zeros(d),
            w2: Array2::zeros((d, h)),
            b2: Array1::zeros(h),
            w3: Array1::zeros(2 * h),
            b3: Array1::zeros(1),
            w4: Array2::zeros((h, h)),
            b4: Array1::zeros(h),
            w5: Array2::zeros((h, c)),
            b5: Array1::zeros(c),
        }
    }

    /// Weights uniform in ±1/sqrt(fan_in), biases zero.
    pub fn init<R: Rng + ?Sized>(dims: AttentionDims, rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        uniform_fill(&mut p.w1, rng);
        uniform_fill(&mut p.w2, rng);
        let bound = 1.0 / (p.w3.len() as f64).sqrt();
        p.w3.mapv_inplace(|_| rng.random_range(-bound..bound));
        uniform_fill(&mut p.w4, rng);
        uniform_fill(&mut p.w5, rng);
        p
    }

    pub fn dims(&self) -> AttentionDims {
        AttentionDims {
            width: self.w1.nrows(),
            hidden: self.w2.ncols(),
            classes: self.w5.ncols(),
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        let AttentionDims { width: d, hidden: h, classes: c } = self.dims();
        let ok = self.w1.dim() == (d, d)
            && self.b1.len() == d
            && self.w2.dim() == (d, h)
            && self.b2.len() == h
            && self.w3.len() == 2 * h
            && self.b3.len() == 1
            && self.w4.dim() == (h, h)
            && self.b4.len() == h
            && self.w5.dim() == (h, c)
            && self.b5.len() == c;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("inconsistent attention parameter shapes".into()))
        }
    }
}

impl ParamSet for AttentionParams {
    fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)> {
        vec![
            ("att.w1", self.w1.view().into_dyn()),
            ("att.b1", self.b1.view().into_dyn()),
            ("att.w2", self.w2.view().into_dyn()),
            ("att.b2", self.b2.view().into_dyn()),
            ("att.w3", self.w3.view().into_dyn()),
            ("att.b3", self.b3.view().into_dyn()),
            ("att.w4", self.w4.view().into_dyn()),
            ("att.b4", self.b4.view().into_dyn()),
            ("att.w5", self.w5.view().into_dyn()),
            ("att.b5", self.b5.view().into_dyn()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        vec![
            ("att.w1", self.w1.view_mut().into_dyn()),
            ("att.b1", self.b1.view_mut().into_dyn()),
            ("att.w2", self.w2.view_mut().into_dyn()),
            ("att.b2", self.b2.view_mut().into_dyn()),
            ("att.w3", self.w3.view_mut().into_dyn()),
            ("att.b3", self.b3.view_mut().into_dyn()),
            ("att.w4", self.w4.view_mut().into_dyn()),
            ("att.b4", self.b4.view_mut().into_dyn()),
            ("att.w5", self.w5.view_mut().into_dyn()),
            ("att.b5", self.b5.view_mut().into_dyn()),
        ]
    }
}
