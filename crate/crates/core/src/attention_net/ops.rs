//! Single-user building blocks. The batched engine reuses these for every
//! per-head step, and tests use them as the reference for the batched parts.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sigmoid,
    Elu,
}

impl Aggregation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Aggregation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Aggregation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
        }
    }

    /// Derivative written in terms of the input `x` and output `y`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Aggregation::Sigmoid => y * (1.0 - y),
            Aggregation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
        }
    }
}

/// Max-shifted softmax. The normaliser is summed in ascending order, so the
/// result does not depend on the order of `z`.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    if z.is_empty() {
        return Vec::new();
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let mut sorted = e.clone();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().sum();
    e.iter().map(|&v| v / sum).collect()
}

/// Row vector times matrix.
pub(crate) fn vecmat(v: ArrayView1<'_, f64>, m: ArrayView2<'_, f64>) -> Array1<f64> {
    v.dot(&m)
}

/// `α = softmax(p·W1 + b1)`, `p' = p ⊙ α`.
pub fn property_attention(
    p: ArrayView1<'_, f64>,
    w1: ArrayView2<'_, f64>,
    b1: ArrayView1<'_, f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if w1.dim() != (p.len(), p.len()) || b1.len() != p.len() {
        return Err(Error::Shape(format!(
            "property vector has width {} but W1 is {:?}",
            p.len(),
            w1.dim()
        )));
    }
    let z = vecmat(p, w1) + b1;
    let alpha = Array1::from(softmax(z.as_slice().expect("contiguous")));
    let p_prime = &p * &alpha;
    Ok((p_prime, alpha))
}

/// `h = tanh(p'·W2 + b2)`.
pub fn hidden_state(p_prime: ArrayView1<'_, f64>, w2: ArrayView2<'_, f64>, b2: ArrayView1<'_, f64>) -> Array1<f64> {
    (vecmat(p_prime, w2) + b2).mapv(f64::tanh)
}

/// Coefficients `c_k = tanh([h_u ‖ h_k]·W3 + b3)` and `β = softmax(c)`.
pub fn neighbour_scores(
    h_u: ArrayView1<'_, f64>,
    neighbours: &[ArrayView1<'_, f64>],
    w3: ArrayView1<'_, f64>,
    b3: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = h_u.len();
    if w3.len() != 2 * h {
        return Err(Error::Shape(format!("W3 has length {}, expected {}", w3.len(), 2 * h)));
    }
    let own = h_u.dot(&w3.slice(ndarray::s![..h]));
    let tail = w3.slice(ndarray::s![h..]);
    let coeffs: Vec<f64> = neighbours
        .iter()
        .map(|n| {
            if n.len() != h {
                return Err(Error::Shape("neighbour hidden width differs".into()));
            }
            Ok((own + n.dot(&tail) + b3).tanh())
        })
        .collect::<Result<_>>()?;
    let betas = softmax(&coeffs);
    Ok((coeffs, betas))
}

/// Canonical summation order for neighbour terms: by weight, then by the
/// hidden vector's values.
pub(crate) fn canonical_order(neighbours: &[ArrayView1<'_, f64>], betas: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| {
        betas[a].total_cmp(&betas[b]).then_with(|| {
            neighbours[a]
                .iter()
                .zip(neighbours[b].iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

/// Pre-activation `Σ β_k h_k + h_u`.
pub fn aggregate_input(h_u: ArrayView1<'_, f64>, neighbours: &[ArrayView1<'_, f64>], betas: &[f64]) -> Result<Array1<f64>> {
    if neighbours.len() != betas.len() {
        return Err(Error::Shape(format!(
            "{} neighbours but {} weights",
            neighbours.len(),
            betas.len()
        )));
    }
    let mut sum = Array1::zeros(h_u.len());
    for k in canonical_order(neighbours, betas) {
        sum.scaled_add(betas[k], &neighbours[k]);
    }
    Ok(sum + h_u)
}

/// `h' = σ(Σ β_k h_k + h_u)`.
pub fn aggregate(
    h_u: ArrayView1<'_, f64>,
    neighbours: &[ArrayView1<'_, f64>],
    betas: &[f64],
    activation: Aggregation,
) -> Result<Array1<f64>> {
    Ok(aggregate_input(h_u, neighbours, betas)?.mapv(|v| activation.apply(v)))
}

/// `r = tanh(h'·W4 + b4)`, probabilities `softmax(r·W5 + b5)`.
pub fn classify(
    h_prime: ArrayView1<'_, f64>,
    w4: ArrayView2<'_, f64>,
    b4: ArrayView1<'_, f64>,
    w5: ArrayView2<'_, f64>,
    b5: ArrayView1<'_, f64>,
) -> (Array1<f64>, Array1<f64>) {
    let r = (vecmat(h_prime, w4) + b4).mapv(f64::tanh);
    let logits = vecmat(r.view(), w5) + b5;
    let probs = Array1::from(softmax(logits.as_slice().expect("contiguous")));
    (r, probs)
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
