//! Batched forward and backward passes over a set of centre users.
//!
//! Every node involved (the centres and, with neighbour attention, their
//! 1-hop neighbours) is encoded once: LSTM, property attention and hidden
//! state are shared between all heads that use it.

use std::collections::HashMap;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use super::ops::{self, Aggregation};
use super::AttentionParams;
use crate::error::{Error, Result};
use crate::kg_builder::KnowledgeGraph;
use crate::model::{Model, Parameters};
use crate::post_encoder::{self, LstmCache};

/// One classified user.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadTrace {
    /// Node slot of the centre user.
    pub center: usize,
    /// Node slots of the neighbours, in adjacency order.
    pub neighbours: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub betas: Vec<f64>,
    /// Aggregation input `Σ β h_k + h_u`.
    pub s: Array1<f64>,
    pub h_prime: Array1<f64>,
    pub r: Array1<f64>,
    pub probs: Array1<f64>,
}

#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// Graph node index per slot; the centres come first.
    pub nodes: Vec<usize>,
    /// Property vectors with the post-behaviour segment filled in.
    pub p: Array2<f64>,
    pub alpha: Array2<f64>,
    pub p_prime: Array2<f64>,
    pub hidden: Array2<f64>,
    pub heads: Vec<HeadTrace>,
    lstm: LstmCache,
}

impl ForwardTrace {
    pub fn predictions(&self) -> Vec<usize> {
        self.heads
            .iter()
            .map(|h| ops::argmax(h.probs.as_slice().expect("contiguous")))
            .collect()
    }

    /// Weighted cross-entropy.
    pub fn loss(&self, targets: &[Target]) -> f64 {
        self.heads
            .iter()
            .zip(targets)
            .map(|(h, t)| -t.weight * h.probs[t.label].max(f64::MIN_POSITIVE).ln())
            .sum()
    }

    pub fn alpha_of(&self, head: usize) -> ArrayView1<'_, f64> {
        self.alpha.row(self.heads[head].center)
    }
}

/// Label and loss weight of one head.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub label: usize,
    pub weight: f64,
}

pub fn forward_user(graph: &KnowledgeGraph, user_id: &str, model: &Model) -> Result<ForwardTrace> {
    let idx = graph
        .index_of(user_id)
        .ok_or_else(|| Error::Validation(format!("unknown user '{user_id}'")))?;
    forward_batch(graph, &[idx], model)
}

fn check_layout(graph: &KnowledgeGraph, model: &Model) -> Result<()> {
    if **graph.layout() != model.config.layout {
        return Err(Error::Shape(format!(
            "graph layout {} differs from model layout {}",
            graph.layout(),
            model.config.layout
        )));
    }
    model.params.attention.check()
}

pub fn forward_batch(graph: &KnowledgeGraph, centers: &[usize], model: &Model) -> Result<ForwardTrace> {
    check_layout(graph, model)?;
    let config = &model.config;
    let att = &model.params.attention;
    let d = config.layout.total_width();
    let pb = config
        .layout
        .post_behavior_range()
        .ok_or_else(|| Error::Shape("layout lacks the post_behavior segment".into()))?;
    let use_neighbours = config.attention.neighbour_attention;

    let mut nodes: Vec<usize> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for &c in centers {
        if c >= graph.len() {
            return Err(Error::Usage(format!("node {c} out of range")));
        }
        slot.entry(c).or_insert_with(|| {
            nodes.push(c);
            nodes.len() - 1
        });
    }
    if use_neighbours {
        let mut extra: Vec<usize> = centers
            .iter()
            .flat_map(|&c| graph.neighbours(c).iter().copied())
            .filter(|n| !slot.contains_key(n))
            .collect();
        extra.sort_unstable();
        extra.dedup();
        for n in extra {
            slot.insert(n, nodes.len());
            nodes.push(n);
        }
    }

    let seqs: Vec<_> = nodes.iter().map(|&n| &graph.node(n).posts).collect();
    let lstm = post_encoder::forward_batch(&seqs, &model.params.lstm)?;

    let n = nodes.len();
    let mut p = Array2::zeros((n, d));
    for (i, &node) in nodes.iter().enumerate() {
        let values = &graph.node(node).properties.values;
        if values.len() != d {
            return Err(Error::Shape(format!(
                "property vector of '{}' has width {}, expected {d}",
                graph.node(node).user_id,
                values.len()
            )));
        }
        let mut row = p.row_mut(i);
        row.assign(&ArrayView1::from(values.as_slice()));
        row.slice_mut(s![pb.clone()]).assign(&lstm.behavior.row(i));
    }

    let (alpha, p_prime) = if config.attention.property_attention {
        let mut z = p.dot(&att.w1) + &att.b1;
        for mut row in z.rows_mut() {
            let sm = ops::softmax(row.as_slice().expect("contiguous"));
            row.assign(&Array1::from(sm));
        }
        let pp = &p * &z;
        (z, pp)
    } else {
        (Array2::from_elem((n, d), 1.0 / d as f64), p.clone())
    };
    let hidden = (p_prime.dot(&att.w2) + &att.b2).mapv(f64::tanh);

    let activation = config.attention.aggregation;
    let b3 = att.b3[0];
    let mut heads = Vec::with_capacity(centers.len());
    let mut s_all = Array2::zeros((centers.len(), att.w2.ncols()));
    for (hi, &c) in centers.iter().enumerate() {
        let center = slot[&c];
        let neighbours: Vec<usize> = if use_neighbours {
            graph.neighbours(c).iter().map(|n| slot[n]).collect()
        } else {
            Vec::new()
        };
        let views: Vec<_> = neighbours.iter().map(|&k| hidden.row(k)).collect();
        let (coeffs, betas) = ops::neighbour_scores(hidden.row(center), &views, att.w3.view(), b3)?;
        let s_row = ops::aggregate_input(hidden.row(center), &views, &betas)?;
        s_all.row_mut(hi).assign(&s_row);
        heads.push(HeadTrace {
            center,
            neighbours,
            coeffs,
            betas,
            s: s_row,
            h_prime: Array1::zeros(0),
            r: Array1::zeros(0),
            probs: Array1::zeros(0),
        });
    }

    let h_prime = s_all.mapv(|v| activation.apply(v));
    let r = (h_prime.dot(&att.w4) + &att.b4).mapv(f64::tanh);
    let logits = r.dot(&att.w5) + &att.b5;
    for (hi, head) in heads.iter_mut().enumerate() {
        head.h_prime = h_prime.row(hi).to_owned();
        head.r = r.row(hi).to_owned();
        head.probs = Array1::from(ops::softmax(logits.row(hi).as_slice().expect("contiguous")));
    }

    Ok(ForwardTrace {
        nodes,
        p,
        alpha,
        p_prime,
        hidden,
        heads,
        lstm,
    })
}

/// Gradients of the weighted cross-entropy of `targets` (one per head).
/// Returns the loss as well.
pub fn backward(trace: &ForwardTrace, model: &Model, targets: &[Target]) -> Result<(Parameters, f64)> {
    let mut grads = Parameters::zeros_like(&model.params);
    let loss = backward_into(trace, model, targets, &mut grads)?;
    Ok((grads, loss))
}

pub fn backward_into(
    trace: &ForwardTrace,
    model: &Model,
    targets: &[Target],
    grads: &mut Parameters,
) -> Result<f64> {
    let att: &AttentionParams = &model.params.attention;
    att.check()?;
    if targets.len() != trace.heads.len() {
        return Err(Error::Shape(format!(
            "{} targets for {} heads",
            targets.len(),
            trace.heads.len()
        )));
    }
    let (n, d) = trace.p.dim();
    let hdim = att.w2.ncols();
    let classes = att.w5.ncols();
    if d != att.w1.nrows() || trace.hidden.ncols() != hdim {
        return Err(Error::Shape("trace does not match the parameters".into()));
    }
    let activation: Aggregation = model.config.attention.aggregation;
    let b = trace.heads.len();
    let g = &mut grads.attention;

    let mut r = Array2::zeros((b, hdim));
    let mut hp = Array2::zeros((b, hdim));
    let mut dlogits = Array2::zeros((b, classes));
    for (hi, (head, t)) in trace.heads.iter().zip(targets).enumerate() {
        if t.label >= classes {
            return Err(Error::Validation(format!("label {} outside {classes} classes", t.label)));
        }
        r.row_mut(hi).assign(&head.r);
        hp.row_mut(hi).assign(&head.h_prime);
        let mut dl = dlogits.row_mut(hi);
        dl.assign(&(&head.probs * t.weight));
        dl[t.label] -= t.weight;
    }
    general_mat_mul(1.0, &r.t(), &dlogits, 1.0, &mut g.w5);
    g.b5 += &dlogits.sum_axis(Axis(0));
    let mut dq4 = dlogits.dot(&att.w5.t());
    ndarray::Zip::from(&mut dq4).and(&r).for_each(|d, &rv| *d *= 1.0 - rv * rv);
    general_mat_mul(1.0, &hp.t(), &dq4, 1.0, &mut g.w4);
    g.b4 += &dq4.sum_axis(Axis(0));
    let dhp = dq4.dot(&att.w4.t());

    let (w3_own, w3_nb) = (att.w3.slice(s![..hdim]), att.w3.slice(s![hdim..]));
    let mut dhidden = Array2::<f64>::zeros((n, hdim));
    for (hi, head) in trace.heads.iter().enumerate() {
        let ds: Array1<f64> = ndarray::Zip::from(dhp.row(hi))
            .and(&head.s)
            .and(&head.h_prime)
            .map_collect(|&dy, &x, &y| dy * activation.derivative(x, y));
        let mut dh_u = ds.clone();
        if !head.neighbours.is_empty() {
            let dbeta: Vec<f64> = head
                .neighbours
                .iter()
                .map(|&k| ds.dot(&trace.hidden.row(k)))
                .collect();
            let mean: f64 = head.betas.iter().zip(&dbeta).map(|(b, db)| b * db).sum();
            for (j, &k) in head.neighbours.iter().enumerate() {
                let dc = head.betas[j] * (dbeta[j] - mean);
                let dq = dc * (1.0 - head.coeffs[j] * head.coeffs[j]);
                let hk = trace.hidden.row(k);
                let hu = trace.hidden.row(head.center);
                g.w3.slice_mut(s![..hdim]).scaled_add(dq, &hu);
                g.w3.slice_mut(s![hdim..]).scaled_add(dq, &hk);
                g.b3[0] += dq;
                dh_u.scaled_add(dq, &w3_own);
                let mut dk = dhidden.row_mut(k);
                dk.scaled_add(head.betas[j], &ds);
                dk.scaled_add(dq, &w3_nb);
            }
        }
        let mut dc = dhidden.row_mut(head.center);
        dc += &dh_u;
    }

    let mut dz2 = dhidden;
    ndarray::Zip::from(&mut dz2)
        .and(&trace.hidden)
        .for_each(|d, &h| *d *= 1.0 - h * h);
    general_mat_mul(1.0, &trace.p_prime.t(), &dz2, 1.0, &mut g.w2);
    g.b2 += &dz2.sum_axis(Axis(0));
    let dpp = dz2.dot(&att.w2.t());

    let dp = if model.config.attention.property_attention {
        let mut dp = &dpp * &trace.alpha;
        let mut dz1 = &dpp * &trace.p;
        for (mut row, a) in dz1.rows_mut().into_iter().zip(trace.alpha.rows()) {
            let dot = row.dot(&a);
            ndarray::Zip::from(&mut row).and(&a).for_each(|v, &av| *v = av * (*v - dot));
        }
        general_mat_mul(1.0, &trace.p.t(), &dz1, 1.0, &mut g.w1);
        g.b1 += &dz1.sum_axis(Axis(0));
        general_mat_mul(1.0, &dz1, &att.w1.t(), 1.0, &mut dp);
        dp
    } else {
        dpp
    };

    let pb = model
        .config
        .layout
        .post_behavior_range()
        .ok_or_else(|| Error::Shape("layout lacks the post_behavior segment".into()))?;
    let upstream = dp.slice(s![.., pb]);
    post_encoder::backward_batch(&trace.lstm, &model.params.lstm, upstream, &mut grads.lstm, false)?;

    Ok(trace.loss(targets))
}
