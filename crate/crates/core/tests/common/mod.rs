#![allow(dead_code)]

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskgraph::attention_net::AttentionConfig;
use riskgraph::kg_builder::{EncodeConfig, GraphNode, KnowledgeGraph, LayoutEntry, PropertyLayout, PropertyVector};
use riskgraph::model::{Model, ModelConfig};
use riskgraph::params::ParamSet;
use riskgraph::post_encoder::{LstmDims, PostSequenceTensor};

pub const TOY_WIDTH: usize = 6;
pub const TOY_POST_INPUT: usize = 5;

/// gender(2) | post_behavior(3) | age(1)
pub fn toy_layout() -> Arc<PropertyLayout> {
    let e = |name: &str, offset, width| LayoutEntry { name: name.into(), offset, width };
    Arc::new(PropertyLayout::from_entries(vec![e("gender", 0, 2), e("post_behavior", 2, 3), e("age", 5, 1)]).unwrap())
}

pub fn toy_model(hidden: usize, classes: usize, attention: AttentionConfig, seed: u64) -> Model {
    let config = ModelConfig {
        classes,
        layout: (*toy_layout()).clone(),
        lstm: LstmDims { input: TOY_POST_INPUT, hidden: 4, output: 3 },
        attention_hidden: hidden,
        attention,
        encode: EncodeConfig::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Model::init(config, &mut rng).unwrap();
    for (name, mut t) in m.params.tensors_mut() {
        if name.contains(".b") {
            t.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        }
    }
    m
}

pub fn random_node(i: usize, rng: &mut ChaCha8Rng, layout: &Arc<PropertyLayout>) -> GraphNode {
    let posts = 1 + (i % 3);
    GraphNode {
        user_id: format!("u{i}"),
        label: i % 2,
        properties: PropertyVector {
            values: (0..TOY_WIDTH).map(|_| rng.random_range(-1.0..1.0)).collect(),
            layout: Arc::clone(layout),
        },
        posts: PostSequenceTensor::from_rows(Array2::from_shape_fn((posts, TOY_POST_INPUT), |_| rng.random_range(-1.0..1.0)))
            .unwrap(),
    }
}

pub fn toy_graph(n: usize, adjacency: Vec<Vec<usize>>, seed: u64) -> KnowledgeGraph {
    let layout = toy_layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n).map(|i| random_node(i, &mut rng, &layout)).collect();
    KnowledgeGraph::from_parts(nodes, adjacency, layout).unwrap()
}

/// Maximum-normalised distance used by the tolerance checks.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

use riskgraph::attention_net::{backward, forward_batch, Target};

pub struct GradReport {
    pub checked: usize,
    pub failures: Vec<String>,
    pub tensors: Vec<&'static str>,
}

fn loss_of(model: &Model, graph: &KnowledgeGraph, centers: &[usize], targets: &[Target]) -> f64 {
    forward_batch(graph, centers, model).unwrap().loss(targets)
}

/// Central differences over every element of every tensor.
pub fn gradient_check(model: &Model, graph: &KnowledgeGraph, centers: &[usize], targets: &[Target]) -> GradReport {
    const EPS: f64 = 1e-5;
    let trace = forward_batch(graph, centers, model).unwrap();
    let (grads, _) = backward(&trace, model, targets).unwrap();
    let analytic: Vec<(&'static str, Vec<f64>)> =
        grads.tensors().into_iter().map(|(n, t)| (n, t.iter().copied().collect())).collect();
    let mut m = model.clone();
    let mut report = GradReport { checked: 0, failures: Vec::new(), tensors: Vec::new() };
    for (k, (name, ana)) in analytic.iter().enumerate() {
        report.tensors.push(name);
        for (j, &a) in ana.iter().enumerate() {
            let orig = nth_mut(&mut m, k, j, None);
            nth_mut(&mut m, k, j, Some(orig + EPS));
            let plus = loss_of(&m, graph, centers, targets);
            nth_mut(&mut m, k, j, Some(orig - EPS));
            let minus = loss_of(&m, graph, centers, targets);
            nth_mut(&mut m, k, j, Some(orig));
            let num = (plus - minus) / (2.0 * EPS);
            report.checked += 1;
            if !close(num, a, 1e-4, 1e-6) {
                report.failures.push(format!("{name}[{j}]: numeric {num:e} analytic {a:e}"));
            }
        }
    }
    report
}

fn nth_mut(m: &mut Model, tensor: usize, elem: usize, set: Option<f64>) -> f64 {
    let mut tensors = m.params.tensors_mut();
    let t = &mut tensors[tensor].1;
    let slot = t.iter_mut().nth(elem).unwrap();
    let old = *slot;
    if let Some(v) = set {
        *slot = v;
    }
    old
}

pub fn targets_for(graph: &KnowledgeGraph, centers: &[usize], classes: usize) -> Vec<Target> {
    centers
        .iter()
        .enumerate()
        .map(|(k, &i)| Target {
            label: graph.node(i).label % classes,
            weight: 0.5 + 0.25 * k as f64,
        })
        .collect()
}

pub struct Oracle {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class_f1: Vec<f64>,
}

/// Written from the textbook definitions, independently of the library.
pub fn oracle(actual: &[usize], predicted: &[usize], classes: usize) -> Oracle {
    let n = actual.len() as f64;
    let mut per = Vec::new();
    for c in 0..classes {
        let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
        for (&a, &p) in actual.iter().zip(predicted) {
            match (a == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fneg == 0 { 0.0 } else { tp as f64 / (tp + fneg) as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        per.push((precision, recall, f1));
    }
    let correct = actual.iter().zip(predicted).filter(|(a, p)| a == p).count();
    let accuracy = correct as f64 / n;
    let per_class_f1: Vec<f64> = per.iter().map(|x| x.2).collect();
    if classes == 2 {
        let (precision, recall, f1) = per[1];
        Oracle { accuracy, precision, recall, f1, per_class_f1 }
    } else {
        let k = classes as f64;
        Oracle {
            accuracy,
            precision: per.iter().map(|x| x.0).sum::<f64>() / k,
            recall: per.iter().map(|x| x.1).sum::<f64>() / k,
            f1: per_class_f1.iter().sum::<f64>() / k,
            per_class_f1,
        }
    }
}
