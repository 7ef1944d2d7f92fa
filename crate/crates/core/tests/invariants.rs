mod common;

use common::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskgraph::attention_net::{argmax, forward_batch, forward_user, neighbour_scores, property_attention, softmax, AttentionConfig};
use riskgraph::data_model::{generate_synthetic_cohort, SynthConfig};
use riskgraph::kg_builder::{encode_cohort, EncodeConfig, KnowledgeGraph};

fn relabel(graph: &KnowledgeGraph, perm: &[usize]) -> KnowledgeGraph {
    // new slot k holds old node perm[k]
    let mut inverse = vec![0; perm.len()];
    for (k, &old) in perm.iter().enumerate() {
        inverse[old] = k;
    }
    let nodes = perm.iter().map(|&old| graph.node(old).clone()).collect();
    let adjacency = perm
        .iter()
        .map(|&old| graph.neighbours(old).iter().map(|&n| inverse[n]).collect())
        .collect();
    KnowledgeGraph::from_parts(nodes, adjacency, graph.layout().clone()).unwrap()
}

fn random_adjacency(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| (0..n).filter(|&j| j != i && rng.random_bool(0.35)).collect())
        .collect()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbour_permutation_invariance(seed in 0u64..10_000, n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = toy_graph(n, random_adjacency(n, &mut rng), seed);
        let model = toy_model(5, 2, AttentionConfig::default(), seed + 1);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled = relabel(&graph, &perm);
        for i in 0..n {
            let id = format!("u{i}");
            let a = forward_user(&graph, &id, &model).unwrap();
            let b = forward_user(&shuffled, &id, &model).unwrap();
            prop_assert_eq!(&a.heads[0].probs, &b.heads[0].probs);
            prop_assert_eq!(sorted(&a.heads[0].betas), sorted(&b.heads[0].betas));
        }
        // batched over the whole permuted graph too
        let all: Vec<usize> = (0..n).collect();
        let batch = forward_batch(&shuffled, &all, &model).unwrap();
        for (k, &old) in perm.iter().enumerate() {
            let single = forward_user(&graph, &format!("u{old}"), &model).unwrap();
            prop_assert_eq!(&batch.heads[k].probs, &single.heads[0].probs);
        }
    }

    #[test]
    fn one_hop_locality(seed in 0u64..10_000) {
        // 0 -> 1 -> 2 -> 3; node 0 must not see 2 or 3
        let graph = toy_graph(4, vec![vec![1], vec![2], vec![3], vec![]], seed);
        let model = toy_model(5, 2, AttentionConfig::default(), seed + 7);
        let before = forward_user(&graph, "u0", &model).unwrap();
        let mut changed = graph.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for far in [2, 3] {
            let donor = random_node(far, &mut rng, graph.layout());
            changed.node_mut(far).properties = donor.properties;
            changed.node_mut(far).posts = donor.posts;
        }
        let after = forward_user(&changed, "u0", &model).unwrap();
        prop_assert_eq!(&before.heads[0].probs, &after.heads[0].probs);
        let near = forward_user(&changed, "u1", &model).unwrap();
        let near_before = forward_user(&graph, "u1", &model).unwrap();
        prop_assert_ne!(&near.heads[0].probs, &near_before.heads[0].probs);
    }

    #[test]
    fn softmax_shift_and_argmax(z in proptest::collection::vec(-20_480i32..20_480, 1..40), shift in -64i32..64) {
        // dyadic grid so every shift is representable exactly
        let z: Vec<f64> = z.iter().map(|&v| f64::from(v) / 1024.0).collect();
        let shifted: Vec<f64> = z.iter().map(|&v| v + f64::from(shift)).collect();
        let a = softmax(&z);
        prop_assert_eq!(&a, &softmax(&shifted));
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = z.iter().position(|&v| v == top).unwrap();
        prop_assert_eq!(argmax(&a), first);
    }
}

#[test]
fn attention_weights_normalise() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let d = rng.random_range(1..=60);
        let p = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
        let bound = 1.0 / (d as f64).sqrt();
        let w1 = Array2::from_shape_fn((d, d), |_| rng.random_range(-bound..bound));
        let b1 = Array1::from_shape_fn(d, |_| rng.random_range(-0.5..0.5));
        let (_, alpha) = property_attention(p.view(), w1.view(), b1.view()).unwrap();
        assert!((alpha.sum() - 1.0).abs() <= 1e-9);
        assert!(alpha.iter().all(|&a| a > 0.0));

        let h = rng.random_range(1..=60);
        let k = rng.random_range(1..=12);
        let hu = Array1::from_shape_fn(h, |_| rng.random_range(-1.0..1.0));
        let hs: Vec<Array1<f64>> = (0..k).map(|_| Array1::from_shape_fn(h, |_| rng.random_range(-1.0..1.0))).collect();
        let views: Vec<_> = hs.iter().map(|v| v.view()).collect();
        let w3 = Array1::from_shape_fn(2 * h, |_| rng.random_range(-1.0..1.0));
        let (_, betas) = neighbour_scores(hu.view(), &views, w3.view(), rng.random_range(-1.0..1.0)).unwrap();
        assert!((betas.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(betas.iter().all(|&b| b > 0.0));
    }
}

#[test]
fn encoded_one_hot_segments_sum_to_one() {
    let dataset = generate_synthetic_cohort(&SynthConfig::weibo(120, 0.5), 11).unwrap();
    let graph = encode_cohort(&dataset, &EncodeConfig::default()).unwrap();
    for node in graph.nodes() {
        for seg in ["gender", "location"] {
            let values = node.properties.segment(seg).unwrap();
            assert_eq!(values.iter().sum::<f64>(), 1.0, "{seg} of {}", node.user_id);
            assert!(values.iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }
}

#[test]
fn shared_logit_shift_keeps_predictions() {
    for seed in 0..50 {
        let graph = toy_graph(6, vec![vec![1, 2], vec![0], vec![3, 4, 5], vec![], vec![0], vec![]], seed);
        let model = toy_model(5, 5, AttentionConfig::default(), seed);
        let mut shifted = model.clone();
        shifted.params.attention.b5.mapv_inplace(|b| b + 3.25);
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(
            forward_batch(&graph, &all, &model).unwrap().predictions(),
            forward_batch(&graph, &all, &shifted).unwrap().predictions()
        );
    }
}
