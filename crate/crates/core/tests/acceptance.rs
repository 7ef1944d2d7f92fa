//! Acceptance gate: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use riskgraph::attention_net::{
    argmax, forward_user, neighbour_scores, property_attention, softmax, Aggregation, AttentionConfig,
};
use riskgraph::data_model::{generate_synthetic_cohort, CohortDataset, Split, SynthConfig};
use riskgraph::kg_builder::{encode_cohort, Category, EncodeConfig, KnowledgeGraph};
use riskgraph::train_eval::{
    evaluate, feature_knockout_sweep, info_gain, rank_categories, train, ConfusionMatrix, Evaluation,
    MetricsReport, TrainConfig,
};

// Tolerances and targets.
const GRAD_REL: f64 = 1e-4;
const GRAD_ABS: f64 = 1e-6;
const GRAD_SECONDS: f64 = 30.0;
const NORM_TOL: f64 = 1e-9;
const E2E_ACCURACY: f64 = 0.90;
const E2E_F1: f64 = 0.90;
const E2E_SECONDS: f64 = 600.0;
const ABLATION_GAP: f64 = 0.005;
const ABLATION_TARGET_GAP: f64 = 0.03;
const INFOGAIN_TOL: f64 = 1e-12;
const KNOCKOUT_SLACK: f64 = 0.02;
const REDDIT_ACCURACY: f64 = 0.30;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn weibo_cohort() -> CohortDataset {
    let mut s = SynthConfig::weibo(600, 0.5);
    s.split = [0.6, 0.2, 0.2];
    generate_synthetic_cohort(&s, 1).unwrap()
}

fn weibo_config() -> TrainConfig {
    let mut c = TrainConfig::default();
    c.train.epochs = 12;
    c
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let adjacency = vec![vec![1, 2, 3], vec![0, 4], vec![3], vec![], vec![]];
    let variants = [
        (4, 2, AttentionConfig::default()),
        (60, 2, AttentionConfig::default()),
        (4, 5, AttentionConfig { aggregation: Aggregation::Elu, ..AttentionConfig::default() }),
        (60, 5, AttentionConfig::default()),
    ];
    let (mut checked, mut failures) = (0, Vec::new());
    for (k, (hidden, classes, attention)) in variants.into_iter().enumerate() {
        let model = toy_model(hidden, classes, attention, 10 + k as u64);
        let graph = toy_graph(5, adjacency.clone(), 20 + k as u64);
        let centers = [0, 1, 4];
        let r = gradient_check(&model, &graph, &centers, &targets_for(&graph, &centers, classes));
        checked += r.checked;
        failures.extend(r.failures);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < GRAD_SECONDS,
        format!(
            "{checked} parameters over 15 tensors, {} outside {GRAD_REL:e} rel / {GRAD_ABS:e} abs, {secs:.1}s{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn attention_normalisation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut non_positive = 0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=60);
        let bound = 1.0 / (d as f64).sqrt();
        let p = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0));
        let w1 = Array2::from_shape_fn((d, d), |_| rng.random_range(-bound..bound));
        let b1 = Array1::from_shape_fn(d, |_| rng.random_range(-0.5..0.5));
        let (_, alpha) = property_attention(p.view(), w1.view(), b1.view()).unwrap();
        worst = worst.max((alpha.sum() - 1.0).abs());
        non_positive += alpha.iter().filter(|&&a| a <= 0.0).count();

        let h = rng.random_range(1..=60);
        let k = rng.random_range(1..=12);
        let hu = Array1::from_shape_fn(h, |_| rng.random_range(-1.0..1.0));
        let hs: Vec<Array1<f64>> = (0..k).map(|_| Array1::from_shape_fn(h, |_| rng.random_range(-1.0..1.0))).collect();
        let views: Vec<_> = hs.iter().map(|v| v.view()).collect();
        let w3 = Array1::from_shape_fn(2 * h, |_| rng.random_range(-1.0..1.0));
        let (_, betas) = neighbour_scores(hu.view(), &views, w3.view(), rng.random_range(-1.0..1.0)).unwrap();
        worst = worst.max((betas.iter().sum::<f64>() - 1.0).abs());
        non_positive += betas.iter().filter(|&&b| b <= 0.0).count();
    }
    outcome(
        worst <= NORM_TOL && non_positive == 0,
        format!("1000 α and 1000 β vectors, max |sum-1| = {worst:.1e}, {non_positive} non-positive weights"),
    )
}

fn relabel(graph: &KnowledgeGraph, perm: &[usize]) -> KnowledgeGraph {
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

fn structural_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut broken = Vec::new();
    for case in 0..200u64 {
        let n = rng.random_range(2..9);
        let adjacency: Vec<Vec<usize>> =
            (0..n).map(|i| (0..n).filter(|&j| j != i && rng.random_bool(0.35)).collect()).collect();
        let graph = toy_graph(n, adjacency, case);
        let model = toy_model(5, 2, AttentionConfig::default(), case + 1);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled = relabel(&graph, &perm);
        for i in 0..n {
            let id = format!("u{i}");
            if forward_user(&graph, &id, &model).unwrap().heads[0].probs
                != forward_user(&shuffled, &id, &model).unwrap().heads[0].probs
            {
                broken.push(format!("permutation case {case}"));
            }
        }
        // 0 -> 1 -> 2: replacing node 2 must not move node 0
        let chain = toy_graph(3, vec![vec![1], vec![2], vec![]], case);
        let mut changed = chain.clone();
        let donor = random_node(2, &mut rng, chain.layout());
        changed.node_mut(2).properties = donor.properties;
        changed.node_mut(2).posts = donor.posts;
        if forward_user(&chain, "u0", &model).unwrap().heads[0].probs
            != forward_user(&changed, "u0", &model).unwrap().heads[0].probs
        {
            broken.push(format!("locality case {case}"));
        }
    }
    for case in 0..1000 {
        let len = rng.random_range(1..40);
        let z: Vec<f64> = (0..len).map(|_| f64::from(rng.random_range(-20_480i32..20_480)) / 1024.0).collect();
        let shift = f64::from(rng.random_range(-64i32..64));
        let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let a = softmax(&z);
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if a != softmax(&shifted) || argmax(&a) != z.iter().position(|&v| v == top).unwrap() {
            broken.push(format!("softmax case {case}"));
        }
    }
    let dataset = generate_synthetic_cohort(&SynthConfig::weibo(200, 0.5), 4).unwrap();
    let encoded = encode_cohort(&dataset, &EncodeConfig::default()).unwrap();
    for node in encoded.nodes() {
        for seg in ["gender", "location"] {
            if node.properties.segment(seg).unwrap().iter().sum::<f64>() != 1.0 {
                broken.push(format!("{seg} of {}", node.user_id));
            }
        }
    }
    outcome(
        broken.is_empty(),
        format!(
            "200 graphs (permutation, locality), 1000 softmax shifts, 200 users' one-hot segments; {} violations{}",
            broken.len(),
            broken.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

fn end_to_end(dataset: &CohortDataset) -> (Outcome, Outcome, Option<Evaluation>) {
    let start = Instant::now();
    let config = weibo_config();
    let full = train(dataset, &config).and_then(|o| evaluate(&o.model, dataset, Split::Test));
    let secs = start.elapsed().as_secs_f64();
    let full = match full {
        Ok(e) => e,
        Err(e) => return (outcome(false, e.to_string()), outcome(false, "not run"), None),
    };
    let r = &full.report;
    let e2e = outcome(
        r.accuracy >= E2E_ACCURACY && r.f1 >= E2E_F1 && secs < E2E_SECONDS,
        format!(
            "600 users, {} test: accuracy {:.4} (≥ {E2E_ACCURACY}), F1 {:.4} (≥ {E2E_F1}), {secs:.0}s",
            r.support, r.accuracy, r.f1
        ),
    );
    let ablation = match train(dataset, &config.clone().without_kg()).and_then(|o| evaluate(&o.model, dataset, Split::Test)) {
        Ok(w) => {
            let gap = r.accuracy - w.report.accuracy;
            outcome(
                gap >= ABLATION_GAP,
                format!(
                    "without-KG accuracy {:.4} vs {:.4}: gap {:.2} points (asserted ≥ {:.1}; 3-point target {})",
                    w.report.accuracy,
                    r.accuracy,
                    100.0 * gap,
                    100.0 * ABLATION_GAP,
                    if gap >= ABLATION_TARGET_GAP { "met" } else { "not met" }
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    };
    (e2e, ablation, Some(full))
}

/// Mutual information from the joint distribution, as an independent oracle.
fn mutual_information(labels: &[usize], feature: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut joint = [[0.0f64; 3]; 2];
    for (&y, &f) in labels.iter().zip(feature) {
        joint[y][f] += 1.0 / n;
    }
    let py = [joint[0].iter().sum::<f64>(), joint[1].iter().sum::<f64>()];
    let pf: Vec<f64> = (0..3).map(|f| joint[0][f] + joint[1][f]).collect();
    let mut mi = 0.0;
    for y in 0..2 {
        for f in 0..3 {
            if joint[y][f] > 0.0 {
                mi += joint[y][f] * (joint[y][f] / (py[y] * pf[f])).log2();
            }
        }
    }
    mi
}

fn information_gain() -> Outcome {
    let mut ranked_first = 0;
    let mut misses = Vec::new();
    for planted in Category::ALL {
        for seed in 0..10 {
            let dataset = generate_synthetic_cohort(&SynthConfig::planted(200, planted), seed).unwrap();
            let top = rank_categories(&dataset, None).unwrap().categories[0].0;
            if top == planted {
                ranked_first += 1;
            } else {
                misses.push(format!("{planted} seed {seed} -> {top}"));
            }
        }
    }
    // every 2x3 contingency table with 4..=16 samples
    let (mut cases, mut worst) = (0usize, 0.0f64);
    for n in 4..=16usize {
        let mut cells = [0usize; 6];
        compositions(n, 0, &mut cells, &mut |cells| {
            let (mut y, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for (k, &count) in cells.iter().enumerate() {
                y.extend(std::iter::repeat_n(k / 3, count));
                f.extend(std::iter::repeat_n(k % 3, count));
            }
            let got = info_gain(&y, &f).unwrap();
            worst = worst.max((got - mutual_information(&y, &f)).abs());
            cases += 1;
        });
    }
    outcome(
        misses.is_empty() && worst <= INFOGAIN_TOL,
        format!(
            "planted category ranked first in {ranked_first}/60 (6 categories x 10 seeds){}; {cases} exhaustive tables, max |Δ| = {worst:.1e}",
            misses.first().map(|m| format!(", miss: {m}")).unwrap_or_default()
        ),
    )
}

fn compositions(remaining: usize, cell: usize, cells: &mut [usize; 6], visit: &mut dyn FnMut(&[usize; 6])) {
    if cell == 5 {
        cells[5] = remaining;
        visit(cells);
        return;
    }
    for c in 0..=remaining {
        cells[cell] = c;
        compositions(remaining - c, cell + 1, cells, visit);
    }
}

fn knockout(dataset: &CohortDataset, baseline: Option<&Evaluation>) -> Outcome {
    let Some(baseline) = baseline else {
        return outcome(false, "baseline training failed");
    };
    let xs = [1, 3, 5, 10];
    match feature_knockout_sweep(dataset, &weibo_config(), &xs) {
        Ok(results) => {
            // x = 0 is the unmodified baseline model
            let mut acc = vec![baseline.report.accuracy];
            acc.extend(results.iter().map(|r| r.evaluation.report.accuracy));
            let monotone = acc.windows(2).all(|w| w[1] <= w[0] + KNOCKOUT_SLACK);
            let shown: Vec<String> = [0].iter().chain(&xs).zip(&acc).map(|(x, a)| format!("x={x}: {a:.4}")).collect();
            outcome(monotone, format!("{} (slack {KNOCKOUT_SLACK})", shown.join(", ")))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn metrics_oracle_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for case in 0..50 {
        let classes = if case % 2 == 0 { 2 } else { 5 };
        let n = rng.random_range(1..80);
        let actual: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let predicted: Vec<usize> =
            actual.iter().map(|&a| if rng.random_bool(0.5) { a } else { rng.random_range(0..classes) }).collect();
        let r = MetricsReport::from_confusion(&ConfusionMatrix::from_predictions(classes, &actual, &predicted).unwrap()).unwrap();
        let o = oracle(&actual, &predicted, classes);
        let macro_ok = classes == 2 || r.macro_f1 == Some(r.per_class_f1.iter().sum::<f64>() / 5.0);
        if r.accuracy != o.accuracy || r.precision != o.precision || r.recall != o.recall || r.f1 != o.f1 || !macro_ok {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("50 random matrices (25 binary, 25 five-class), {mismatches} mismatches"))
}

fn cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_riskgraph"))
        .args(args)
        .current_dir(dir)
        .env_remove("RISKGRAPH_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn determinism() -> Outcome {
    let run = |dir: &Path| -> Result<Vec<Vec<u8>>, String> {
        std::fs::write(dir.join("config.toml"), "[train]\nepochs = 3\nseed = 5\n").map_err(|e| e.to_string())?;
        cli(&["synth", "--out", "cohort", "--users", "120", "--seed", "5"], dir)?;
        cli(&["train", "--data", "cohort", "--config", "config.toml", "--model-out", "run/model.pkgr"], dir)?;
        cli(&["eval", "--data", "cohort", "--model", "run/model.pkgr", "--split", "test"], dir)?;
        ["run/model.pkgr", "run/train_log.csv", "run/eval_test/metrics.txt", "cohort/posts.jsonl", "cohort/users.jsonl"]
            .iter()
            .map(|f| std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}")))
            .collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match (run(a.path()), run(b.path())) {
        (Ok(x), Ok(y)) => {
            let same = x == y;
            outcome(same, format!("synth → train → eval twice: model, log, metrics and cohort files {}", if same { "byte-identical" } else { "differ" }))
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

fn reddit_mode() -> Outcome {
    let dataset = generate_synthetic_cohort(&SynthConfig::reddit(500), 3).unwrap();
    let mut config = TrainConfig::reddit();
    config.train.epochs = 15;
    let result = train(&dataset, &config).and_then(|o| {
        let eval = evaluate(&o.model, &dataset, Split::Test)?;
        Ok((o.model, eval))
    });
    match result {
        Ok((model, eval)) => {
            let c = &model.config;
            let shape_ok = c.classes == 5 && !c.attention.neighbour_attention && c.layout.total_width() == 45;
            let test: Vec<usize> = dataset.users_in(Split::Test).map(|u| u.label).collect();
            let majority = (0..5).map(|k| test.iter().filter(|&&l| l == k).count()).max().unwrap() as f64 / test.len() as f64;
            outcome(
                shape_ok && eval.report.accuracy > REDDIT_ACCURACY,
                format!(
                    "5 classes, D = {}, neighbour attention {}: accuracy {:.4} (> {REDDIT_ACCURACY}; majority {majority:.4}), macro-F1 {:.4}",
                    c.layout.total_width(),
                    if c.attention.neighbour_attention { "on" } else { "off" },
                    eval.report.accuracy,
                    eval.report.macro_f1.unwrap_or(f64::NAN)
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    })
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    report("gradient correctness", guarded(gradient_correctness));
    report("attention normalisation", guarded(attention_normalisation));
    report("structural invariants", guarded(structural_invariants));
    report("metrics oracle", guarded(metrics_oracle_check));
    report("information gain", guarded(information_gain));

    let dataset = weibo_cohort();
    let (e2e, ablation, baseline) =
        catch_unwind(AssertUnwindSafe(|| end_to_end(&dataset))).unwrap_or_else(|_| {
            (outcome(false, "panicked"), outcome(false, "panicked"), None)
        });
    report("synthetic end-to-end", e2e);
    report("without-KG ablation", ablation);
    report("feature knockout", guarded(|| knockout(&dataset, baseline.as_ref())));
    report("determinism", guarded(determinism));
    report("reddit mode", guarded(reddit_mode));

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
