use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::metrics::{ConfusionMatrix, MetricsReport};
use super::optim::Optimizer;
use crate::attention_net::{self, Target};
use crate::data_model::{CohortDataset, Split};
use crate::error::{Error, Result};
use crate::kg_builder::{encode_cohort, KnowledgeGraph};
use crate::model::{Model, Parameters};
use crate::params::ParamSet;

/// Users per forward pass during evaluation.
const EVAL_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_f1: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// The checkpoint with the best validation score.
    pub model: Model,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

pub const LOG_HEADER: &str = "epoch,train_loss,val_accuracy,val_f1";

impl TrainOutcome {
    pub fn log_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for e in &self.log {
            let _ = writeln!(s, "{},{:.6},{:.6},{:.6}", e.epoch, e.train_loss, e.val_accuracy, e.val_f1);
        }
        s
    }
}

/// Graph node indices of the users in `split`, in graph order.
pub fn split_nodes(dataset: &CohortDataset, graph: &KnowledgeGraph, split: Split) -> Vec<usize> {
    graph
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| dataset.split.get(&n.user_id) == Some(&split))
        .map(|(i, _)| i)
        .collect()
}

fn class_count(dataset: &CohortDataset, config: &TrainConfig) -> Result<usize> {
    let classes = config.train.classes.unwrap_or_else(|| dataset.class_count());
    if let Some(u) = dataset.users.iter().find(|u| u.label >= classes) {
        return Err(Error::Validation(format!(
            "user '{}' has label {} but the model has {classes} classes",
            u.user_id, u.label
        )));
    }
    Ok(classes)
}

pub fn train(dataset: &CohortDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let classes = class_count(dataset, config)?;
    let graph = encode_cohort(dataset, &config.encode_config())?;
    let train = split_nodes(dataset, &graph, Split::Train);
    let val = split_nodes(dataset, &graph, Split::Validation);
    train_graph(&graph, &train, &val, config, classes)
}

/// `N / (C * n_c)` per class; classes absent from training get weight 0.
pub fn class_weights(labels: &[usize], classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
        .iter()
        .map(|&n| {
            if n == 0 {
                0.0
            } else {
                labels.len() as f64 / (classes * n) as f64
            }
        })
        .collect()
}

/// Train on a prepared graph. `train` and `val` are node indices.
pub fn train_graph(
    graph: &KnowledgeGraph,
    train: &[usize],
    val: &[usize],
    config: &TrainConfig,
    classes: usize,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Validation("train and validation splits must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
    let model_config = config.model_config(classes);
    if **graph.layout() != model_config.layout {
        return Err(Error::Shape(format!(
            "graph layout {} differs from configured layout {}",
            graph.layout(),
            model_config.layout
        )));
    }
    let mut model = Model::init(model_config, &mut rng)?;
    let labels: Vec<usize> = train.iter().map(|&i| graph.node(i).label).collect();
    let weights = if config.train.class_balanced {
        class_weights(&labels, classes)
    } else {
        vec![1.0; classes]
    };

    let mut optimizer = Optimizer::new(config.optimizer.spec(), config.train.learning_rate, &model.params);
    let mut grads = Parameters::zeros_like(&model.params);
    let mut order: Vec<usize> = train.to_vec();
    let mut best: Option<(f64, f64, usize, Model)> = None;
    let mut log = Vec::with_capacity(config.train.epochs);

    for epoch in 1..=config.train.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.train.batch_size) {
            let trace = attention_net::forward_batch(graph, batch, &model)?;
            let targets: Vec<Target> = batch
                .iter()
                .map(|&i| {
                    let label = graph.node(i).label;
                    Target {
                        label,
                        weight: weights[label] / batch.len() as f64,
                    }
                })
                .collect();
            grads.fill_zero();
            let loss = attention_net::backward_into(&trace, &model, &targets, &mut grads)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("non-finite loss {loss} or gradient"),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            optimizer.step(&mut model.params, &grads);
        }
        let train_loss = epoch_loss / train.len() as f64;

        let (eval, val_loss) = evaluate_nodes(&model, graph, val)?;
        let score = eval.report.selection_score();
        log::info!(
            "epoch {epoch}: train_loss {train_loss:.4} val_acc {:.4} val_f1 {score:.4}",
            eval.report.accuracy
        );
        log.push(EpochLog {
            epoch,
            train_loss,
            val_accuracy: eval.report.accuracy,
            val_f1: score,
            val_loss,
        });
        let better = match &best {
            None => true,
            Some((s, l, _, _)) => score > *s || (score == *s && val_loss < *l),
        };
        if better {
            best = Some((score, val_loss, epoch, model.clone()));
        }
    }

    let (best_epoch, model) = match best {
        Some((_, _, epoch, m)) => (epoch, m),
        None => (0, model),
    };
    Ok(TrainOutcome {
        model,
        best_epoch,
        log,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<usize>,
}

/// Predicted classes and mean (unweighted) cross-entropy over `nodes`.
pub fn predict_nodes(model: &Model, graph: &KnowledgeGraph, nodes: &[usize]) -> Result<(Vec<usize>, f64)> {
    let mut preds = Vec::with_capacity(nodes.len());
    let mut loss = 0.0;
    for chunk in nodes.chunks(EVAL_CHUNK) {
        let trace = attention_net::forward_batch(graph, chunk, model)?;
        let targets: Vec<Target> = chunk
            .iter()
            .map(|&i| Target {
                label: graph.node(i).label.min(model.config.classes - 1),
                weight: 1.0,
            })
            .collect();
        loss += trace.loss(&targets);
        preds.extend(trace.predictions());
    }
    Ok((preds, loss / nodes.len().max(1) as f64))
}

pub fn evaluate_nodes(model: &Model, graph: &KnowledgeGraph, nodes: &[usize]) -> Result<(Evaluation, f64)> {
    if nodes.is_empty() {
        return Err(Error::Validation("evaluation split is empty".into()));
    }
    let (predictions, loss) = predict_nodes(model, graph, nodes)?;
    let actual: Vec<usize> = nodes.iter().map(|&i| graph.node(i).label).collect();
    let confusion = ConfusionMatrix::from_predictions(model.config.classes, &actual, &predictions)?;
    let report = MetricsReport::from_confusion(&confusion)?;
    Ok((
        Evaluation {
            report,
            confusion,
            predictions,
        },
        loss,
    ))
}

/// Encode `dataset` the way the model expects and score one split.
pub fn evaluate(model: &Model, dataset: &CohortDataset, split: Split) -> Result<Evaluation> {
    let graph = encode_cohort(dataset, &model.config.encode)?;
    let nodes = split_nodes(dataset, &graph, split);
    Ok(evaluate_nodes(model, &graph, &nodes)?.0)
}
