use std::fmt;

use crate::attention_net;
use crate::data_model::CohortDataset;
use crate::error::Result;
use crate::kg_builder::encode_cohort;
use crate::model::Model;

/// Class probabilities and attention weights for one user.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnosis {
    pub user_id: String,
    pub probabilities: Vec<f64>,
    pub predicted: usize,
    /// The `min(5, D)` largest property-attention weights.
    pub top_alpha: Vec<(String, f64)>,
    /// β per neighbour, in adjacency order.
    pub neighbours: Vec<(String, f64)>,
}

pub const TOP_ALPHA: usize = 5;

pub fn diagnose(model: &Model, dataset: &CohortDataset, user_id: &str) -> Result<Diagnosis> {
    let graph = encode_cohort(dataset, &model.config.encode)?;
    let trace = attention_net::forward_user(&graph, user_id, model)?;
    let head = &trace.heads[0];
    let slots = graph.layout().slot_names();
    let alpha = trace.alpha_of(0);
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
    let top_alpha = order
        .into_iter()
        .take(TOP_ALPHA.min(alpha.len()))
        .map(|i| (slots[i].clone(), alpha[i]))
        .collect();
    let neighbours = head
        .neighbours
        .iter()
        .zip(&head.betas)
        .map(|(&slot, &b)| (graph.node(trace.nodes[slot]).user_id.clone(), b))
        .collect();
    Ok(Diagnosis {
        user_id: user_id.to_string(),
        probabilities: head.probs.to_vec(),
        predicted: trace.predictions()[0],
        top_alpha,
        neighbours,
    })
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "user {}", self.user_id)?;
        writeln!(f, "predicted {}", self.predicted)?;
        writeln!(f, "probabilities")?;
        for (c, p) in self.probabilities.iter().enumerate() {
            writeln!(f, "  class_{c} {p:.9}")?;
        }
        writeln!(f, "alpha (top {})", self.top_alpha.len())?;
        for (name, a) in &self.top_alpha {
            writeln!(f, "  {name} {a:.6}")?;
        }
        writeln!(f, "beta")?;
        if self.neighbours.is_empty() {
            writeln!(f, "  no neighbours")?;
        }
        for (id, b) in &self.neighbours {
            writeln!(f, "  {id} {b:.6}")?;
        }
        Ok(())
    }
}
