//! Train on a seeded synthetic weibo-profile cohort and compare against the
//! post-behaviour-only ablation.
//!
//! cargo run --release --example train_weibo -- [users] [epochs]

use std::time::Instant;

use riskgraph::data_model::{generate_synthetic_cohort, Split, SynthConfig};
use riskgraph::train_eval::{evaluate, train, TrainConfig};

fn main() -> riskgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let users: usize = args.next().map_or(600, |s| s.parse().expect("users"));
    let epochs: usize = args.next().map_or(12, |s| s.parse().expect("epochs"));

    let mut synth = SynthConfig::weibo(users, 0.5);
    synth.split = [0.6, 0.2, 0.2];
    let dataset = generate_synthetic_cohort(&synth, 7)?;

    let mut config = TrainConfig::default();
    config.train.epochs = epochs;
    for (name, config) in [("full", config.clone()), ("without_kg", config.without_kg())] {
        let start = Instant::now();
        let outcome = train(&dataset, &config)?;
        let eval = evaluate(&outcome.model, &dataset, Split::Test)?;
        println!(
            "{name:>10}: best epoch {:>2}  test accuracy {:.4}  f1 {:.4}  ({:.1}s)",
            outcome.best_epoch,
            eval.report.accuracy,
            eval.report.f1,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
