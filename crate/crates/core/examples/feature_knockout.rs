//! Retrain with the top-x information-gain properties zeroed and watch test
//! accuracy fall as x grows.
//!
//! cargo run --release --example feature_knockout -- [users] [epochs] [seed]

use riskgraph::data_model::{generate_synthetic_cohort, SynthConfig};
use riskgraph::train_eval::{feature_knockout_sweep, TrainConfig};

fn main() -> riskgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let users: usize = args.next().map_or(600, |s| s.parse().expect("users"));
    let epochs: usize = args.next().map_or(10, |s| s.parse().expect("epochs"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));

    let mut synth = SynthConfig::weibo(users, 0.5);
    synth.split = [0.6, 0.2, 0.2];
    let dataset = generate_synthetic_cohort(&synth, seed)?;
    let mut config = TrainConfig::default();
    config.train.epochs = epochs;

    for r in feature_knockout_sweep(&dataset, &config, &[0, 1, 3, 5, 10])? {
        println!(
            "x = {:>2}  accuracy {:.4}  f1 {:.4}  removed [{}]",
            r.top_x,
            r.evaluation.report.accuracy,
            r.evaluation.report.f1,
            r.removed.join(", ")
        );
    }
    Ok(())
}
