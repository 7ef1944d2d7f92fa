//! Five-level risk classification on a synthetic forum cohort: no neighbour
//! attention, no personal-information or social-interaction properties.
//!
//! cargo run --release --example reddit_five_class -- [users] [epochs]

use riskgraph::data_model::{generate_synthetic_cohort, Split, SynthConfig};
use riskgraph::train_eval::{evaluate, train, TrainConfig};

fn main() -> riskgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let users: usize = args.next().map_or(500, |s| s.parse().expect("users"));
    let epochs: usize = args.next().map_or(15, |s| s.parse().expect("epochs"));

    let dataset = generate_synthetic_cohort(&SynthConfig::reddit(users), 3)?;
    let mut config = TrainConfig::reddit();
    config.train.epochs = epochs;
    let model_config = config.model_config(5);
    println!("property vector width {}", model_config.layout.total_width());

    let outcome = train(&dataset, &config)?;
    let eval = evaluate(&outcome.model, &dataset, Split::Test)?;
    let majority = (0..5)
        .map(|c| dataset.users_in(Split::Test).filter(|u| u.label == c).count())
        .max()
        .unwrap_or(0) as f64
        / dataset.users_in(Split::Test).count() as f64;
    println!("best epoch {}", outcome.best_epoch);
    println!("majority baseline {majority:.4}");
    print!("{}", eval.report.to_text(&eval.confusion));
    Ok(())
}
