//! Train a small model and print, for a few test users, the class
//! probabilities, the most attended properties and the neighbour weights.

use riskgraph::data_model::{generate_synthetic_cohort, Split, SynthConfig};
use riskgraph::train_eval::{diagnose, train, TrainConfig};

fn main() -> riskgraph::Result<()> {
    let dataset = generate_synthetic_cohort(&SynthConfig::weibo(200, 0.5), 8)?;
    let mut config = TrainConfig::default();
    config.train.epochs = 12;
    config.model.lstm_hidden = 64;
    let outcome = train(&dataset, &config)?;

    for user in dataset.users_in(Split::Test).take(3) {
        println!("--- label {}", user.label);
        print!("{}", diagnose(&outcome.model, &dataset, &user.user_id)?);
    }
    Ok(())
}
