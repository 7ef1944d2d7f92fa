//! Save a model, inspect the file header and tensor table, and load it back.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riskgraph::model::Model;
use riskgraph::params::ParamSet;
use riskgraph::train_eval::TrainConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = TrainConfig::default().model_config(2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = Model::init(config, &mut rng)?;

    let path = std::env::temp_dir().join("riskgraph_example.pkgr");
    model.save(&path)?;
    let bytes = std::fs::read(&path)?;
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let count = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    println!("{}: magic {:?}, version {version}, {count} tensors, {} bytes",
        path.display(), String::from_utf8_lossy(&bytes[..4]), bytes.len());
    for (name, t) in model.params.tensors() {
        println!("  {name:<16} {:?}", t.shape());
    }
    println!("{} parameters", model.params.parameter_count());

    let loaded = Model::load(&path)?;
    let mut rounded = model.clone();
    rounded.round_to_f32();
    assert_eq!(loaded.to_bytes(), rounded.to_bytes());
    println!("reloaded: layout width {}, {} classes", loaded.config.layout.total_width(), loaded.config.classes);
    Ok(())
}
