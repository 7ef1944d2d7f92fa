//! Generate a synthetic cohort, write it in the on-disk formats and load it
//! back.
//!
//! cargo run --example synthesize_cohort -- [out_dir] [users]

use riskgraph::data_model::{generate_synthetic_cohort, load_cohort, save_cohort, Split, SynthConfig};

fn main() -> riskgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "target/example_cohort".into());
    let users: usize = args.next().map_or(200, |s| s.parse().expect("users"));

    let dataset = generate_synthetic_cohort(&SynthConfig::weibo(users, 0.5), 1)?;
    save_cohort(&dataset, &out)?;
    let loaded = load_cohort(&out)?;
    assert_eq!(loaded.users.len(), dataset.users.len());

    let posts: usize = loaded.users.iter().map(|u| u.posts.len()).sum();
    let edges = loaded.edges.len();
    println!("{} users, {posts} posts, {edges} follow edges in {out}", loaded.users.len());
    for split in [Split::Train, Split::Validation, Split::Test] {
        let ids: Vec<_> = loaded.users_in(split).collect();
        let positive = ids.iter().filter(|u| u.label == 1).count();
        println!("  {split:<10} {:>4} users, {positive} labelled at risk", ids.len());
    }
    Ok(())
}
