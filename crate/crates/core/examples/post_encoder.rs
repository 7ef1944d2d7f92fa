//! Run the post-sequence LSTM over one user's posts and print the 30-wide
//! post-behaviour vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riskgraph::data_model::{generate_synthetic_cohort, SynthConfig};
use riskgraph::post_encoder::{
    encode_empty_user, encode_post_behavior, LstmDims, LstmParams, PostSequenceTensor, SequenceConfig,
};

fn main() -> riskgraph::Result<()> {
    let dataset = generate_synthetic_cohort(&SynthConfig::weibo(10, 0.5), 4)?;
    let user = dataset.users.iter().max_by_key(|u| u.posts.len()).expect("users");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = LstmParams::init(LstmDims::default(), &mut rng);

    let seq = PostSequenceTensor::from_posts(&user.posts, &SequenceConfig::default());
    println!("user {}: {} posts -> sequence {}x{}", user.user_id, user.posts.len(), seq.len(), seq.width());
    let behavior = encode_post_behavior(&seq, &params)?;
    let shown: Vec<String> = behavior.values.iter().map(|v| format!("{v:.3}")).collect();
    println!("behaviour vector ({}): [{}]", behavior.values.len(), shown.join(" "));

    let truncated = PostSequenceTensor::from_posts(&user.posts, &SequenceConfig { max_posts: 2, ..SequenceConfig::default() });
    println!("with max_posts = 2 the sequence keeps {} rows", truncated.len());

    let empty = encode_empty_user(&params)?;
    println!("a user without posts encodes to {} values, {} non-zero", empty.values.len(), empty.values.iter().filter(|v| **v != 0.0).count());
    Ok(())
}
