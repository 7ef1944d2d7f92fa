//! Seeded synthetic cohorts.
//!
//! Class-conditional generators whose per-class means follow the published
//! cohort statistics (weibo profile) or the five-level forum cohort mix
//! (reddit profile). Embeddings carry a per-user latent risk score along a
//! fixed direction so post sequences are statistically separable.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal, Normal, Poisson};

use super::{
    default_lexicons, null_image_embedding, pseudo_embed, CohortDataset, Gender, Location,
    PostRecord, SocialEdge, Split, StressCategory, StressPeriod, UserRecord, IMAGE_WIDTH,
    MIN_STRESS_DAYS, TEXT_WIDTH,
};
use crate::error::{Error, Result};
use crate::kg_builder::Category;

/// Class sizes of the five-level forum cohort, lowest to highest risk.
pub const REDDIT_CLASS_COUNTS: [usize; 5] = [108, 99, 171, 77, 45];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Weibo,
    Reddit,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weibo" => Ok(Profile::Weibo),
            "reddit" => Ok(Profile::Reddit),
            other => Err(Error::Config(format!("unknown profile '{other}'"))),
        }
    }
}

/// Per-class generation targets. Proportions are fractions, not percents.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassProfile {
    /// female, male, unknown
    pub gender_mix: [f64; 3],
    pub mean_age: f64,
    pub age_unknown_rate: f64,
    /// Same order as [`Location::ALL`].
    pub location_mix: [f64; 8],
    pub perfection_prop: f64,
    pub ruminant_prop: f64,
    /// Mean number of interpersonal-relation stress periods.
    pub interpersonal_sensitive: f64,
    pub stress_periods: f64,
    pub strong_stress_rate: f64,
    pub disorder_rate: f64,
    pub attempt_rate: f64,
    pub posts_mean: f64,
    pub image_rate: f64,
    pub suicide_prop: f64,
    pub last_words_prop: f64,
    pub future_prop: f64,
    pub negation_prop: f64,
    pub self_concern_prop: f64,
    pub love_joy: f64,
    pub love_anxiety_sorrow: f64,
    pub following: f64,
    pub followers: f64,
    pub interactions: f64,
    pub neighbours: f64,
    pub polarity: f64,
    pub brightness: f64,
    pub warmth: f64,
    pub night_post_rate: f64,
    /// Mean of the per-user latent carried by text embeddings.
    pub text_signal: f64,
    /// Mean of the per-user latent carried by image embeddings.
    pub image_signal: f64,
}

fn normalized<const N: usize>(mut mix: [f64; N]) -> [f64; N] {
    let total: f64 = mix.iter().sum();
    mix.iter_mut().for_each(|v| *v /= total);
    mix
}

impl ClassProfile {
    /// Users with suicidal ideation, weibo cohort statistics.
    pub fn weibo_suicidal() -> Self {
        ClassProfile {
            gender_mix: normalized([78.5, 21.3, 0.2]),
            mean_age: 25.8,
            age_unknown_rate: 0.05,
            location_mix: normalized([18.8, 10.5, 7.4, 6.6, 3.0, 7.0, 3.3, 43.5]),
            perfection_prop: 0.0025,
            ruminant_prop: 0.00086,
            interpersonal_sensitive: 1.3,
            stress_periods: 2.1,
            strong_stress_rate: 0.6,
            disorder_rate: 0.001,
            attempt_rate: 0.035,
            posts_mean: 4.5,
            image_rate: 93_461.0 / 252_901.0,
            suicide_prop: 0.00034,
            last_words_prop: 0.000013,
            future_prop: 0.00031,
            negation_prop: 0.00012,
            self_concern_prop: 0.00079,
            love_joy: 0.1,
            love_anxiety_sorrow: 0.5,
            following: 207.0,
            followers: 566.9,
            interactions: 3.4,
            neighbours: 4.3,
            polarity: -0.25,
            brightness: 0.42,
            warmth: 0.42,
            night_post_rate: 0.35,
            text_signal: 1.0,
            image_signal: 1.0,
        }
    }

    /// Ordinary users, weibo cohort statistics.
    pub fn weibo_ordinary() -> Self {
        ClassProfile {
            gender_mix: normalized([42.3, 50.6, 7.1]),
            mean_age: 28.3,
            age_unknown_rate: 0.05,
            location_mix: normalized([25.0, 15.0, 15.7, 5.8, 2.9, 7.9, 5.3, 22.3]),
            perfection_prop: 0.0017,
            ruminant_prop: 0.00052,
            interpersonal_sensitive: 1.0,
            stress_periods: 1.8,
            strong_stress_rate: 0.4,
            disorder_rate: 0.0003,
            attempt_rate: 0.001,
            posts_mean: 5.5,
            image_rate: 260_667.0 / 491_130.0,
            suicide_prop: 0.00016,
            last_words_prop: 0.00000023,
            future_prop: 0.00045,
            negation_prop: 0.00009,
            self_concern_prop: 0.00029,
            love_joy: 0.3,
            love_anxiety_sorrow: 0.1,
            following: 378.1,
            followers: 1515.3,
            interactions: 10.9,
            neighbours: 5.1,
            polarity: 0.2,
            brightness: 0.58,
            warmth: 0.58,
            night_post_rate: 0.15,
            text_signal: -1.0,
            image_signal: -1.0,
        }
    }

    /// Linear interpolation between two profiles (`t = 0` gives `a`).
    pub fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        let l = |x: f64, y: f64| x + (y - x) * t;
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(&x, &y)| l(x, y)).collect() };
        let gender = mix(&a.gender_mix, &b.gender_mix);
        let location = mix(&a.location_mix, &b.location_mix);
        ClassProfile {
            gender_mix: [gender[0], gender[1], gender[2]],
            mean_age: l(a.mean_age, b.mean_age),
            age_unknown_rate: l(a.age_unknown_rate, b.age_unknown_rate),
            location_mix: std::array::from_fn(|i| location[i]),
            perfection_prop: l(a.perfection_prop, b.perfection_prop),
            ruminant_prop: l(a.ruminant_prop, b.ruminant_prop),
            interpersonal_sensitive: l(a.interpersonal_sensitive, b.interpersonal_sensitive),
            stress_periods: l(a.stress_periods, b.stress_periods),
            strong_stress_rate: l(a.strong_stress_rate, b.strong_stress_rate),
            disorder_rate: l(a.disorder_rate, b.disorder_rate),
            attempt_rate: l(a.attempt_rate, b.attempt_rate),
            posts_mean: l(a.posts_mean, b.posts_mean),
            image_rate: l(a.image_rate, b.image_rate),
            suicide_prop: l(a.suicide_prop, b.suicide_prop),
            last_words_prop: l(a.last_words_prop, b.last_words_prop),
            future_prop: l(a.future_prop, b.future_prop),
            negation_prop: l(a.negation_prop, b.negation_prop),
            self_concern_prop: l(a.self_concern_prop, b.self_concern_prop),
            love_joy: l(a.love_joy, b.love_joy),
            love_anxiety_sorrow: l(a.love_anxiety_sorrow, b.love_anxiety_sorrow),
            following: l(a.following, b.following),
            followers: l(a.followers, b.followers),
            interactions: l(a.interactions, b.interactions),
            neighbours: l(a.neighbours, b.neighbours),
            polarity: l(a.polarity, b.polarity),
            brightness: l(a.brightness, b.brightness),
            warmth: l(a.warmth, b.warmth),
            night_post_rate: l(a.night_post_rate, b.night_post_rate),
            text_signal: l(a.text_signal, b.text_signal),
            image_signal: l(a.image_signal, b.image_signal),
        }
    }

    /// A profile with no class signal in posts, used as the neutral base of
    /// planted-signal cohorts.
    fn neutral() -> Self {
        ClassProfile {
            text_signal: 0.0,
            image_signal: 0.0,
            interpersonal_sensitive: 0.0,
            ..ClassProfile::weibo_ordinary()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub profile: Profile,
    pub users: usize,
    /// Share of users per class; index = class label.
    pub class_shares: Vec<f64>,
    pub classes: Vec<ClassProfile>,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
    /// Probability that a followed user has the follower's class.
    pub homophily: f64,
    /// Standard deviation of the per-user latent around its class mean.
    pub latent_sd: f64,
    /// Per-post jitter of the latent.
    pub post_jitter: f64,
    /// Scale of the latent direction inside each embedding.
    pub embedding_signal: f64,
    pub start_day: NaiveDate,
    pub days: i64,
}

impl SynthConfig {
    /// Binary cohort; `suicidal_share` is the fraction of label-1 users.
    pub fn weibo(users: usize, suicidal_share: f64) -> Self {
        SynthConfig {
            profile: Profile::Weibo,
            users,
            class_shares: vec![1.0 - suicidal_share, suicidal_share],
            classes: vec![ClassProfile::weibo_ordinary(), ClassProfile::weibo_suicidal()],
            split: [0.84, 0.08, 0.08],
            homophily: 0.8,
            latent_sd: 1.0,
            post_jitter: 0.5,
            embedding_signal: 1.0,
            start_day: NaiveDate::from_ymd_opt(2018, 5, 1).expect("valid date"),
            days: 365,
        }
    }

    /// Five-level cohort with the forum class mix, text-only posts and no
    /// social graph.
    pub fn reddit(users: usize) -> Self {
        let total: usize = REDDIT_CLASS_COUNTS.iter().sum();
        let ordinary = ClassProfile::weibo_ordinary();
        let suicidal = ClassProfile::weibo_suicidal();
        let classes = (0..5)
            .map(|c| {
                let mut p = ClassProfile::lerp(&ordinary, &suicidal, c as f64 / 4.0);
                p.gender_mix = [0.0, 0.0, 1.0];
                p.age_unknown_rate = 1.0;
                p.location_mix = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
                p.image_rate = 0.0;
                p.following = 0.0;
                p.followers = 0.0;
                p.interactions = 0.0;
                p.neighbours = 0.0;
                p.text_signal = -2.0 + c as f64;
                p
            })
            .collect();
        SynthConfig {
            profile: Profile::Reddit,
            users,
            class_shares: REDDIT_CLASS_COUNTS.iter().map(|&n| n as f64 / total as f64).collect(),
            classes,
            split: [303.0 / 500.0, 99.0 / 500.0, 98.0 / 500.0],
            homophily: 0.0,
            latent_sd: 0.6,
            ..SynthConfig::weibo(users, 0.5)
        }
    }

    /// Balanced binary cohort whose classes differ only in the properties of
    /// `category`.
    pub fn planted(users: usize, category: Category) -> Self {
        let base = ClassProfile::neutral();
        let mut hi = base.clone();
        let mut lo = base.clone();
        match category {
            Category::PersonalInformation => {
                hi.gender_mix = [0.9, 0.08, 0.02];
                lo.gender_mix = [0.1, 0.88, 0.02];
                hi.mean_age = 21.0;
                lo.mean_age = 36.0;
                hi.location_mix = normalized([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 13.0]);
                lo.location_mix = normalized([13.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
            }
            Category::Personality => {
                hi.perfection_prop = 0.06;
                lo.perfection_prop = 0.002;
                hi.ruminant_prop = 0.05;
                lo.ruminant_prop = 0.001;
                hi.interpersonal_sensitive = 1.6;
                lo.interpersonal_sensitive = 0.0;
            }
            Category::Experience => {
                hi.stress_periods = 4.5;
                lo.stress_periods = 0.8;
                hi.strong_stress_rate = 0.9;
                lo.strong_stress_rate = 0.1;
                hi.attempt_rate = 0.3;
                hi.disorder_rate = 0.3;
            }
            Category::PostBehavior => {
                hi.text_signal = 1.5;
                lo.text_signal = -1.5;
                hi.image_signal = 1.5;
                lo.image_signal = -1.5;
                hi.polarity = -0.5;
                lo.polarity = 0.5;
                hi.brightness = 0.25;
                lo.brightness = 0.75;
                hi.warmth = 0.25;
                lo.warmth = 0.75;
                hi.night_post_rate = 0.6;
                lo.night_post_rate = 0.05;
            }
            Category::EmotionExpression => {
                hi.suicide_prop = 0.05;
                lo.suicide_prop = 0.002;
                hi.last_words_prop = 0.03;
                hi.future_prop = 0.002;
                lo.future_prop = 0.04;
                hi.negation_prop = 0.05;
                lo.negation_prop = 0.005;
                hi.self_concern_prop = 0.08;
                lo.self_concern_prop = 0.01;
                hi.love_joy = 0.05;
                lo.love_joy = 1.5;
                hi.love_anxiety_sorrow = 1.5;
                lo.love_anxiety_sorrow = 0.05;
            }
            Category::SocialInteraction => {
                hi.following = 60.0;
                lo.following = 900.0;
                hi.followers = 120.0;
                lo.followers = 3000.0;
                hi.interactions = 1.0;
                lo.interactions = 30.0;
            }
        }
        SynthConfig {
            classes: vec![lo, hi],
            homophily: 0.5,
            ..SynthConfig::weibo(users, 0.5)
        }
    }

    fn class_sizes(&self) -> Result<Vec<usize>> {
        if self.class_shares.len() != self.classes.len() || self.classes.len() < 2 {
            return Err(Error::Config(format!(
                "{} class shares for {} class profiles",
                self.class_shares.len(),
                self.classes.len()
            )));
        }
        if self.class_shares.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
            return Err(Error::Config("class shares must lie in [0, 1]".into()));
        }
        let total: f64 = self.class_shares.iter().sum();
        let mut sizes: Vec<usize> = self
            .class_shares
            .iter()
            .map(|s| (s / total * self.users as f64).round() as usize)
            .collect();
        let assigned: usize = sizes[..sizes.len() - 1].iter().sum();
        let last = sizes.len() - 1;
        sizes[last] = self.users.saturating_sub(assigned);
        if let Some((c, n)) = sizes.iter().enumerate().find(|(_, &n)| n < 2) {
            return Err(Error::Config(format!(
                "class {c} would get {n} users; at least 2 per class are required"
            )));
        }
        Ok(sizes)
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn binomial(rng: &mut ChaCha8Rng, n: u32, p: f64) -> u32 {
    if p <= 0.0 {
        return 0;
    }
    Binomial::new(u64::from(n), p.min(1.0)).expect("valid p").sample(rng) as u32
}

/// Log-normal count with the given mean.
fn heavy_count(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let mu = mean.ln() - sigma * sigma / 2.0;
    LogNormal::new(mu, sigma).expect("valid sigma").sample(rng).round() as u64
}

fn unit_mix(noise: &[f64], direction: &[f64], scale: f64) -> Vec<f64> {
    let mut v: Vec<f64> = noise.iter().zip(direction).map(|(n, d)| n + scale * d).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    v.iter_mut().for_each(|x| *x = round4(*x / norm));
    v
}

/// Pick exactly `round(rate * n)` members of `0..n`.
fn stratified_flags(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<bool> {
    let k = ((rate * n as f64).round() as usize).min(n);
    let mut flags = vec![false; n];
    for i in rand::seq::index::sample(rng, n, k) {
        flags[i] = true;
    }
    flags
}

/// Generate a labelled cohort. Pure function of `(config, seed)`.
pub fn generate_synthetic_cohort(config: &SynthConfig, seed: u64) -> Result<CohortDataset> {
    let sizes = config.class_sizes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text_dir = pseudo_embed(format!("riskgraph/{seed}/text-direction").as_bytes(), TEXT_WIDTH)?;
    let image_dir = pseudo_embed(format!("riskgraph/{seed}/image-direction").as_bytes(), IMAGE_WIDTH)?;

    let mut labels = Vec::with_capacity(config.users);
    for (class, &n) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat_n(class, n));
    }
    labels.shuffle(&mut rng);

    let mut disorder = vec![false; labels.len()];
    let mut attempt = vec![false; labels.len()];
    for (class, profile) in config.classes.iter().enumerate() {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        for (rate, out) in [
            (profile.disorder_rate, &mut disorder),
            (profile.attempt_rate, &mut attempt),
        ] {
            for (slot, set) in members.iter().zip(stratified_flags(&mut rng, members.len(), rate)) {
                out[*slot] = set;
            }
        }
    }

    let start = config.start_day.and_time(NaiveTime::MIN).and_utc().timestamp();
    let mut users = Vec::with_capacity(labels.len());
    for (index, &label) in labels.iter().enumerate() {
        let p = &config.classes[label];
        let user_id = format!("u{index:05}");

        let gender = Gender::ALL[categorical(&mut rng, &p.gender_mix)];
        let age_years = if rng.random::<f64>() < p.age_unknown_rate {
            None
        } else {
            let age: f64 = Normal::new(p.mean_age, 7.0).expect("sd").sample(&mut rng);
            Some(age.round().clamp(14.0, 65.0) as i64)
        };
        let location = Location::ALL[categorical(&mut rng, &p.location_mix)];

        let n_periods = poisson(&mut rng, p.stress_periods);
        let interpersonal_share = if p.stress_periods > 0.0 {
            (p.interpersonal_sensitive / p.stress_periods).min(1.0)
        } else {
            0.0
        };
        let others: Vec<StressCategory> = StressCategory::ALL
            .into_iter()
            .filter(|c| *c != StressCategory::InterpersonalRelation)
            .collect();
        let mut stress_periods = Vec::with_capacity(n_periods as usize);
        for _ in 0..n_periods {
            let category = if rng.random::<f64>() < interpersonal_share {
                StressCategory::InterpersonalRelation
            } else {
                others[rng.random_range(0..others.len())]
            };
            let level = if rng.random::<f64>() < p.strong_stress_rate { 2 } else { 1 };
            let begin = config.start_day + Duration::days(rng.random_range(0..config.days));
            let length = rng.random_range(MIN_STRESS_DAYS + 1..=60);
            stress_periods.push(StressPeriod {
                start_day: begin,
                end_day: begin + Duration::days(length),
                level,
                category,
            });
        }

        let latent_text = p.text_signal + config.latent_sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
        let latent_image = p.image_signal + config.latent_sd * rng.sample::<f64, _>(rand_distr::StandardNormal);

        let n_posts = (2 + poisson(&mut rng, (p.posts_mean - 2.0).max(0.0))) as usize;
        let mut times: Vec<(i64, u8)> = (0..n_posts)
            .map(|_| {
                let day = rng.random_range(0..config.days);
                let hour = if rng.random::<f64>() < p.night_post_rate {
                    rng.random_range(0..6u8)
                } else {
                    rng.random_range(6..24u8)
                };
                let ts = start + day * 86_400 + i64::from(hour) * 3_600 + rng.random_range(0..3_600);
                (ts, hour)
            })
            .collect();
        times.sort();

        // Emotion-transition flags: pairs inside the last ten posts.
        let recent = n_posts.min(10);
        let pairs = (recent * (recent - 1) / 2) as f64;
        let love_rate = 0.5;
        let joy_rate = (p.love_joy / (love_rate * pairs)).min(1.0);
        let sorrow_rate = (p.love_anxiety_sorrow / (love_rate * pairs)).min(1.0);

        let mut posts = Vec::with_capacity(n_posts);
        for (k, &(timestamp, hour)) in times.iter().enumerate() {
            let post_id = format!("{user_id}-p{k}");
            let total_tokens: u32 = rng.random_range(20..=80);
            let mut token_counts = BTreeMap::new();
            let mut put = |name: &str, n: u32| {
                if n > 0 {
                    token_counts.insert(name.to_string(), n.min(total_tokens));
                }
            };
            let suicide_hits = binomial(&mut rng, total_tokens, p.suicide_prop);
            put("suicide", suicide_hits);
            put("last_words", binomial(&mut rng, total_tokens, p.last_words_prop));
            put("future", binomial(&mut rng, total_tokens, p.future_prop));
            put("negation", binomial(&mut rng, total_tokens, p.negation_prop));
            put("self_concern", binomial(&mut rng, total_tokens, p.self_concern_prop));
            put("perfection", binomial(&mut rng, total_tokens, p.perfection_prop));
            put("ruminant", binomial(&mut rng, total_tokens, p.ruminant_prop));
            put("love", u32::from(rng.random::<f64>() < love_rate));
            put("joy", u32::from(rng.random::<f64>() < joy_rate));
            let sorrow = rng.random::<f64>() < sorrow_rate;
            if sorrow {
                if rng.random::<bool>() {
                    put("anxiety", 1);
                } else {
                    put("sorrow", 1);
                }
            }
            let suicide_weight = (0..suicide_hits.min(total_tokens))
                .map(|_| rng.random_range(1..=3u32))
                .sum();

            let jitter = config.post_jitter * rng.sample::<f64, _>(rand_distr::StandardNormal);
            let noise = pseudo_embed(format!("{seed}/{post_id}/text").as_bytes(), TEXT_WIDTH)?;
            let text_embedding = unit_mix(&noise, &text_dir, config.embedding_signal * (latent_text + jitter));

            let has_image = rng.random::<f64>() < p.image_rate;
            let (image_embedding, image_brightness, image_warmth) = if has_image {
                let jitter = config.post_jitter * rng.sample::<f64, _>(rand_distr::StandardNormal);
                let noise = pseudo_embed(format!("{seed}/{post_id}/image").as_bytes(), IMAGE_WIDTH)?;
                let emb = unit_mix(&noise, &image_dir, config.embedding_signal * (latent_image + jitter));
                let b = round4((p.brightness + 0.15 * rng.sample::<f64, _>(rand_distr::StandardNormal)).clamp(0.0, 1.0));
                let w = round4((p.warmth + 0.15 * rng.sample::<f64, _>(rand_distr::StandardNormal)).clamp(0.0, 1.0));
                (emb, Some(b), Some(w))
            } else {
                (null_image_embedding(), None, None)
            };
            let polarity =
                round4((p.polarity + 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal)).clamp(-1.0, 1.0));

            posts.push(PostRecord {
                post_id,
                user_id: user_id.clone(),
                timestamp,
                hour,
                text_embedding,
                image_embedding,
                token_counts,
                total_tokens,
                suicide_weight,
                sentiment_polarity: polarity,
                image_brightness,
                image_warmth,
                text: None,
            });
        }

        users.push(UserRecord {
            user_id,
            gender,
            age_years,
            location,
            posts,
            stress_periods,
            disorder_flag: disorder[index],
            attempt_flag: attempt[index],
            following_count: heavy_count(&mut rng, p.following, 0.9),
            follower_count: heavy_count(&mut rng, p.followers, 0.9),
            interact_count: heavy_count(&mut rng, p.interactions, 0.8),
            label,
        });
    }

    // Follow graph with class homophily.
    let by_class: Vec<Vec<usize>> = (0..sizes.len())
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let mut edges = Vec::new();
    for (src, &label) in labels.iter().enumerate() {
        let k = poisson(&mut rng, config.classes[label].neighbours) as usize;
        let k = k.min(labels.len() - 1);
        let mut chosen = BTreeSet::new();
        let mut attempts = 0;
        while chosen.len() < k && attempts < 50 * (k + 1) {
            attempts += 1;
            let pool = if rng.random::<f64>() < config.homophily || sizes.len() < 2 {
                &by_class[label]
            } else {
                let other = (label + rng.random_range(1..sizes.len())) % sizes.len();
                &by_class[other]
            };
            let dst = pool[rng.random_range(0..pool.len())];
            if dst != src {
                chosen.insert(dst);
            }
        }
        for dst in chosen {
            edges.push(SocialEdge {
                src: users[src].user_id.clone(),
                dst: users[dst].user_id.clone(),
            });
        }
    }

    // Stratified split.
    let mut split = BTreeMap::new();
    for members in &by_class {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_val = ((config.split[1] * n as f64).round() as usize).max(usize::from(n >= 3));
        let n_test = ((config.split[2] * n as f64).round() as usize).max(usize::from(n >= 3));
        let n_train = n.saturating_sub(n_val + n_test);
        for (rank, i) in members.into_iter().enumerate() {
            let s = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            split.insert(users[i].user_id.clone(), s);
        }
    }

    CohortDataset::new(users, edges, default_lexicons(), split)
}
