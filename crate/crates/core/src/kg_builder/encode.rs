//! Per-category property encoders.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::layout::{PropertyLayout, POST_BEHAVIOR};
use crate::data_model::{
    tokenize, Gender, Lexicon, Location, PostRecord, StressCategory, StressPeriod, UserRecord,
};
use crate::error::{Error, Result};
use crate::post_encoder::{PostBehaviorVector, POST_BEHAVIOR_WIDTH};

pub const DEFAULT_MAX_AGE: u32 = 65;
/// Look-back window for last-words proportions.
pub const LAST_WORDS_WINDOW_SECS: i64 = 14 * 86_400;
/// Number of most recent posts scanned for emotion transitions.
pub const TRANSITION_WINDOW: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountScaling {
    #[default]
    Log1p,
    Raw,
}

impl CountScaling {
    pub fn apply(self, x: u64) -> f64 {
        match self {
            CountScaling::Log1p => (x as f64).ln_1p(),
            CountScaling::Raw => x as f64,
        }
    }
}

pub fn encode_gender(gender: Gender) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[gender.index()] = 1.0;
    v
}

/// `age / max_age` clamped to `[0, 1]`; unknown age encodes to 0.
pub fn encode_age(age_years: Option<i64>, max_age: u32) -> Result<f64> {
    if max_age == 0 {
        return Err(Error::Validation("max_age must be positive".into()));
    }
    match age_years {
        None => Ok(0.0),
        Some(age) if age < 0 => Err(Error::Validation(format!("negative age {age}"))),
        Some(age) => Ok((age as f64 / f64::from(max_age)).clamp(0.0, 1.0)),
    }
}

pub fn encode_location(location: Location) -> [f64; 8] {
    let mut v = [0.0; 8];
    v[location.index()] = 1.0;
    v
}

/// `(count, mean level, distinct categories)` of the stress periods.
pub fn encode_stress(periods: &[StressPeriod]) -> [f64; 3] {
    if periods.is_empty() {
        return [0.0; 3];
    }
    let n = periods.len() as f64;
    let level = periods.iter().map(|p| f64::from(p.level)).sum::<f64>() / n;
    let categories: BTreeSet<StressCategory> = periods.iter().map(|p| p.category).collect();
    [n, level, categories.len() as f64]
}

/// Lexicon hits and token count of a post. Raw text is scanned when both the
/// text and the lexicon are available; otherwise the stored counts are used.
fn hits(post: &PostRecord, lexicons: &BTreeMap<String, Lexicon>, name: &str) -> (f64, f64) {
    if let (Some(text), Some(lexicon)) = (post.text.as_deref(), lexicons.get(name)) {
        let tokens = tokenize(text);
        (lexicon.count_matches(&tokens) as f64, tokens.len().max(1) as f64)
    } else {
        (f64::from(post.count(name)), f64::from(post.total_tokens.max(1)))
    }
}

fn mean_proportion<'a>(
    posts: impl IntoIterator<Item = &'a PostRecord>,
    lexicons: &BTreeMap<String, Lexicon>,
    name: &str,
) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for post in posts {
        let (h, total) = hits(post, lexicons, name);
        sum += (h / total).min(1.0);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// `(perfect, ruminant, sensitive)`.
pub fn encode_personality(user: &UserRecord, lexicons: &BTreeMap<String, Lexicon>) -> [f64; 3] {
    let sensitive = user
        .stress_periods
        .iter()
        .filter(|s| s.category == StressCategory::InterpersonalRelation)
        .count() as f64;
    [
        mean_proportion(&user.posts, lexicons, "perfection"),
        mean_proportion(&user.posts, lexicons, "ruminant"),
        sensitive,
    ]
}

/// `(suicide, last words, future, negation, self, love->joy, love->anxiety/sorrow)`.
///
/// `now` is a Unix timestamp; last-words proportions only use posts in the
/// fourteen days up to it.
pub fn encode_emotion_expression(
    user: &UserRecord,
    lexicons: &BTreeMap<String, Lexicon>,
    now: i64,
) -> [f64; 7] {
    let posts = &user.posts;
    let window = posts
        .iter()
        .filter(|p| p.timestamp <= now && p.timestamp > now - LAST_WORDS_WINDOW_SECS);

    let recent = &posts[posts.len().saturating_sub(TRANSITION_WINDOW)..];
    let has = |p: &PostRecord, name: &str| hits(p, lexicons, name).0 >= 1.0;
    let mut love_joy = 0usize;
    let mut love_sad = 0usize;
    for (i, earlier) in recent.iter().enumerate() {
        if !has(earlier, "love") {
            continue;
        }
        for later in &recent[i + 1..] {
            if later.timestamp <= earlier.timestamp {
                continue;
            }
            if has(later, "joy") {
                love_joy += 1;
            }
            if has(later, "anxiety") || has(later, "sorrow") {
                love_sad += 1;
            }
        }
    }

    [
        mean_proportion(posts, lexicons, "suicide"),
        mean_proportion(window, lexicons, "last_words"),
        mean_proportion(posts, lexicons, "future"),
        mean_proportion(posts, lexicons, "negation"),
        mean_proportion(posts, lexicons, "self_concern"),
        love_joy as f64,
        love_sad as f64,
    ]
}

/// `(following, followers, interactions)`, each passed through `scaling`.
pub fn encode_interaction(user: &UserRecord, scaling: CountScaling) -> [f64; 3] {
    [
        scaling.apply(user.following_count),
        scaling.apply(user.follower_count),
        scaling.apply(user.interact_count),
    ]
}

/// Options shared by every encoder in a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub max_age: u32,
    pub interaction_scaling: CountScaling,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            max_age: DEFAULT_MAX_AGE,
            interaction_scaling: CountScaling::Log1p,
        }
    }
}

/// Every non-learned property of one user, keyed by segment name.
#[derive(Clone, Debug, PartialEq)]
pub struct UserProperties {
    segments: BTreeMap<&'static str, Vec<f64>>,
}

impl UserProperties {
    /// Encode with `now` = the user's latest post (or 0 without posts).
    pub fn encode(
        user: &UserRecord,
        lexicons: &BTreeMap<String, Lexicon>,
        options: &EncodeOptions,
    ) -> Result<Self> {
        Self::encode_at(user, lexicons, options, user.latest_timestamp().unwrap_or(0))
    }

    pub fn encode_at(
        user: &UserRecord,
        lexicons: &BTreeMap<String, Lexicon>,
        options: &EncodeOptions,
        now: i64,
    ) -> Result<Self> {
        let mut segments: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        segments.insert("gender", encode_gender(user.gender).to_vec());
        segments.insert("age", vec![encode_age(user.age_years, options.max_age)?]);
        segments.insert("location", encode_location(user.location).to_vec());
        let [perfect, ruminant, sensitive] = encode_personality(user, lexicons);
        segments.insert("perfection", vec![perfect]);
        segments.insert("ruminant", vec![ruminant]);
        segments.insert("sensitive", vec![sensitive]);
        let [num, level, cats] = encode_stress(&user.stress_periods);
        segments.insert("stress_num", vec![num]);
        segments.insert("stress_level", vec![level]);
        segments.insert("stress_categories", vec![cats]);
        segments.insert("disorder", vec![f64::from(u8::from(user.disorder_flag))]);
        segments.insert("attempt", vec![f64::from(u8::from(user.attempt_flag))]);
        let emotion = encode_emotion_expression(user, lexicons, now);
        for (name, v) in [
            "suicide_words",
            "last_words",
            "future_words",
            "negation_words",
            "self_concern",
            "love_joy",
            "love_anxiety_sorrow",
        ]
        .into_iter()
        .zip(emotion)
        {
            segments.insert(name, vec![v]);
        }
        let [following, followers, interactions] = encode_interaction(user, options.interaction_scaling);
        segments.insert("following", vec![following]);
        segments.insert("followers", vec![followers]);
        segments.insert("interactions", vec![interactions]);
        Ok(UserProperties { segments })
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.segments.get(name).map(Vec::as_slice)
    }
}

/// A user's assembled property vector together with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyVector {
    pub values: Vec<f64>,
    pub layout: Arc<PropertyLayout>,
}

impl PropertyVector {
    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout.entry(name).map(|e| &self.values[e.range()])
    }

    pub fn segment_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.layout.entry(name)?.range();
        Some(&mut self.values[range])
    }
}

/// Concatenate every segment of `layout` in order.
///
/// Segments missing from `properties` (the reserved slot) stay zero.
pub fn assemble_property_vector(
    properties: &UserProperties,
    post_behavior: &PostBehaviorVector,
    layout: &Arc<PropertyLayout>,
) -> Result<PropertyVector> {
    if post_behavior.values.len() != POST_BEHAVIOR_WIDTH {
        return Err(Error::Shape(format!(
            "post behaviour has width {}, expected {POST_BEHAVIOR_WIDTH}",
            post_behavior.values.len()
        )));
    }
    let mut values = vec![0.0; layout.total_width()];
    for entry in layout.entries() {
        let source = if entry.name == POST_BEHAVIOR {
            Some(post_behavior.values.as_slice())
        } else {
            properties.get(&entry.name)
        };
        if let Some(source) = source {
            if source.len() != entry.width {
                return Err(Error::Shape(format!(
                    "segment '{}' has {} values but layout width {}",
                    entry.name,
                    source.len(),
                    entry.width
                )));
            }
            values[entry.range()].copy_from_slice(source);
        }
    }
    Ok(PropertyVector {
        values,
        layout: Arc::clone(layout),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::testutil::*;
    use crate::data_model::{default_lexicons, StressPeriod};

    fn period(level: u8, category: StressCategory) -> StressPeriod {
        StressPeriod::new(day(2019, 1, 1), day(2019, 2, 1), level, category).unwrap()
    }

    #[test]
    fn gender_one_hot() {
        assert_eq!(encode_gender(Gender::Female), [1.0, 0.0, 0.0]);
        assert_eq!(encode_gender(Gender::Male), [0.0, 1.0, 0.0]);
        assert_eq!(encode_gender(Gender::Unknown), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn age_scaling() {
        assert_eq!(encode_age(Some(65), 65).unwrap(), 1.0);
        assert!((encode_age(Some(26), 65).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(encode_age(None, 65).unwrap(), 0.0);
        assert_eq!(encode_age(Some(90), 65).unwrap(), 1.0);
        assert!(encode_age(Some(-1), 65).is_err());
    }

    #[test]
    fn location_one_hot() {
        assert_eq!(encode_location(Location::East), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(encode_location(Location::Unknown), [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        for loc in Location::ALL {
            assert_eq!(encode_location(loc).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn stress_aggregates() {
        assert_eq!(encode_stress(&[]), [0.0, 0.0, 0.0]);
        let two = [period(1, StressCategory::Work), period(2, StressCategory::Work)];
        assert_eq!(encode_stress(&two), [2.0, 1.5, 1.0]);
        let three = [
            period(1, StressCategory::Study),
            period(1, StressCategory::Work),
            period(2, StressCategory::Family),
        ];
        let distinct: BTreeSet<_> = three.iter().map(|p| p.category).collect();
        assert_eq!(encode_stress(&three)[2], distinct.len() as f64);
        assert_eq!(encode_stress(&three)[2], 3.0);
    }

    #[test]
    fn personality_mean_of_ratios() {
        let lex = BTreeMap::new();
        let mut user = UserRecord::blank("u", 0);
        let mut a = post("u", "a", 1);
        a.total_tokens = 10;
        a.token_counts.insert("perfection".into(), 1);
        let mut b = post("u", "b", 2);
        b.total_tokens = 5;
        user.posts = vec![a, b];
        let [perfect, ruminant, sensitive] = encode_personality(&user, &lex);
        assert!((perfect - (0.1 + 0.0) / 2.0).abs() < 1e-15);
        assert_eq!(ruminant, 0.0);
        assert_eq!(sensitive, 0.0);

        user.stress_periods = vec![
            period(1, StressCategory::InterpersonalRelation),
            period(2, StressCategory::Work),
        ];
        assert_eq!(encode_personality(&user, &lex)[2], 1.0);
    }

    #[test]
    fn personality_saturates_at_one() {
        let mut user = UserRecord::blank("u", 0);
        let mut p = post("u", "a", 1);
        p.total_tokens = 4;
        p.token_counts.insert("ruminant".into(), 4);
        user.posts.push(p);
        assert_eq!(encode_personality(&user, &BTreeMap::new())[1], 1.0);
        assert_eq!(encode_personality(&UserRecord::blank("z", 0), &BTreeMap::new()), [0.0; 3]);
    }

    #[test]
    fn personality_scans_raw_text() {
        let user = UserRecord {
            posts: vec![text_post("u", "a", 1, "never good enough always a failure")],
            ..UserRecord::blank("u", 0)
        };
        let [perfect, _, _] = encode_personality(&user, &default_lexicons());
        // "never"... not in perfection list; "failure" is: 1 of 6 tokens
        assert!((perfect - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn emotion_zero_without_hits() {
        let mut user = UserRecord::blank("u", 0);
        user.posts = (0..5).map(|i| post("u", &format!("p{i}"), i * 100)).collect();
        assert_eq!(encode_emotion_expression(&user, &BTreeMap::new(), 1000), [0.0; 7]);
    }

    #[test]
    fn suicide_proportion() {
        let mut user = UserRecord::blank("u", 1);
        let mut p = post("u", "p", 0);
        p.total_tokens = 20;
        p.token_counts.insert("suicide".into(), 2);
        user.posts.push(p);
        assert!((encode_emotion_expression(&user, &BTreeMap::new(), 0)[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn love_joy_pairs() {
        let mut user = UserRecord::blank("u", 0);
        user.posts = (1..=10).map(|i| post("u", &format!("p{i}"), i * 60)).collect();
        user.posts[2].token_counts.insert("love".into(), 1);
        user.posts[4].token_counts.insert("joy".into(), 1);
        user.posts[7].token_counts.insert("joy".into(), 2);
        // brute force over ordered pairs
        let mut expected = 0;
        for i in 0..10 {
            for j in 0..10 {
                if i < j && user.posts[i].count("love") > 0 && user.posts[j].count("joy") > 0 {
                    expected += 1;
                }
            }
        }
        let e = encode_emotion_expression(&user, &BTreeMap::new(), 600);
        assert_eq!(e[5], expected as f64);
        assert_eq!(e[5], 2.0);
        assert_eq!(e[6], 0.0);
    }

    #[test]
    fn transitions_only_use_last_ten_posts() {
        let mut user = UserRecord::blank("u", 0);
        user.posts = (0..12).map(|i| post("u", &format!("p{i}"), i * 60)).collect();
        user.posts[0].token_counts.insert("love".into(), 1);
        user.posts[11].token_counts.insert("sorrow".into(), 1);
        assert_eq!(encode_emotion_expression(&user, &BTreeMap::new(), 1000)[6], 0.0);
        user.posts[2].token_counts.insert("love".into(), 1);
        assert_eq!(encode_emotion_expression(&user, &BTreeMap::new(), 1000)[6], 1.0);
    }

    #[test]
    fn last_words_window() {
        let now = 100 * 86_400;
        let mut user = UserRecord::blank("u", 1);
        let mut recent = post("u", "r", now - 86_400);
        recent.total_tokens = 10;
        recent.token_counts.insert("last_words".into(), 1);
        user.posts.push(recent);
        let base = encode_emotion_expression(&user, &BTreeMap::new(), now)[1];
        assert!((base - 0.1).abs() < 1e-15);

        let mut old = post("u", "o", now - 20 * 86_400);
        old.token_counts.insert("last_words".into(), 5);
        user.posts.insert(0, old);
        assert_eq!(encode_emotion_expression(&user, &BTreeMap::new(), now)[1], base);
    }

    #[test]
    fn interaction_log_scaling() {
        let mut user = UserRecord::blank("u", 0);
        assert_eq!(encode_interaction(&user, CountScaling::Log1p), [0.0; 3]);
        user.following_count = 207;
        assert_eq!(encode_interaction(&user, CountScaling::Log1p)[0], 208f64.ln());
        assert_eq!(encode_interaction(&user, CountScaling::Raw)[0], 207.0);
        user.follower_count = 10;
        let a = encode_interaction(&user, CountScaling::Log1p)[1];
        user.follower_count = 11;
        assert!(encode_interaction(&user, CountScaling::Log1p)[1] > a);
    }

    #[test]
    fn assemble_default_layout() {
        let layout = Arc::new(PropertyLayout::standard());
        let mut user = UserRecord::blank("u", 1);
        let zero_post = PostBehaviorVector::zeros();
        let props = UserProperties::encode(&user, &BTreeMap::new(), &EncodeOptions::default()).unwrap();
        let v = assemble_property_vector(&props, &zero_post, &layout).unwrap();
        assert_eq!(v.values.len(), 60);
        let mut expected = vec![0.0; 60];
        expected[2] = 1.0; // unknown gender
        expected[11] = 1.0; // unknown location
        assert_eq!(v.values, expected);

        user.disorder_flag = true;
        let props = UserProperties::encode(&user, &BTreeMap::new(), &EncodeOptions::default()).unwrap();
        let v = assemble_property_vector(&props, &zero_post, &layout).unwrap();
        assert_eq!(v.segment("disorder"), Some(&[1.0][..]));
        assert_eq!(v.values[layout.entry("disorder").unwrap().offset], 1.0);
    }

    #[test]
    fn assemble_rejects_bad_post_width() {
        let layout = Arc::new(PropertyLayout::standard());
        let props = UserProperties::encode(&UserRecord::blank("u", 0), &BTreeMap::new(), &EncodeOptions::default())
            .unwrap();
        let bad = PostBehaviorVector { values: vec![0.0; 29] };
        assert!(matches!(
            assemble_property_vector(&props, &bad, &layout),
            Err(Error::Shape(_))
        ));
    }
}
