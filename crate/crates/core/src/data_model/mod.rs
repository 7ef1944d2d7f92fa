//! Raw per-user facts, lexicons and cohort datasets.
//!
//! Everything in here is pre-encoding: posts carry their embeddings and
//! lexicon hit counts, users carry demographics, stress periods and social
//! counts. The [`crate::kg_builder`] module turns these into property vectors.

mod embed;
mod io;
mod lexicon;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embed::pseudo_embed;
pub use io::{load_cohort, save_cohort, EDGES_FILE, LEXICON_DIR, POSTS_FILE, SPLIT_FILE, USERS_FILE};
pub use lexicon::{default_lexicons, tokenize, Lexicon, LEXICON_NAMES};
pub use synth::{generate_synthetic_cohort, ClassProfile, Profile, SynthConfig, REDDIT_CLASS_COUNTS};

pub type UserId = String;

/// Width of a sentence embedding attached to a post.
pub const TEXT_WIDTH: usize = 768;
/// Width of an (averaged) image embedding attached to a post.
pub const IMAGE_WIDTH: usize = 300;

/// Embedding used for posts without any picture.
pub fn null_image_embedding() -> Vec<f64> {
    vec![0.0; IMAGE_WIDTH]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Female, Gender::Male, Gender::Unknown];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    East,
    South,
    North,
    SouthWest,
    NorthWest,
    Middle,
    NorthEast,
    Unknown,
}

impl Location {
    pub const ALL: [Location; 8] = [
        Location::East,
        Location::South,
        Location::North,
        Location::SouthWest,
        Location::NorthWest,
        Location::Middle,
        Location::NorthEast,
        Location::Unknown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressCategory {
    Study,
    Work,
    Family,
    InterpersonalRelation,
    RomanticRelation,
    SelfCognition,
}

impl StressCategory {
    pub const ALL: [StressCategory; 6] = [
        StressCategory::Study,
        StressCategory::Work,
        StressCategory::Family,
        StressCategory::InterpersonalRelation,
        StressCategory::RomanticRelation,
        StressCategory::SelfCognition,
    ];
}

/// Minimum length of a stressful period, in days (exclusive).
pub const MIN_STRESS_DAYS: i64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressPeriod {
    pub start_day: NaiveDate,
    pub end_day: NaiveDate,
    /// 1 = weak, 2 = strong.
    pub level: u8,
    pub category: StressCategory,
}

impl StressPeriod {
    pub fn new(
        start_day: NaiveDate,
        end_day: NaiveDate,
        level: u8,
        category: StressCategory,
    ) -> Result<Self> {
        let period = StressPeriod {
            start_day,
            end_day,
            level,
            category,
        };
        period.validate()?;
        Ok(period)
    }

    pub fn duration_days(&self) -> i64 {
        (self.end_day - self.start_day).num_days()
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_days() <= MIN_STRESS_DAYS {
            return Err(Error::Validation(format!(
                "stress period {}..{} lasts {} days, must exceed {MIN_STRESS_DAYS}",
                self.start_day,
                self.end_day,
                self.duration_days()
            )));
        }
        if !(1..=2).contains(&self.level) {
            return Err(Error::Validation(format!(
                "stress level {} not in {{1,2}}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub user_id: UserId,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub hour: u8,
    pub text_embedding: Vec<f64>,
    pub image_embedding: Vec<f64>,
    /// Lexicon name -> number of matched words/phrases in this post.
    #[serde(default)]
    pub token_counts: BTreeMap<String, u32>,
    pub total_tokens: u32,
    /// Sum of suicide-lexicon weights over all matches in this post.
    #[serde(default)]
    pub suicide_weight: u32,
    pub sentiment_polarity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_brightness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_warmth: Option<f64>,
    /// Raw text, when available. Lexicon scans prefer it over the stored counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl PostRecord {
    pub fn count(&self, lexicon: &str) -> u32 {
        self.token_counts.get(lexicon).copied().unwrap_or(0)
    }

    /// Share of this post's tokens that hit `lexicon`.
    pub fn proportion(&self, lexicon: &str) -> f64 {
        f64::from(self.count(lexicon)) / f64::from(self.total_tokens.max(1))
    }

    pub fn has_image(&self) -> bool {
        self.image_brightness.is_some() || self.image_embedding.iter().any(|&v| v != 0.0)
    }

    /// Recompute `total_tokens`, `token_counts` and `suicide_weight` from `text`.
    pub fn annotate(&mut self, lexicons: &BTreeMap<String, Lexicon>) {
        let Some(text) = self.text.as_deref() else {
            return;
        };
        let tokens = tokenize(text);
        self.total_tokens = (tokens.len() as u32).max(1);
        self.token_counts.clear();
        for (name, lexicon) in lexicons {
            let hits = lexicon.count_matches(&tokens);
            if hits > 0 {
                self.token_counts.insert(name.clone(), hits as u32);
            }
            if name == "suicide" {
                self.suicide_weight = lexicon.weighted_sum(&tokens);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = || format!("post {}", self.post_id);
        if self.text_embedding.len() != TEXT_WIDTH {
            return Err(Error::format(
                ctx(),
                format!(
                    "text_embedding has width {}, expected {TEXT_WIDTH}",
                    self.text_embedding.len()
                ),
            ));
        }
        if self.image_embedding.len() != IMAGE_WIDTH {
            return Err(Error::format(
                ctx(),
                format!(
                    "image_embedding has width {}, expected {IMAGE_WIDTH}",
                    self.image_embedding.len()
                ),
            ));
        }
        if self.hour > 23 {
            return Err(Error::format(ctx(), format!("hour {} outside 0..=23", self.hour)));
        }
        if self.total_tokens == 0 {
            return Err(Error::format(ctx(), "total_tokens must be positive"));
        }
        if let Some((name, &n)) = self
            .token_counts
            .iter()
            .find(|(_, &n)| n > self.total_tokens)
        {
            return Err(Error::format(
                ctx(),
                format!("token count {n} for '{name}' exceeds total_tokens {}", self.total_tokens),
            ));
        }
        if !(-1.0..=1.0).contains(&self.sentiment_polarity) {
            return Err(Error::format(ctx(), "sentiment_polarity outside [-1, 1]"));
        }
        for (field, v) in [("image_brightness", self.image_brightness), ("image_warmth", self.image_warmth)] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::format(ctx(), format!("{field} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserRecord {
    pub user_id: UserId,
    pub gender: Gender,
    pub age_years: Option<i64>,
    pub location: Location,
    /// Chronological.
    pub posts: Vec<PostRecord>,
    pub stress_periods: Vec<StressPeriod>,
    pub disorder_flag: bool,
    pub attempt_flag: bool,
    pub following_count: u64,
    /// Zombie followers already filtered out upstream.
    pub follower_count: u64,
    pub interact_count: u64,
    /// Class index: 0/1 for binary cohorts (1 = suicidal ideation), 0..5 for
    /// ordinal five-level cohorts.
    pub label: usize,
}

impl UserRecord {
    /// A user with no posts, no stress history and unknown demographics.
    pub fn blank(user_id: impl Into<UserId>, label: usize) -> Self {
        UserRecord {
            user_id: user_id.into(),
            gender: Gender::Unknown,
            age_years: None,
            location: Location::Unknown,
            posts: Vec::new(),
            stress_periods: Vec::new(),
            disorder_flag: false,
            attempt_flag: false,
            following_count: 0,
            follower_count: 0,
            interact_count: 0,
            label,
        }
    }

    pub fn latest_timestamp(&self) -> Option<i64> {
        self.posts.last().map(|p| p.timestamp)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SocialEdge {
    /// Follower.
    pub src: UserId,
    /// Followed user.
    pub dst: UserId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortDataset {
    pub users: Vec<UserRecord>,
    pub edges: Vec<SocialEdge>,
    pub lexicons: BTreeMap<String, Lexicon>,
    pub split: BTreeMap<UserId, Split>,
}

impl CohortDataset {
    /// Build a dataset, enforcing referential integrity.
    ///
    /// Self-loops are dropped and duplicate edges collapsed (first occurrence kept).
    pub fn new(
        users: Vec<UserRecord>,
        edges: Vec<SocialEdge>,
        lexicons: BTreeMap<String, Lexicon>,
        split: BTreeMap<UserId, Split>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(users.len());
        for user in &users {
            if !ids.insert(user.user_id.as_str()) {
                return Err(Error::Integrity(format!("duplicate user id '{}'", user.user_id)));
            }
            if let Some(age) = user.age_years {
                if age < 0 {
                    return Err(Error::Validation(format!(
                        "user '{}' has negative age {age}",
                        user.user_id
                    )));
                }
            }
            for window in user.posts.windows(2) {
                if window[1].timestamp < window[0].timestamp {
                    return Err(Error::Integrity(format!(
                        "posts of user '{}' are not chronological",
                        user.user_id
                    )));
                }
            }
            for post in &user.posts {
                if post.user_id != user.user_id {
                    return Err(Error::Integrity(format!(
                        "post '{}' belongs to '{}' but is attached to '{}'",
                        post.post_id, post.user_id, user.user_id
                    )));
                }
                post.validate()?;
            }
            for period in &user.stress_periods {
                period.validate()?;
            }
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut kept = Vec::with_capacity(edges.len());
        for edge in edges {
            for end in [&edge.src, &edge.dst] {
                if !ids.contains(end.as_str()) {
                    return Err(Error::Integrity(format!("edge references unknown user '{end}'")));
                }
            }
            if edge.src == edge.dst {
                log::warn!("dropping self-loop on user '{}'", edge.src);
                continue;
            }
            if seen.insert(edge.clone()) {
                kept.push(edge);
            }
        }

        for user in split.keys() {
            if !ids.contains(user.as_str()) {
                return Err(Error::Integrity(format!("split references unknown user '{user}'")));
            }
        }
        if let Some(user) = users.iter().find(|u| !split.contains_key(&u.user_id)) {
            return Err(Error::Integrity(format!(
                "user '{}' is not assigned to any split",
                user.user_id
            )));
        }

        for lexicon in lexicons.values() {
            lexicon.validate()?;
        }

        Ok(CohortDataset {
            users,
            edges: kept,
            lexicons,
            split,
        })
    }

    pub fn user(&self, id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == id)
    }

    pub fn users_in(&self, split: Split) -> impl Iterator<Item = &UserRecord> {
        self.users
            .iter()
            .filter(move |u| self.split.get(&u.user_id) == Some(&split))
    }

    /// Number of classes implied by the labels (at least 2).
    pub fn class_count(&self) -> usize {
        self.users.iter().map(|u| u.label + 1).max().unwrap_or(2).max(2)
    }

    /// Followed users per user id, self-loops removed, sorted.
    pub fn adjacency(&self) -> HashMap<&str, BTreeSet<&str>> {
        let mut adj: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for edge in &self.edges {
            if edge.src != edge.dst {
                adj.entry(edge.src.as_str()).or_default().insert(edge.dst.as_str());
            }
        }
        adj
    }

    pub fn lexicon(&self, name: &str) -> Option<&Lexicon> {
        self.lexicons.get(name)
    }
}

/// Weighted suicide-lexicon score of one post.
///
/// Scans the raw text when present, otherwise falls back to the stored
/// `suicide_weight`.
pub fn post_degree(post: &PostRecord, suicide_lexicon: &Lexicon) -> f64 {
    match post.text.as_deref() {
        Some(text) => f64::from(suicide_lexicon.weighted_sum(&tokenize(text))),
        None => f64::from(post.suicide_weight),
    }
}

pub fn user_degree(user: &UserRecord, suicide_lexicon: &Lexicon) -> f64 {
    user.posts
        .iter()
        .map(|p| post_degree(p, suicide_lexicon))
        .sum()
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    fn suicide_lexicon() -> Lexicon {
        Lexicon::new(
            "suicide",
            [("die", 3), ("tired", 1), ("alone", 1), ("end it", 2)],
        )
        .unwrap()
    }

    #[test]
    fn post_degree_no_hits_is_zero() {
        let p = text_post("u", "p", 0, "lovely weather for a walk");
        assert_eq!(post_degree(&p, &suicide_lexicon()), 0.0);
    }

    #[test]
    fn post_degree_sums_weights() {
        let p = text_post("u", "p", 0, "so tired and alone i want to die");
        assert_eq!(post_degree(&p, &suicide_lexicon()), 5.0);
    }

    #[test]
    fn post_degree_counts_every_occurrence() {
        let text = "end it now please just end it";
        // naive scan: count every start position where the phrase matches
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let naive = tokens.windows(2).filter(|w| w == &["end", "it"]).count() * 2;
        let p = text_post("u", "p", 0, text);
        assert_eq!(post_degree(&p, &suicide_lexicon()), naive as f64);
        assert_eq!(naive, 4);
    }

    #[test]
    fn post_degree_falls_back_to_stored_weight() {
        let mut p = post("u", "p", 0);
        p.suicide_weight = 7;
        assert_eq!(post_degree(&p, &suicide_lexicon()), 7.0);
    }

    #[test]
    fn user_degree_sums_posts() {
        let lex = suicide_lexicon();
        let mut user = UserRecord::blank("u", 1);
        assert_eq!(user_degree(&user, &lex), 0.0);
        user.posts.push(text_post("u", "a", 1, "so tired and alone i want to die"));
        user.posts.push(text_post("u", "b", 2, "end it end it"));
        assert_eq!(user_degree(&user, &lex), 9.0);
        user.posts.reverse();
        assert_eq!(user_degree(&user, &lex), 9.0);
    }

    #[test]
    fn stress_period_must_exceed_five_days() {
        assert!(StressPeriod::new(day(2019, 1, 1), day(2019, 1, 6), 1, StressCategory::Work).is_err());
        assert!(StressPeriod::new(day(2019, 1, 1), day(2019, 1, 7), 1, StressCategory::Work).is_ok());
        assert!(StressPeriod::new(day(2019, 1, 1), day(2019, 2, 1), 3, StressCategory::Work).is_err());
    }

    #[test]
    fn post_validation_rejects_bad_widths() {
        let mut p = post("u", "p", 0);
        p.text_embedding.pop();
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("767") && err.contains("768"), "{err}");
    }

    #[test]
    fn annotate_counts_lexicon_hits() {
        let lexicons = default_lexicons();
        let mut p = text_post("u", "p", 0, "I feel like such a failure and I regret everything");
        p.annotate(&lexicons);
        assert_eq!(p.total_tokens, 10);
        assert_eq!(p.count("perfection"), 1);
        assert_eq!(p.count("ruminant"), 1);
        assert_eq!(p.count("self_concern"), 2);
    }

    #[test]
    fn dataset_drops_self_loops_and_duplicates() {
        let users = vec![UserRecord::blank("a", 0), UserRecord::blank("b", 1)];
        let edges = vec![
            SocialEdge { src: "a".into(), dst: "b".into() },
            SocialEdge { src: "a".into(), dst: "a".into() },
            SocialEdge { src: "a".into(), dst: "b".into() },
        ];
        let split = [("a".to_string(), Split::Train), ("b".to_string(), Split::Test)]
            .into_iter()
            .collect();
        let ds = CohortDataset::new(users, edges, BTreeMap::new(), split).unwrap();
        assert_eq!(ds.edges.len(), 1);
    }

    #[test]
    fn dataset_rejects_dangling_edge() {
        let users = vec![UserRecord::blank("a", 0)];
        let edges = vec![SocialEdge { src: "a".into(), dst: "u9".into() }];
        let split = [("a".to_string(), Split::Train)].into_iter().collect();
        let err = CohortDataset::new(users, edges, BTreeMap::new(), split).unwrap_err();
        assert!(matches!(err, Error::Integrity(ref m) if m.contains("u9")));
    }
}
