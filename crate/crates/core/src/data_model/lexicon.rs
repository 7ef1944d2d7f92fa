use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lexicon names understood by the encoders.
pub const LEXICON_NAMES: [&str; 12] = [
    "suicide",
    "last_words",
    "future",
    "negation",
    "self_concern",
    "others_concern",
    "perfection",
    "ruminant",
    "love",
    "joy",
    "anxiety",
    "sorrow",
];

/// Lowercased whitespace tokens with surrounding punctuation stripped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric() && c != '-' && c != '\'')
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// A named word/phrase list with positive integer weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    /// Phrase (space-separated lowercase tokens) -> weight.
    pub entries: BTreeMap<String, u32>,
}

impl Lexicon {
    pub fn new<'a>(name: &str, entries: impl IntoIterator<Item = (&'a str, u32)>) -> Result<Self> {
        let lexicon = Lexicon {
            name: name.to_string(),
            entries: entries
                .into_iter()
                .map(|(w, weight)| (tokenize(w).join(" "), weight))
                .collect(),
        };
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Validation(format!("lexicon '{}' is empty", self.name)));
        }
        if let Some((w, _)) = self.entries.iter().find(|(_, &weight)| weight == 0) {
            return Err(Error::Validation(format!(
                "lexicon '{}' entry '{w}' has non-positive weight",
                self.name
            )));
        }
        Ok(())
    }

    fn max_phrase_len(&self) -> usize {
        self.entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(1)
    }

    /// Longest-match scan; returns the weight of every matched occurrence in order.
    pub fn scan<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        let longest = self.max_phrase_len();
        let mut hits = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut matched = 0;
            for len in (1..=longest.min(tokens.len() - i)).rev() {
                let phrase = tokens[i..i + len]
                    .iter()
                    .map(AsRef::as_ref)
                    .collect::<Vec<_>>()
                    .join(" ");
                if let Some(&w) = self.entries.get(&phrase) {
                    hits.push(w);
                    matched = len;
                    break;
                }
            }
            i += matched.max(1);
        }
        hits
    }

    pub fn count_matches<S: AsRef<str>>(&self, tokens: &[S]) -> usize {
        self.scan(tokens).len()
    }

    pub fn weighted_sum<S: AsRef<str>>(&self, tokens: &[S]) -> u32 {
        self.scan(tokens).iter().sum()
    }

    pub(crate) fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, weight) in &self.entries {
            out.push_str(word);
            out.push('\t');
            out.push_str(&weight.to_string());
            out.push('\n');
        }
        out
    }

    pub(crate) fn from_tsv(name: &str, text: &str, context: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, weight) = match line.split_once('\t') {
                Some((w, weight)) => {
                    let weight = weight.trim().parse::<u32>().map_err(|_| {
                        Error::format(context, format!("line {}: bad weight '{weight}'", lineno + 1))
                    })?;
                    (w, weight)
                }
                None => (line, 1),
            };
            entries.insert(word.to_string(), weight);
        }
        let lexicon = Lexicon {
            name: name.to_string(),
            entries,
        };
        lexicon.validate()?;
        Ok(lexicon)
    }
}

/// Small built-in English lexicons. Enough to annotate raw text in tests and
/// to ship alongside synthetic cohorts; real deployments load their own.
pub fn default_lexicons() -> BTreeMap<String, Lexicon> {
    let table: [(&str, &[(&str, u32)]); 12] = [
        (
            "suicide",
            &[
                ("suicide", 3),
                ("kill myself", 3),
                ("end my life", 3),
                ("want to die", 3),
                ("self-harm", 3),
                ("die", 2),
                ("hopeless", 2),
                ("worthless", 2),
                ("no way out", 2),
                ("tired", 1),
                ("alone", 1),
                ("pain", 1),
                ("empty", 1),
            ],
        ),
        (
            "last_words",
            &[
                ("goodbye", 1),
                ("farewell", 1),
                ("forgive me", 1),
                ("take care of mom", 1),
                ("my funeral", 1),
                ("last words", 1),
                ("sorry everyone", 1),
            ],
        ),
        (
            "future",
            &[
                ("tomorrow", 1),
                ("next week", 1),
                ("will", 1),
                ("plan", 1),
                ("someday", 1),
                ("future", 1),
                ("soon", 1),
            ],
        ),
        (
            "negation",
            &[
                ("not", 1),
                ("no", 1),
                ("never", 1),
                ("nothing", 1),
                ("nobody", 1),
                ("don't", 1),
                ("can't", 1),
            ],
        ),
        (
            "self_concern",
            &[("i", 1), ("me", 1), ("my", 1), ("myself", 1), ("mine", 1)],
        ),
        (
            "others_concern",
            &[("you", 1), ("they", 1), ("we", 1), ("them", 1), ("us", 1)],
        ),
        (
            "perfection",
            &[
                ("perfect", 1),
                ("perfectionist", 1),
                ("perfection", 1),
                ("stupid", 1),
                ("wrong", 1),
                ("upset", 1),
                ("struggle", 1),
                ("goal", 1),
                ("not enough", 1),
                ("loser", 1),
                ("failure", 1),
                ("imperfect", 1),
                ("compete", 1),
                ("useless", 1),
                ("disappoint", 1),
            ],
        ),
        (
            "ruminant",
            &[
                ("regret", 1),
                ("repent", 1),
                ("rue", 1),
                ("penitent", 1),
                ("confess", 1),
                ("hate", 1),
                ("self-blame", 1),
                ("grievance", 1),
                ("complaint", 1),
                ("injustice", 1),
                ("owe", 1),
                ("sinner", 1),
            ],
        ),
        (
            "love",
            &[("love", 1), ("adore", 1), ("darling", 1), ("miss you", 1), ("sweetheart", 1)],
        ),
        (
            "joy",
            &[("happy", 1), ("joy", 1), ("glad", 1), ("delighted", 1), ("wonderful", 1)],
        ),
        (
            "anxiety",
            &[("anxious", 1), ("worried", 1), ("nervous", 1), ("panic", 1), ("afraid", 1)],
        ),
        (
            "sorrow",
            &[("sad", 1), ("sorrow", 1), ("crying", 1), ("grief", 1), ("heartbroken", 1)],
        ),
    ];
    table
        .into_iter()
        .map(|(name, entries)| {
            let lexicon = Lexicon::new(name, entries.iter().copied()).expect("built-in lexicon");
            (name.to_string(), lexicon)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_match_wins() {
        let lex = Lexicon::new("t", [("not", 1), ("not enough", 2)]).unwrap();
        assert_eq!(lex.scan(&tokenize("not enough, not really")), vec![2, 1]);
    }

    #[test]
    fn tsv_round_trip() {
        let lex = Lexicon::new("t", [("kill myself", 3), ("tired", 1)]).unwrap();
        let back = Lexicon::from_tsv("t", &lex.to_tsv(), "t.tsv").unwrap();
        assert_eq!(lex, back);
    }

    #[test]
    fn tsv_missing_weight_defaults_to_one() {
        let lex = Lexicon::from_tsv("t", "alone\n", "t.tsv").unwrap();
        assert_eq!(lex.entries["alone"], 1);
    }

    #[test]
    fn empty_lexicon_is_invalid() {
        assert!(Lexicon::new("t", []).is_err());
        assert!(Lexicon::new("t", [("x", 0)]).is_err());
    }

    #[test]
    fn default_lexicons_cover_all_names() {
        let lex = default_lexicons();
        for name in LEXICON_NAMES {
            assert!(lex.contains_key(name), "{name}");
        }
    }
}
