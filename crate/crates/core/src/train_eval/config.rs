//! Training configuration and its `key = value` file format.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optim::OptimizerSpec;
use crate::attention_net::{Aggregation, AttentionConfig, ATTENTION_HIDDEN};
use crate::error::{Error, Result};
use crate::kg_builder::{Category, CountScaling, EncodeConfig, EncodeOptions, LayoutOptions, DEFAULT_MAX_AGE};
use crate::model::ModelConfig;
use crate::post_encoder::{HourEncoding, SequenceConfig, DEFAULT_MAX_POSTS, LSTM_HIDDEN};

pub const SEED_ENV: &str = "RISKGRAPH_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Inferred from the labels when absent.
    pub classes: Option<usize>,
    /// Weight each class by `N / (C * n_c)` in the loss.
    pub class_balanced: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 30,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 1,
            classes: None,
            class_balanced: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            kind: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerSection {
    pub fn spec(&self) -> OptimizerSpec {
        match self.kind {
            OptimizerKind::Sgd => OptimizerSpec::Sgd,
            OptimizerKind::Adam => OptimizerSpec::Adam {
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub lstm_hidden: usize,
    pub attention_hidden: usize,
    pub aggregation: Aggregation,
    pub hour_encoding: HourEncoding,
    pub max_posts: usize,
    pub max_age: u32,
    pub interaction_scaling: CountScaling,
    pub reserved_slot: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            lstm_hidden: LSTM_HIDDEN,
            attention_hidden: ATTENTION_HIDDEN,
            aggregation: Aggregation::Sigmoid,
            hour_encoding: HourEncoding::Normalized,
            max_posts: DEFAULT_MAX_POSTS,
            max_age: DEFAULT_MAX_AGE,
            interaction_scaling: CountScaling::Log1p,
            reserved_slot: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    /// Post behaviour only: 30-wide vectors, no property or neighbour attention.
    pub without_kg: bool,
    pub disable_property_attention: bool,
    pub disable_neighbour_attention: bool,
    pub disable_categories: BTreeSet<Category>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub train: TrainSection,
    pub optimizer: OptimizerSection,
    pub model: ModelSection,
    pub ablation: AblationSection,
}

impl TrainConfig {
    /// Five classes, no neighbour attention, no personal-information or
    /// social-interaction properties.
    pub fn reddit() -> Self {
        let mut c = TrainConfig::default();
        c.train.classes = Some(5);
        c.ablation.disable_neighbour_attention = true;
        c.ablation.disable_categories = [Category::PersonalInformation, Category::SocialInteraction]
            .into_iter()
            .collect();
        c
    }

    pub fn without_kg(mut self) -> Self {
        self.ablation.without_kg = true;
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        config.validate_with(Some(text))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Replace the seed from `RISKGRAPH_SEED` when set.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.train.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(None)
    }

    fn validate_with(&self, source: Option<&str>) -> Result<()> {
        let fail = |key: &str, msg: String| {
            let line = source.and_then(|s| line_of(s, key));
            Error::Config(match line {
                Some(l) => format!("line {l}: {key}: {msg}"),
                None => format!("{key}: {msg}"),
            })
        };
        let t = &self.train;
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(fail("learning_rate", format!("must be positive, got {}", t.learning_rate)));
        }
        if t.batch_size == 0 {
            return Err(fail("batch_size", "must be at least 1".into()));
        }
        if let Some(c) = t.classes {
            if c != 2 && c != 5 {
                return Err(fail("classes", format!("must be 2 or 5, got {c}")));
            }
        }
        let o = &self.optimizer;
        for (key, v) in [("beta1", o.beta1), ("beta2", o.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(fail(key, format!("must lie in [0, 1), got {v}")));
            }
        }
        if o.epsilon.is_nan() || o.epsilon <= 0.0 {
            return Err(fail("epsilon", "must be positive".into()));
        }
        let m = &self.model;
        for (key, v) in [
            ("lstm_hidden", m.lstm_hidden),
            ("attention_hidden", m.attention_hidden),
            ("max_posts", m.max_posts),
            ("max_age", m.max_age as usize),
        ] {
            if v == 0 {
                return Err(fail(key, "must be positive".into()));
            }
        }
        if self.ablation.disable_categories.contains(&Category::PostBehavior) {
            return Err(fail("disable_categories", "post_behavior cannot be disabled".into()));
        }
        Ok(())
    }

    pub fn encode_config(&self) -> EncodeConfig {
        let layout = LayoutOptions {
            disabled_categories: self.ablation.disable_categories.clone(),
            reserved_slot: self.model.reserved_slot,
            post_behavior_only: self.ablation.without_kg,
        };
        EncodeConfig {
            properties: EncodeOptions {
                max_age: self.model.max_age,
                interaction_scaling: self.model.interaction_scaling,
            },
            layout,
            sequence: SequenceConfig {
                hour_encoding: self.model.hour_encoding,
                max_posts: self.model.max_posts,
            },
        }
    }

    pub fn model_config(&self, classes: usize) -> ModelConfig {
        let without_kg = self.ablation.without_kg;
        let attention = AttentionConfig {
            property_attention: !without_kg && !self.ablation.disable_property_attention,
            neighbour_attention: !without_kg && !self.ablation.disable_neighbour_attention,
            aggregation: self.model.aggregation,
        };
        let mut config = ModelConfig::new(classes, self.encode_config(), attention);
        config.lstm.hidden = self.model.lstm_hidden;
        config.attention_hidden = self.model.attention_hidden;
        config
    }
}

/// 1-based line of the first `key = ...` assignment.
fn line_of(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}
