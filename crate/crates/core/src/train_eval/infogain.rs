//! Information gain of discretised properties, category ranking and
//! feature knockout.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::trainer::{evaluate_nodes, predict_nodes, split_nodes, train_graph, Evaluation};
use crate::data_model::{CohortDataset, Split, UserRecord};
use crate::error::{Error, Result};
use crate::kg_builder::{encode_cohort, Category, EncodeOptions, UserProperties};
use crate::model::Model;
use crate::post_encoder::{HOUR_COLUMN, IMAGE_COLUMNS, TEXT_COLUMNS};

/// Base-2 Shannon entropy of a label sample.
pub fn entropy(labels: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    let mut terms: Vec<f64> = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `H(y) - H(y | F)` in bits.
pub fn info_gain(labels: &[usize], feature: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Validation("information gain of an empty sample".into()));
    }
    if labels.len() != feature.len() {
        return Err(Error::Shape(format!(
            "{} labels but {} feature values",
            labels.len(),
            feature.len()
        )));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&y, &f) in labels.iter().zip(feature) {
        groups.entry(f).or_default().push(y);
    }
    let n = labels.len() as f64;
    // sorted so the result does not depend on how feature values are numbered
    let mut terms: Vec<f64> = groups.values().map(|g| g.len() as f64 / n * entropy(g)).collect();
    terms.sort_by(f64::total_cmp);
    let conditional: f64 = terms.iter().sum();
    let h = entropy(labels);
    Ok((h - conditional).clamp(0.0, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// 1 when the value is at least the sample mean.
    MeanSplit,
    /// Non-negative integer values pass through.
    Categorical,
    /// Mean polarity: ≤ -0.3, between, ≥ 0.3.
    TextPolarity,
    /// Mean (brightness, warmth) against 0.5 thresholds.
    ImageBw,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureColumn {
    Scalar(Vec<f64>),
    /// Mean (brightness, warmth); `None` for users without images.
    Image(Vec<Option<(f64, f64)>>),
}

impl FeatureColumn {
    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Scalar(v) => v.len(),
            FeatureColumn::Image(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn polarity_class(ep: f64) -> usize {
    if ep <= -0.3 {
        0
    } else if ep < 0.3 {
        1
    } else {
        2
    }
}

pub fn image_class(brightness: f64, warmth: f64) -> usize {
    2 * usize::from(brightness >= 0.5) + usize::from(warmth >= 0.5)
}

pub fn discretize_feature(column: &FeatureColumn, kind: Discretization) -> Result<Vec<usize>> {
    if column.is_empty() {
        return Err(Error::Validation("cannot discretise an empty feature".into()));
    }
    match (column, kind) {
        (FeatureColumn::Scalar(v), Discretization::MeanSplit) => {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            Ok(v.iter().map(|&x| usize::from(x >= mean)).collect())
        }
        (FeatureColumn::Scalar(v), Discretization::Categorical) => v
            .iter()
            .map(|&x| {
                if x >= 0.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(Error::Validation(format!("categorical value {x} is not a class id")))
                }
            })
            .collect(),
        (FeatureColumn::Scalar(v), Discretization::TextPolarity) => Ok(v.iter().map(|&x| polarity_class(x)).collect()),
        (FeatureColumn::Image(v), Discretization::ImageBw) => Ok(v
            .iter()
            .map(|x| x.map_or(0, |(b, w)| image_class(b, w)))
            .collect()),
        _ => Err(Error::Usage(format!("{kind:?} does not apply to this feature column"))),
    }
}

/// What feature knockout zeroes for a property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Knockout {
    /// A property-vector segment.
    Segment(&'static str),
    /// Columns of every post row.
    PostColumns(Range<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertySpec {
    pub name: &'static str,
    pub category: Category,
    pub kind: Discretization,
    pub knockout: Knockout,
}

/// The properties scored by information gain, in category order.
pub fn properties() -> Vec<PropertySpec> {
    use Category::*;
    use Discretization::*;
    let seg = |name, category, kind| PropertySpec {
        name,
        category,
        kind,
        knockout: Knockout::Segment(name),
    };
    let post = |name, kind, cols| PropertySpec {
        name,
        category: PostBehavior,
        kind,
        knockout: Knockout::PostColumns(cols),
    };
    vec![
        seg("gender", PersonalInformation, Categorical),
        seg("age", PersonalInformation, MeanSplit),
        seg("location", PersonalInformation, Categorical),
        seg("perfection", Personality, MeanSplit),
        seg("ruminant", Personality, MeanSplit),
        seg("sensitive", Personality, MeanSplit),
        seg("stress_num", Experience, MeanSplit),
        seg("stress_level", Experience, MeanSplit),
        seg("stress_categories", Experience, MeanSplit),
        seg("disorder", Experience, Categorical),
        seg("attempt", Experience, Categorical),
        post("texts", TextPolarity, TEXT_COLUMNS),
        post("images", ImageBw, IMAGE_COLUMNS),
        post("post_time", MeanSplit, HOUR_COLUMN),
        seg("suicide_words", EmotionExpression, MeanSplit),
        seg("last_words", EmotionExpression, MeanSplit),
        seg("future_words", EmotionExpression, MeanSplit),
        seg("negation_words", EmotionExpression, MeanSplit),
        seg("self_concern", EmotionExpression, MeanSplit),
        seg("love_joy", EmotionExpression, Categorical),
        seg("love_anxiety_sorrow", EmotionExpression, Categorical),
        seg("following", SocialInteraction, MeanSplit),
        seg("followers", SocialInteraction, MeanSplit),
        seg("interactions", SocialInteraction, MeanSplit),
    ]
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Raw (undiscretised) value column of every property for `users`.
pub fn property_columns(
    dataset: &CohortDataset,
    users: &[&UserRecord],
    options: &EncodeOptions,
) -> Result<Vec<(PropertySpec, FeatureColumn)>> {
    let encoded: Vec<UserProperties> = users
        .iter()
        .map(|u| UserProperties::encode(u, &dataset.lexicons, options))
        .collect::<Result<_>>()?;
    let scalar = |f: &dyn Fn(usize) -> f64| FeatureColumn::Scalar((0..users.len()).map(f).collect());
    let mut out = Vec::new();
    for spec in properties() {
        let column = match spec.name {
            "gender" => scalar(&|i| users[i].gender.index() as f64),
            "location" => scalar(&|i| users[i].location.index() as f64),
            "texts" => scalar(&|i| mean(users[i].posts.iter().map(|p| p.sentiment_polarity)).unwrap_or(0.0)),
            "images" => FeatureColumn::Image(
                users
                    .iter()
                    .map(|u| {
                        let pairs: Vec<(f64, f64)> = u
                            .posts
                            .iter()
                            .filter_map(|p| Some((p.image_brightness?, p.image_warmth?)))
                            .collect();
                        Some((mean(pairs.iter().map(|p| p.0))?, mean(pairs.iter().map(|p| p.1))?))
                    })
                    .collect(),
            ),
            "post_time" => scalar(&|i| mean(users[i].posts.iter().map(|p| f64::from(p.hour))).unwrap_or(0.0)),
            "following" => scalar(&|i| users[i].following_count as f64),
            "followers" => scalar(&|i| users[i].follower_count as f64),
            "interactions" => scalar(&|i| users[i].interact_count as f64),
            name => {
                let column = encoded
                    .iter()
                    .map(|e| {
                        e.get(name)
                            .and_then(|v| v.first().copied())
                            .ok_or_else(|| Error::Usage(format!("no encoded property '{name}'")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                FeatureColumn::Scalar(column)
            }
        };
        out.push((spec, column));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyGain {
    pub name: String,
    pub category: Category,
    pub gain: f64,
}

/// Every property's gain against `labels`, sorted descending (ties keep
/// registry order).
pub fn rank_properties(
    dataset: &CohortDataset,
    users: &[&UserRecord],
    labels: &[usize],
    options: &EncodeOptions,
) -> Result<Vec<PropertyGain>> {
    let mut gains = Vec::new();
    for (spec, column) in property_columns(dataset, users, options)? {
        let classes = discretize_feature(&column, spec.kind)?;
        gains.push(PropertyGain {
            name: spec.name.to_string(),
            category: spec.category,
            gain: info_gain(labels, &classes)?,
        });
    }
    gains.sort_by(|a, b| b.gain.total_cmp(&a.gain));
    Ok(gains)
}

/// Mean property gain per category, sorted descending.
pub fn category_gains(gains: &[PropertyGain]) -> Vec<(Category, f64)> {
    let mut out: Vec<(Category, f64)> = Category::ALL
        .iter()
        .filter_map(|&c| {
            let g: Vec<f64> = gains.iter().filter(|p| p.category == c).map(|p| p.gain).collect();
            (!g.is_empty()).then(|| (c, g.iter().sum::<f64>() / g.len() as f64))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoGainReport {
    pub properties: Vec<PropertyGain>,
    pub categories: Vec<(Category, f64)>,
}

impl InfoGainReport {
    /// `section,name,category,gain` rows: categories first, then properties.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,name,category,gain\n");
        for (c, g) in &self.categories {
            s.push_str(&format!("category,{c},{c},{g:.12}\n"));
        }
        for p in &self.properties {
            s.push_str(&format!("property,{},{},{:.12}\n", p.name, p.category, p.gain));
        }
        s
    }
}

/// Gains over all users. With a model the labels are its predictions,
/// otherwise the dataset labels.
pub fn rank_categories(dataset: &CohortDataset, model: Option<&Model>) -> Result<InfoGainReport> {
    let users: Vec<&UserRecord> = dataset.users.iter().collect();
    let (labels, options) = match model {
        Some(m) => {
            let graph = encode_cohort(dataset, &m.config.encode)?;
            let nodes: Vec<usize> = (0..graph.len()).collect();
            (predict_nodes(m, &graph, &nodes)?.0, m.config.encode.properties.clone())
        }
        None => (users.iter().map(|u| u.label).collect(), EncodeOptions::default()),
    };
    let properties = rank_properties(dataset, &users, &labels, &options)?;
    let categories = category_gains(&properties);
    Ok(InfoGainReport { properties, categories })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnockoutResult {
    pub top_x: usize,
    pub removed: Vec<String>,
    pub evaluation: Evaluation,
}

/// Retrain with the `top_x` most informative properties (ranked on the
/// training split) zeroed, and score the test split.
pub fn feature_knockout(dataset: &CohortDataset, config: &TrainConfig, top_x: usize) -> Result<KnockoutResult> {
    Ok(feature_knockout_sweep(dataset, config, &[top_x])?.remove(0))
}

pub fn feature_knockout_sweep(
    dataset: &CohortDataset,
    config: &TrainConfig,
    xs: &[usize],
) -> Result<Vec<KnockoutResult>> {
    let registry = properties();
    if let Some(&x) = xs.iter().find(|&&x| x >= registry.len()) {
        return Err(Error::Validation(format!(
            "top_x {x} must be below the property count {}",
            registry.len()
        )));
    }
    let classes = config.train.classes.unwrap_or_else(|| dataset.class_count());
    let encode = config.encode_config();
    let train_users: Vec<&UserRecord> = dataset.users_in(Split::Train).collect();
    let labels: Vec<usize> = train_users.iter().map(|u| u.label).collect();
    let ranked = rank_properties(dataset, &train_users, &labels, &encode.properties)?;

    let base = encode_cohort(dataset, &encode)?;
    let train = split_nodes(dataset, &base, Split::Train);
    let val = split_nodes(dataset, &base, Split::Validation);
    let test = split_nodes(dataset, &base, Split::Test);

    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let mut graph = base.clone();
        let removed: Vec<String> = ranked[..x].iter().map(|p| p.name.clone()).collect();
        for name in &removed {
            let spec = registry.iter().find(|s| s.name == name).expect("registered property");
            match &spec.knockout {
                Knockout::Segment(seg) => {
                    if graph.layout().entry(seg).is_some() {
                        graph.zero_segment(seg)?;
                    }
                }
                Knockout::PostColumns(cols) => graph.zero_post_columns(cols.clone()),
            }
        }
        let outcome = train_graph(&graph, &train, &val, config, classes)?;
        let (evaluation, _) = evaluate_nodes(&outcome.model, &graph, &test)?;
        log::info!("knockout x={x}: accuracy {:.4}", evaluation.report.accuracy);
        out.push(KnockoutResult {
            top_x: x,
            removed,
            evaluation,
        });
    }
    Ok(out)
}
