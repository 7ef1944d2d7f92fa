//! Property vectors and the follow graph.

mod encode;
mod layout;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use encode::{
    assemble_property_vector, encode_age, encode_emotion_expression, encode_gender,
    encode_interaction, encode_location, encode_personality, encode_stress, CountScaling,
    EncodeOptions, PropertyVector, UserProperties, DEFAULT_MAX_AGE, LAST_WORDS_WINDOW_SECS,
    TRANSITION_WINDOW,
};
pub use layout::{
    segment_category, LayoutEntry, LayoutOptions, PropertyLayout, POST_BEHAVIOR, RESERVED,
    STANDARD_SEGMENTS,
};

use crate::data_model::{CohortDataset, UserId};
use crate::error::{Error, Result};
use crate::post_encoder::{PostBehaviorVector, PostSequenceTensor, SequenceConfig};

/// The six property categories of a personal knowledge graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    PersonalInformation,
    Personality,
    Experience,
    PostBehavior,
    EmotionExpression,
    SocialInteraction,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::PersonalInformation,
        Category::Personality,
        Category::Experience,
        Category::PostBehavior,
        Category::EmotionExpression,
        Category::SocialInteraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::PersonalInformation => "personal_information",
            Category::Personality => "personality",
            Category::Experience => "experience",
            Category::PostBehavior => "post_behavior",
            Category::EmotionExpression => "emotion_expression",
            Category::SocialInteraction => "social_interaction",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown category '{s}'")))
    }
}

/// Everything needed to turn a cohort into a graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    #[serde(default)]
    pub properties: EncodeOptions,
    #[serde(default)]
    pub layout: LayoutOptions,
    #[serde(default)]
    pub sequence: SequenceConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNode {
    pub user_id: UserId,
    pub label: usize,
    /// The post-behaviour segment stays zero here; the network fills it on
    /// every forward pass.
    pub properties: PropertyVector,
    pub posts: PostSequenceTensor,
}

/// User nodes plus follow edges (`adjacency[u]` = followed users, sorted).
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<GraphNode>,
    index: HashMap<UserId, usize>,
    adjacency: Vec<Vec<usize>>,
    layout: Arc<PropertyLayout>,
}

impl KnowledgeGraph {
    /// Assemble a graph directly, e.g. for toy layouts.
    pub fn from_parts(
        nodes: Vec<GraphNode>,
        adjacency: Vec<Vec<usize>>,
        layout: Arc<PropertyLayout>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.properties.values.len() != layout.total_width() || *node.properties.layout != *layout {
                return Err(Error::Shape(format!(
                    "property vector of '{}' does not follow the graph layout",
                    node.user_id
                )));
            }
            if index.insert(node.user_id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate user id '{}'", node.user_id)));
            }
        }
        let mut graph = KnowledgeGraph {
            adjacency: vec![Vec::new(); nodes.len()],
            nodes,
            index,
            layout,
        };
        graph.set_adjacency(adjacency)?;
        Ok(graph)
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn layout(&self) -> &Arc<PropertyLayout> {
        &self.layout
    }

    pub fn node(&self, i: usize) -> &GraphNode {
        &self.nodes[i]
    }

    pub fn index_of(&self, user_id: &str) -> Option<usize> {
        self.index.get(user_id).copied()
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Followed user ids of `user_id`.
    pub fn adjacency(&self, user_id: &str) -> Option<Vec<&str>> {
        let i = self.index_of(user_id)?;
        Some(
            self.adjacency[i]
                .iter()
                .map(|&j| self.nodes[j].user_id.as_str())
                .collect(),
        )
    }

    pub fn node_mut(&mut self, i: usize) -> &mut GraphNode {
        &mut self.nodes[i]
    }

    /// Zero segment `name` in every property vector.
    pub fn zero_segment(&mut self, name: &str) -> Result<()> {
        let range = self
            .layout
            .entry(name)
            .ok_or_else(|| Error::Usage(format!("layout has no segment '{name}'")))?
            .range();
        for node in &mut self.nodes {
            node.properties.values[range.clone()].fill(0.0);
        }
        Ok(())
    }

    /// Zero the post-input columns `cols` of every post of every user.
    pub fn zero_post_columns(&mut self, cols: std::ops::Range<usize>) {
        for node in &mut self.nodes {
            node.posts.zero_columns(cols.clone());
        }
    }

    /// Replace every follow edge (used by tests and ablations).
    pub fn set_adjacency(&mut self, adjacency: Vec<Vec<usize>>) -> Result<()> {
        if adjacency.len() != self.nodes.len() {
            return Err(Error::Shape("adjacency length differs from node count".into()));
        }
        for (i, list) in adjacency.iter().enumerate() {
            if list.iter().any(|&j| j >= self.nodes.len() || j == i) {
                return Err(Error::Integrity(format!(
                    "adjacency of '{}' has a self-loop or unknown node",
                    self.nodes[i].user_id
                )));
            }
        }
        self.adjacency = adjacency
            .into_iter()
            .map(|mut l| {
                l.sort_unstable();
                l.dedup();
                l
            })
            .collect();
        Ok(())
    }
}

/// Assemble a graph from per-user property vectors.
pub fn build_graph(
    dataset: &CohortDataset,
    vectors: &BTreeMap<UserId, PropertyVector>,
    sequence: &SequenceConfig,
) -> Result<KnowledgeGraph> {
    let layout = match dataset.users.first() {
        Some(u) => Arc::clone(
            &vectors
                .get(&u.user_id)
                .ok_or_else(|| Error::Integrity(format!("no property vector for user '{}'", u.user_id)))?
                .layout,
        ),
        None => Arc::new(PropertyLayout::standard()),
    };

    let mut nodes = Vec::with_capacity(dataset.users.len());
    let mut index = HashMap::with_capacity(dataset.users.len());
    for user in &dataset.users {
        let properties = vectors
            .get(&user.user_id)
            .ok_or_else(|| Error::Integrity(format!("no property vector for user '{}'", user.user_id)))?;
        if *properties.layout != *layout || properties.values.len() != layout.total_width() {
            return Err(Error::Shape(format!(
                "property vector of '{}' uses a different layout",
                user.user_id
            )));
        }
        index.insert(user.user_id.clone(), nodes.len());
        nodes.push(GraphNode {
            user_id: user.user_id.clone(),
            label: user.label,
            properties: properties.clone(),
            posts: PostSequenceTensor::from_posts(&user.posts, sequence),
        });
    }

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for edge in &dataset.edges {
        if edge.src == edge.dst {
            log::warn!("dropping self-loop on user '{}'", edge.src);
            continue;
        }
        let (Some(&s), Some(&d)) = (index.get(&edge.src), index.get(&edge.dst)) else {
            return Err(Error::Integrity(format!(
                "edge {} -> {} references an unknown user",
                edge.src, edge.dst
            )));
        };
        adjacency[s].push(d);
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    Ok(KnowledgeGraph {
        nodes,
        index,
        adjacency,
        layout,
    })
}

/// Encode every user and build the graph in one step.
pub fn encode_cohort(dataset: &CohortDataset, config: &EncodeConfig) -> Result<KnowledgeGraph> {
    let layout = Arc::new(PropertyLayout::with_options(&config.layout));
    let zero = PostBehaviorVector::zeros();
    let mut vectors = BTreeMap::new();
    for user in &dataset.users {
        let props = UserProperties::encode(user, &dataset.lexicons, &config.properties)?;
        vectors.insert(
            user.user_id.clone(),
            assemble_property_vector(&props, &zero, &layout)?,
        );
    }
    build_graph(dataset, &vectors, &config.sequence)
}
