//! Training, evaluation metrics, information gain and feature knockout.

mod config;
mod infogain;
mod metrics;
mod optim;
mod predict;
mod trainer;

pub use config::{
    AblationSection, ModelSection, OptimizerKind, OptimizerSection, TrainConfig, TrainSection, SEED_ENV,
};
pub use infogain::{
    category_gains, discretize_feature, entropy, feature_knockout, feature_knockout_sweep, image_class,
    info_gain, polarity_class, properties, property_columns, rank_categories, rank_properties,
    Discretization, FeatureColumn, InfoGainReport, Knockout, KnockoutResult, PropertyGain, PropertySpec,
};
pub use metrics::{ClassCounts, ConfusionMatrix, MetricsReport};
pub use optim::{Optimizer, OptimizerSpec};
pub use predict::{diagnose, Diagnosis, TOP_ALPHA};
pub use trainer::{
    class_weights, evaluate, evaluate_nodes, predict_nodes, split_nodes, train, train_graph, EpochLog,
    Evaluation, TrainOutcome, LOG_HEADER,
};
