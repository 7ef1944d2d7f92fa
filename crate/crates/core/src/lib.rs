//! Suicide-risk detection over personal knowledge graphs.

pub mod attention_net;
pub mod cli;
pub mod data_model;
pub mod error;
pub mod kg_builder;
pub mod model;
pub mod params;
pub mod post_encoder;
pub mod train_eval;

pub use error::{Error, Result};
