//! Path-based item similarity over knowledge graphs, with explanations and
//! an item-based recommender built on top of it.

pub mod error;
pub mod evaluation;
pub mod explain;
pub mod fixtures;
pub mod graph;
pub mod index;
pub mod interest;
pub mod paths;
pub mod recommender;
pub mod similarity;
pub mod stats;
pub mod synthetic;
pub mod tsv;
pub mod tuning;

pub use error::{Error, Result};
pub use explain::{explain, render_path, Explanation, Templates};
pub use graph::{Direction, Entity, EntityId, GraphParts, KnowledgeGraph, LoadStats, Triple};
pub use index::{Indices, TypeFrequencyIndex};
pub use interest::Weights;
pub use paths::{enumerate_paths, Cutoff, Path, PathType};
pub use similarity::{MeasureConfig, PathStatsCache, Scorer};
