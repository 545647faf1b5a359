//! Seeded hierarchical clustering of document embeddings into a user
//! taxonomy.
//!
//! The pipeline: load a [`Taxonomy`], a fitting [`Corpus`] and a [`SeedSet`];
//! [`fit`] learns topic vectors and pivot-level thresholds; [`infer`] maps
//! documents to taxonomy paths; [`metrics`] scores paths against gold labels.

pub mod assignment;
pub mod corpus_io;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod model;
pub mod representation;
pub mod synth;
pub mod taxonomy;

pub use assignment::{AssignConfig, Eccentricity};
pub use corpus_io::{AssignmentRecord, Corpus, DocId, GoldLabels, SeedSet};
pub use engine::{fit, infer, FitConfig, FittedModel};
pub use error::{Error, Result};
pub use representation::{TopicState, WmWeights};
pub use taxonomy::{Taxonomy, TopicId};
