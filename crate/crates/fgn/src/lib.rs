//! Lifelong node classification with feature graphs.
//!
//! Each node of an attribute graph is converted into its own small graph
//! whose vertices are the feature dimensions: features become nodes, nodes
//! become independent graph-classification samples, and a stream of nodes
//! becomes a stream of training samples. A compact network of two feature
//! broadcast layers and a dense head is trained online from that stream,
//! one pass, with a reservoir rehearsal memory to counter forgetting.
//!
//! Modules follow the pipeline: [`graph`] loads and splits the attribute
//! graph, [`continuum`] orders it into an observation stream, [`featgraph`]
//! turns observations into per-node feature-graph samples, [`model`] scores
//! and trains on them, [`rehearsal`] bounds what is replayed, and
//! [`harness`] orchestrates whole experiments.

pub mod continuum;
pub mod error;
pub mod featgraph;
pub mod graph;
pub mod harness;
pub mod model;
pub mod rehearsal;
pub mod synth;

pub use error::{FgnError, Result};
pub use graph::{AttributeGraph, DatasetSplit, SparseVec};
