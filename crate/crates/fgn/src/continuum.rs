//! Observation streams: each train node is presented exactly once as a
//! quartet of (features, weighted neighborhood snapshot, task id, label).
//!
//! The edge structure is read from the full graph when a node is observed;
//! only labels arrive with the stream, and neighbor labels are never carried.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FgnError, Result};
use crate::graph::{AttributeGraph, DatasetSplit, SparseVec};

/// Task id attached to each observation: the class-block position in
/// class-incremental streams, always 0 in data-incremental streams.
pub type TaskId = usize;

/// One observed quartet: the node, its features, a snapshot of its k-hop
/// neighborhood (node index, features, edge weight; the node itself is
/// included with weight 1), the task id, and the node's own label.
#[derive(Debug, Clone)]
pub struct ContinuumItem {
    pub node: usize,
    pub features: SparseVec,
    pub neighbor_features: Vec<(usize, SparseVec, f64)>,
    pub task: TaskId,
    pub label: usize,
}

/// Which presentation order a continuum was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuumKind {
    DataIncremental,
    ClassIncremental,
}

/// An ordered one-pass stream of observations over the train split.
#[derive(Debug, Clone)]
pub struct Continuum {
    pub kind: ContinuumKind,
    pub items: Vec<ContinuumItem>,
}

impl Continuum {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Builds the neighborhood snapshot for one node. Direct neighbors carry
/// their edge weight; the node itself and nodes reached beyond one hop carry
/// weight 1.
pub fn observe_node(graph: &AttributeGraph, v: usize, k: usize, task: TaskId) -> Result<ContinuumItem> {
    let hood = graph.neighbors_k(v, k)?;
    let neighbor_features = hood
        .into_iter()
        .map(|u| {
            let w = if u == v { 1.0 } else { graph.edge_weight(v, u).unwrap_or(1.0) };
            (u, graph.features_of(u).clone(), w)
        })
        .collect();
    Ok(ContinuumItem {
        node: v,
        features: graph.features_of(v).clone(),
        neighbor_features,
        task,
        label: graph.label_of(v),
    })
}

/// Data-incremental stream: a seeded uniform permutation of the train split,
/// every item tagged with task 0.
pub fn data_incremental(
    graph: &AttributeGraph,
    split: &DatasetSplit,
    k: usize,
    seed: u64,
) -> Result<Continuum> {
    let mut order = split.train_ids.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let items = order
        .into_iter()
        .map(|v| observe_node(graph, v, k, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Continuum { kind: ContinuumKind::DataIncremental, items })
}

/// Class-incremental stream: contiguous one-class blocks following
/// `class_order`, shuffled within each block, task = block position.
pub fn class_incremental(
    graph: &AttributeGraph,
    split: &DatasetSplit,
    class_order: &[usize],
    k: usize,
    seed: u64,
) -> Result<Continuum> {
    let z = graph.class_count();
    let mut seen = vec![false; z];
    for &c in class_order {
        if c >= z || seen[c] {
            return Err(FgnError::InvalidArgument(format!(
                "class_order must be a permutation of 0..{z}"
            )));
        }
        seen[c] = true;
    }
    if class_order.len() != z {
        return Err(FgnError::InvalidArgument(format!(
            "class_order must be a permutation of 0..{z}"
        )));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); z];
    for &v in &split.train_ids {
        by_class[graph.label_of(v)].push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(split.train_ids.len());
    for (block, &class) in class_order.iter().enumerate() {
        let mut block_nodes = std::mem::take(&mut by_class[class]);
        block_nodes.shuffle(&mut rng);
        for v in block_nodes {
            items.push(observe_node(graph, v, k, block)?);
        }
    }
    Ok(Continuum { kind: ContinuumKind::ClassIncremental, items })
}

/// A seeded shuffle of `0..class_count`, for runs that randomize class order.
pub fn shuffled_class_order(class_count: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..class_count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}
