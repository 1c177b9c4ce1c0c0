//! The regular attribute graph: sparse node features, labels, undirected
//! adjacency, train/test splits, and the two on-disk formats.
//!
//! Two loaders are provided. `load_classic` reads the raw citation-network
//! layout (a `.content` file of `<id> <f_1> .. <f_F> <label>` rows plus a
//! `.cites` file of `<id_a> <id_b>` rows). `load_canonical` reads newline
//! -delimited JSON records and supports real-valued sparse features and
//! weighted edges. Both produce the same immutable [`AttributeGraph`].

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FgnError, Result};

/// A sparse vector stored as sorted (index, value) pairs with unique indices
/// and only finite, nonzero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    /// An all-zero vector.
    pub fn empty() -> Self {
        SparseVec { indices: Vec::new(), values: Vec::new() }
    }

    /// Builds from (index, value) pairs. Pairs are sorted; zero values are
    /// dropped; duplicate indices and non-finite values are format errors.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if !v.is_finite() {
                return Err(FgnError::Format(format!("non-finite feature value at index {i}")));
            }
            if v == 0.0 {
                continue;
            }
            if indices.last() == Some(&i) {
                return Err(FgnError::Format(format!("duplicate feature index {i}")));
            }
            indices.push(i);
            values.push(v);
        }
        Ok(SparseVec { indices, values })
    }

    /// Builds from a dense slice, keeping nonzero entries.
    pub fn from_dense(dense: &[f64]) -> Result<Self> {
        let pairs = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        SparseVec::from_pairs(pairs)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// Largest stored index, if any.
    pub fn max_index(&self) -> Option<u32> {
        self.indices.last().copied()
    }

    /// Expands to a dense vector of the given length.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

/// Counters surfaced by the loaders: total edge records read, distinct
/// undirected pairs kept, and records dropped with a warning.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    /// Edge lines/records read from the input.
    pub raw_edge_lines: usize,
    /// Distinct undirected pairs after dedup.
    pub distinct_edge_pairs: usize,
    /// Edge records dropped because an endpoint id was unknown.
    pub dropped_unknown: usize,
    /// Edge records dropped because src == dst.
    pub dropped_self: usize,
}

impl LoadStats {
    /// Total dropped-record warnings.
    pub fn warnings(&self) -> usize {
        self.dropped_unknown + self.dropped_self
    }
}

/// An immutable attribute graph: nodes with sparse features and class labels,
/// plus a symmetric weighted adjacency with no self entries.
#[derive(Debug, Clone)]
pub struct AttributeGraph {
    node_ids: Vec<String>,
    feature_dim: usize,
    channels: usize,
    class_names: Vec<String>,
    features: Vec<SparseVec>,
    labels: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    stats: LoadStats,
}

impl PartialEq for AttributeGraph {
    /// Content equality; loader statistics are not part of graph identity.
    fn eq(&self, other: &Self) -> bool {
        self.node_ids == other.node_ids
            && self.feature_dim == other.feature_dim
            && self.channels == other.channels
            && self.class_names == other.class_names
            && self.features == other.features
            && self.labels == other.labels
            && self.neighbors == other.neighbors
            && self.weights == other.weights
    }
}

impl AttributeGraph {
    /// Assembles a graph from parts, validating every stored invariant.
    /// `edges` are undirected (i, j, weight) triples; duplicates collapse to
    /// the last-seen weight and self pairs are rejected.
    pub fn from_parts(
        node_ids: Vec<String>,
        feature_dim: usize,
        channels: usize,
        class_names: Vec<String>,
        features: Vec<SparseVec>,
        labels: Vec<usize>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = node_ids.len();
        if n == 0 {
            return Err(FgnError::EmptyInput("graph has no nodes".into()));
        }
        if features.len() != n || labels.len() != n {
            return Err(FgnError::Format(format!(
                "expected {n} feature rows and labels, got {} and {}",
                features.len(),
                labels.len()
            )));
        }
        if feature_dim == 0 || channels == 0 || class_names.is_empty() {
            return Err(FgnError::InvalidArgument(
                "feature_dim, channels and class_count must be positive".into(),
            ));
        }
        let width = (feature_dim * channels) as u32;
        for (row, feat) in features.iter().enumerate() {
            if let Some(max) = feat.max_index() {
                if max >= width {
                    return Err(FgnError::Format(format!(
                        "node {row}: feature index {max} >= F*C = {width}"
                    )));
                }
            }
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= class_names.len() {
                return Err(FgnError::Format(format!(
                    "node {row}: label {label} >= class count {}",
                    class_names.len()
                )));
            }
        }
        let mut pair_weights: HashMap<(usize, usize), f64> = HashMap::new();
        for &(a, b, w) in edges {
            if a == b {
                return Err(FgnError::Format(format!("self edge on node {a}")));
            }
            if a >= n || b >= n {
                return Err(FgnError::Format(format!("edge ({a}, {b}) out of range")));
            }
            if !w.is_finite() {
                return Err(FgnError::Format(format!("non-finite weight on edge ({a}, {b})")));
            }
            pair_weights.insert((a.min(b), a.max(b)), w);
        }
        let mut graph = AttributeGraph {
            node_ids,
            feature_dim,
            channels,
            class_names,
            features,
            labels,
            neighbors: vec![Vec::new(); n],
            weights: vec![Vec::new(); n],
            stats: LoadStats { distinct_edge_pairs: pair_weights.len(), ..Default::default() },
        };
        graph.fill_adjacency(pair_weights);
        Ok(graph)
    }

    fn fill_adjacency(&mut self, pair_weights: HashMap<(usize, usize), f64>) {
        let mut pairs: Vec<((usize, usize), f64)> = pair_weights.into_iter().collect();
        pairs.sort_by_key(|&(p, _)| p);
        for ((a, b), w) in pairs {
            self.neighbors[a].push(b);
            self.weights[a].push(w);
            self.neighbors[b].push(a);
            self.weights[b].push(w);
        }
        for v in 0..self.neighbors.len() {
            let mut order: Vec<usize> = (0..self.neighbors[v].len()).collect();
            order.sort_by_key(|&i| self.neighbors[v][i]);
            self.neighbors[v] = order.iter().map(|&i| self.neighbors[v][i]).collect();
            self.weights[v] = order.iter().map(|&i| self.weights[v][i]).collect();
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    /// Feature dimension F (per channel).
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Channel count C; stored feature index = c * F + f.
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Class name for a dense class index (lexicographic assignment order).
    pub fn class_name(&self, class: usize) -> &str {
        &self.class_names[class]
    }

    pub fn node_id(&self, v: usize) -> &str {
        &self.node_ids[v]
    }

    pub fn features_of(&self, v: usize) -> &SparseVec {
        &self.features[v]
    }

    pub fn label_of(&self, v: usize) -> usize {
        self.labels[v]
    }

    /// Sorted direct neighbors of `v`, excluding `v` itself.
    pub fn neighbors_of(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Edge weights parallel to [`Self::neighbors_of`].
    pub fn weights_of(&self, v: usize) -> &[f64] {
        &self.weights[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Number of distinct undirected edge pairs.
    pub fn edge_pair_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn load_stats(&self) -> &LoadStats {
        &self.stats
    }

    /// Weight of the undirected edge (a, b), if present.
    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let pos = self.neighbors[a].binary_search(&b).ok()?;
        Some(self.weights[a][pos])
    }

    /// All nodes within `k` hops of `v`, including `v` itself, sorted.
    pub fn neighbors_k(&self, v: usize, k: usize) -> Result<Vec<usize>> {
        if v >= self.num_nodes() {
            return Err(FgnError::InvalidArgument(format!("node {v} out of range")));
        }
        if k == 0 {
            return Err(FgnError::InvalidArgument("hop count must be >= 1".into()));
        }
        let mut seen = vec![false; self.num_nodes()];
        seen[v] = true;
        let mut frontier = vec![v];
        let mut out = vec![v];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.neighbors_of(u) {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                        out.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out.sort_unstable();
        Ok(out)
    }
}

fn dense_class_map(mut names: Vec<String>) -> (Vec<String>, HashMap<String, usize>) {
    names.sort();
    names.dedup();
    let map = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    (names, map)
}

/// Loads the classic citation layout: a content stream of
/// `<id> <f_1> .. <f_F> <label>` rows and a cites stream of `<id_a> <id_b>`
/// rows. Features are taken as written (binary in the raw distributions),
/// labels map to dense indices in lexicographic label order, and every cite
/// line adds both directions. Lines naming an unknown id are dropped and
/// counted in [`LoadStats::dropped_unknown`].
pub fn load_classic(content: impl BufRead, cites: impl BufRead) -> Result<AttributeGraph> {
    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut features: Vec<SparseVec> = Vec::new();
    let mut feature_dim: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(FgnError::Format(format!(
                "content line {}: expected <id> <features...> <label>",
                lineno + 1
            )));
        }
        let f = fields.len() - 2;
        match feature_dim {
            None => feature_dim = Some(f),
            Some(expected) if expected != f => {
                return Err(FgnError::Format(format!(
                    "content line {}: {} feature columns, expected {}",
                    lineno + 1,
                    f,
                    expected
                )));
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if id_index.contains_key(&id) {
            return Err(FgnError::Format(format!("duplicate node id {id}")));
        }
        let mut pairs = Vec::new();
        for (col, raw) in fields[1..=f].iter().enumerate() {
            let v: f64 = raw.parse().map_err(|_| {
                FgnError::Format(format!("content line {}: bad value {raw:?}", lineno + 1))
            })?;
            if v != 0.0 {
                pairs.push((col as u32, v));
            }
        }
        id_index.insert(id.clone(), ids.len());
        ids.push(id);
        features.push(SparseVec::from_pairs(pairs)?);
        raw_labels.push(fields[f + 1].to_string());
    }
    let feature_dim =
        feature_dim.ok_or_else(|| FgnError::EmptyInput("content stream has no rows".into()))?;

    let (class_names, class_map) = dense_class_map(raw_labels.clone());
    let labels: Vec<usize> = raw_labels.iter().map(|s| class_map[s]).collect();

    let mut stats = LoadStats::default();
    let mut pair_weights: HashMap<(usize, usize), f64> = HashMap::new();
    for (lineno, line) in cites.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.raw_edge_lines += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(FgnError::Format(format!(
                "cites line {}: expected <id_a> <id_b>",
                lineno + 1
            )));
        }
        match (id_index.get(fields[0]), id_index.get(fields[1])) {
            (Some(&a), Some(&b)) => {
                if a == b {
                    stats.dropped_self += 1;
                } else {
                    pair_weights.insert((a.min(b), a.max(b)), 1.0);
                }
            }
            _ => stats.dropped_unknown += 1,
        }
    }
    stats.distinct_edge_pairs = pair_weights.len();

    let n = ids.len();
    let mut graph = AttributeGraph {
        node_ids: ids,
        feature_dim,
        channels: 1,
        class_names,
        features,
        labels,
        neighbors: vec![Vec::new(); n],
        weights: vec![Vec::new(); n],
        stats,
    };
    graph.fill_adjacency(pair_weights);
    Ok(graph)
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    feature_dim: usize,
    #[serde(default = "default_channels")]
    channels: usize,
}

fn default_channels() -> usize {
    1
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    label: String,
    features: Vec<(u32, f64)>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    src: String,
    dst: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

/// Loads the canonical newline-delimited JSON format: one node object
/// `{"id", "label", "features": [[index, value], ..]}` per line, one edge
/// object `{"src", "dst", "weight"?}` per line. An optional leading meta
/// object `{"feature_dim", "channels"?}` declares F and C; without it F is
/// inferred as max feature index + 1 and C = 1. Absent weights default 1.0.
pub fn load_canonical(nodes: impl BufRead, edges: impl BufRead) -> Result<AttributeGraph> {
    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut features: Vec<SparseVec> = Vec::new();
    let mut meta: Option<MetaRecord> = None;
    let mut max_index: Option<u32> = None;

    for (lineno, line) in nodes.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 {
            if let Ok(m) = serde_json::from_str::<MetaRecord>(&line) {
                if m.feature_dim == 0 || m.channels == 0 {
                    return Err(FgnError::Format(
                        "meta record: feature_dim and channels must be positive".into(),
                    ));
                }
                meta = Some(m);
                continue;
            }
        }
        let record: NodeRecord = serde_json::from_str(&line)
            .map_err(|e| FgnError::Format(format!("nodes line {}: {e}", lineno + 1)))?;
        if id_index.contains_key(&record.id) {
            return Err(FgnError::Format(format!("duplicate node id {}", record.id)));
        }
        let feat = SparseVec::from_pairs(record.features)?;
        if let (Some(m), Some(max)) = (&meta, feat.max_index()) {
            let width = (m.feature_dim * m.channels) as u32;
            if max >= width {
                return Err(FgnError::Format(format!(
                    "node {}: feature index {max} >= F*C = {width}",
                    record.id
                )));
            }
        }
        max_index = max_index.max(feat.max_index());
        id_index.insert(record.id.clone(), ids.len());
        ids.push(record.id);
        raw_labels.push(record.label);
        features.push(feat);
    }
    if ids.is_empty() {
        return Err(FgnError::EmptyInput("nodes stream has no records".into()));
    }
    let (feature_dim, channels) = match meta {
        Some(m) => (m.feature_dim, m.channels),
        None => (max_index.map_or(1, |m| m as usize + 1), 1),
    };

    let (class_names, class_map) = dense_class_map(raw_labels.clone());
    let labels: Vec<usize> = raw_labels.iter().map(|s| class_map[s]).collect();

    let mut stats = LoadStats::default();
    let mut pair_weights: HashMap<(usize, usize), f64> = HashMap::new();
    for (lineno, line) in edges.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.raw_edge_lines += 1;
        let record: EdgeRecord = serde_json::from_str(&line)
            .map_err(|e| FgnError::Format(format!("edges line {}: {e}", lineno + 1)))?;
        let w = record.weight.unwrap_or(1.0);
        if !w.is_finite() {
            return Err(FgnError::Format(format!("edges line {}: non-finite weight", lineno + 1)));
        }
        match (id_index.get(&record.src), id_index.get(&record.dst)) {
            (Some(&a), Some(&b)) => {
                if a == b {
                    stats.dropped_self += 1;
                } else {
                    pair_weights.insert((a.min(b), a.max(b)), w);
                }
            }
            _ => stats.dropped_unknown += 1,
        }
    }
    stats.distinct_edge_pairs = pair_weights.len();

    let n = ids.len();
    let mut graph = AttributeGraph {
        node_ids: ids,
        feature_dim,
        channels,
        class_names,
        features,
        labels,
        neighbors: vec![Vec::new(); n],
        weights: vec![Vec::new(); n],
        stats,
    };
    graph.fill_adjacency(pair_weights);
    Ok(graph)
}

/// Writes a graph in the canonical format (meta line first, then one node
/// record per line / one edge record per undirected pair). Reloading the
/// output yields a graph equal to the input.
pub fn save_canonical(
    graph: &AttributeGraph,
    mut nodes: impl Write,
    mut edges: impl Write,
) -> Result<()> {
    let meta = MetaRecord { feature_dim: graph.feature_dim, channels: graph.channels };
    writeln!(nodes, "{}", serde_json::to_string(&meta)?)?;
    for v in 0..graph.num_nodes() {
        let record = NodeRecord {
            id: graph.node_ids[v].clone(),
            label: graph.class_names[graph.labels[v]].clone(),
            features: graph.features[v].iter().collect(),
        };
        writeln!(nodes, "{}", serde_json::to_string(&record)?)?;
    }
    for a in 0..graph.num_nodes() {
        for (pos, &b) in graph.neighbors[a].iter().enumerate() {
            if b > a {
                let record = EdgeRecord {
                    src: graph.node_ids[a].clone(),
                    dst: graph.node_ids[b].clone(),
                    weight: Some(graph.weights[a][pos]),
                };
                writeln!(edges, "{}", serde_json::to_string(&record)?)?;
            }
        }
    }
    Ok(())
}

/// A train/test partition of the node set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub label_rate: f64,
}

/// Splits nodes into train and test by a seeded uniform shuffle; the first
/// `floor(label_rate * N)` shuffled nodes are the train set.
pub fn make_split(graph: &AttributeGraph, label_rate: f64, seed: u64) -> Result<DatasetSplit> {
    if !(label_rate > 0.0 && label_rate < 1.0) {
        return Err(FgnError::InvalidArgument(format!(
            "label_rate must be in (0, 1), got {label_rate}"
        )));
    }
    let n = graph.num_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let train_len = (label_rate * n as f64).floor() as usize;
    let test_ids = order.split_off(train_len);
    Ok(DatasetSplit { train_ids: order, test_ids, label_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn classic(content: &str, cites: &str) -> Result<AttributeGraph> {
        load_classic(Cursor::new(content.to_string()), Cursor::new(cites.to_string()))
    }

    #[test]
    fn classic_two_nodes_one_cite() {
        let g = classic("n1\t1\t0\t1\tgenetic\nn2\t0\t1\t0\ttheory\n", "n1\tn2\n").unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.feature_dim(), 3);
        assert_eq!(g.class_count(), 2);
        assert_eq!(g.neighbors_of(0), &[1]);
        assert_eq!(g.neighbors_of(1), &[0]);
        // lexicographic label order: genetic < theory
        assert_eq!(g.label_of(0), 0);
        assert_eq!(g.label_of(1), 1);
        assert_eq!(g.edge_weight(0, 1), Some(1.0));
    }

    #[test]
    fn classic_unknown_cite_dropped_with_warning() {
        let g = classic("a\t1\t0\tx\nb\t0\t1\ty\n", "a\tmissing\n").unwrap();
        assert_eq!(g.load_stats().dropped_unknown, 1);
        assert_eq!(g.load_stats().warnings(), 1);
        assert_eq!(g.edge_pair_count(), 0);
    }

    #[test]
    fn classic_duplicate_cites_collapse() {
        let g = classic("a\t1\tx\nb\t1\ty\n", "a\tb\nb\ta\na\tb\n").unwrap();
        assert_eq!(g.load_stats().raw_edge_lines, 3);
        assert_eq!(g.load_stats().distinct_edge_pairs, 1);
        assert_eq!(g.edge_pair_count(), 1);
    }

    #[test]
    fn classic_self_cite_dropped() {
        let g = classic("a\t1\tx\nb\t1\ty\n", "a\ta\n").unwrap();
        assert_eq!(g.load_stats().dropped_self, 1);
        assert_eq!(g.degree(0), 0);
    }

    #[test]
    fn classic_inconsistent_columns_is_format_error() {
        let err = classic("a\t1\t0\tx\nb\t1\ty\n", "").unwrap_err();
        assert!(matches!(err, FgnError::Format(_)), "{err}");
    }

    #[test]
    fn classic_empty_content_is_empty_input() {
        let err = classic("", "").unwrap_err();
        assert!(matches!(err, FgnError::EmptyInput(_)));
    }

    fn canonical(nodes: &str, edges: &str) -> Result<AttributeGraph> {
        load_canonical(Cursor::new(nodes.to_string()), Cursor::new(edges.to_string()))
    }

    #[test]
    fn canonical_single_isolated_node() {
        let g = canonical(r#"{"id":"p1","label":"a","features":[[0,0.5]]}"#, "").unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.degree(0), 0);
        assert_eq!(g.features_of(0).get(0), 0.5);
    }

    #[test]
    fn canonical_weight_on_both_directions() {
        let nodes = concat!(
            r#"{"id":"p1","label":"a","features":[[0,1.0]]}"#,
            "\n",
            r#"{"id":"p2","label":"b","features":[[1,1.0]]}"#,
            "\n"
        );
        let g = canonical(nodes, r#"{"src":"p1","dst":"p2","weight":2.5}"#).unwrap();
        assert_eq!(g.edge_weight(0, 1), Some(2.5));
        assert_eq!(g.edge_weight(1, 0), Some(2.5));
    }

    #[test]
    fn canonical_duplicate_id_is_format_error() {
        let nodes = concat!(
            r#"{"id":"p1","label":"a","features":[]}"#,
            "\n",
            r#"{"id":"p1","label":"b","features":[]}"#,
            "\n"
        );
        assert!(matches!(canonical(nodes, "").unwrap_err(), FgnError::Format(_)));
    }

    #[test]
    fn canonical_feature_index_beyond_meta_is_format_error() {
        let nodes = concat!(
            r#"{"feature_dim":4,"channels":1}"#,
            "\n",
            r#"{"id":"p1","label":"a","features":[[4,1.0]]}"#,
            "\n"
        );
        assert!(matches!(canonical(nodes, "").unwrap_err(), FgnError::Format(_)));
    }

    #[test]
    fn canonical_meta_sets_dims() {
        let nodes = concat!(
            r#"{"feature_dim":8,"channels":2}"#,
            "\n",
            r#"{"id":"p1","label":"a","features":[[15,1.0]]}"#,
            "\n"
        );
        let g = canonical(nodes, "").unwrap();
        assert_eq!(g.feature_dim(), 8);
        assert_eq!(g.channels(), 2);
    }

    #[test]
    fn round_trip_canonical() {
        let g = classic(
            "a\t1\t0\t1\tx\nb\t0\t1\t0\ty\nc\t1\t1\t0\tx\n",
            "a\tb\nb\tc\n",
        )
        .unwrap();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        save_canonical(&g, &mut nodes, &mut edges).unwrap();
        let reloaded = load_canonical(Cursor::new(nodes), Cursor::new(edges)).unwrap();
        assert_eq!(g, reloaded);
    }

    #[test]
    fn split_sizes_match_floor() {
        // floor(0.421 * 2708) = 1140 and floor(0.337 * 3327) = 1121
        for (n, rate, want) in [(2708usize, 0.421, 1140usize), (3327, 0.337, 1121)] {
            let ids = (0..n).map(|i| format!("n{i}")).collect();
            let feats = vec![SparseVec::empty(); n];
            let labels = vec![0; n];
            let g = AttributeGraph::from_parts(
                ids,
                1,
                1,
                vec!["c".into()],
                feats,
                labels,
                &[],
            )
            .unwrap();
            let split = make_split(&g, rate, 7).unwrap();
            assert_eq!(split.train_ids.len(), want);
            assert_eq!(split.train_ids.len() + split.test_ids.len(), n);
        }
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let g = classic("a\t1\tx\nb\t0\ty\nc\t1\tx\nd\t0\ty\n", "").unwrap();
        let s1 = make_split(&g, 0.5, 42).unwrap();
        let s2 = make_split(&g, 0.5, 42).unwrap();
        assert_eq!(s1, s2);
        let mut all: Vec<usize> = s1.train_ids.iter().chain(&s1.test_ids).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn split_rejects_bad_rate() {
        let g = classic("a\t1\tx\n", "").unwrap();
        assert!(make_split(&g, 0.0, 0).is_err());
        assert!(make_split(&g, 1.0, 0).is_err());
    }

    fn star_graph() -> AttributeGraph {
        // Fig-1-style topology: a hub connected to b, c, d, e.
        let content = "a\t1\tx\nb\t1\tx\nc\t1\tx\nd\t1\tx\ne\t1\tx\n";
        let cites = "a\tb\na\tc\na\td\na\te\n";
        classic(content, cites).unwrap()
    }

    #[test]
    fn neighbors_k_includes_self_and_hub_neighbors() {
        let g = star_graph();
        assert_eq!(g.neighbors_k(0, 1).unwrap(), vec![0, 1, 2, 3, 4]);
        // leaf at k=1: itself and the hub
        assert_eq!(g.neighbors_k(1, 1).unwrap(), vec![0, 1]);
        // leaf at k=2 reaches everything through the hub
        assert_eq!(g.neighbors_k(1, 2).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn neighbors_k_isolated_and_path() {
        let iso = classic("a\t1\tx\n", "").unwrap();
        assert_eq!(iso.neighbors_k(0, 1).unwrap(), vec![0]);
        let path = classic("u\t1\tx\nv\t1\tx\nw\t1\tx\n", "u\tv\nv\tw\n").unwrap();
        assert_eq!(path.neighbors_k(1, 2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn neighbors_k_rejects_bad_args() {
        let g = star_graph();
        assert!(g.neighbors_k(99, 1).is_err());
        assert!(g.neighbors_k(0, 0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn arb_graph()(n in 1usize..10)(
                n in Just(n),
                feature_dim in 1usize..6,
                labels in proptest::collection::vec(0usize..3, n),
                dense in proptest::collection::vec(
                    proptest::collection::vec(-2.0f64..2.0, 6),
                    n,
                ),
                edges in proptest::collection::vec((0usize..10, 0usize..10, 0.1f64..3.0), 0..20),
            ) -> AttributeGraph {
                let ids = (0..n).map(|i| format!("n{i}")).collect();
                let features = dense
                    .iter()
                    .map(|row| SparseVec::from_dense(&row[..feature_dim]).unwrap())
                    .collect();
                let edges: Vec<(usize, usize, f64)> = edges
                    .into_iter()
                    .filter(|&(a, b, _)| a < n && b < n && a != b)
                    .collect();
                AttributeGraph::from_parts(
                    ids,
                    feature_dim,
                    1,
                    vec!["a".into(), "b".into(), "c".into()],
                    features,
                    labels,
                    &edges,
                )
                .unwrap()
            }
        }

        proptest! {
            #[test]
            fn canonical_round_trip_preserves_the_graph(g in arb_graph()) {
                let mut nodes = Vec::new();
                let mut edges = Vec::new();
                save_canonical(&g, &mut nodes, &mut edges).unwrap();
                let reloaded =
                    load_canonical(Cursor::new(nodes), Cursor::new(edges)).unwrap();
                prop_assert_eq!(&g, &reloaded);
            }

            #[test]
            fn adjacency_symmetry_and_one_hop_size(g in arb_graph()) {
                for v in 0..g.num_nodes() {
                    prop_assert!(!g.neighbors_of(v).contains(&v));
                    for &u in g.neighbors_of(v) {
                        prop_assert!(g.neighbors_of(u).contains(&v));
                    }
                    let hood = g.neighbors_k(v, 1).unwrap();
                    prop_assert!(hood.contains(&v));
                    prop_assert_eq!(hood.len(), g.degree(v) + 1);
                }
            }
        }
    }

    #[test]
    fn adjacency_is_symmetric_without_self_entries() {
        let g = classic(
            "a\t1\tx\nb\t0\ty\nc\t1\tx\nd\t0\tz\n",
            "a\tb\nb\tc\nc\td\nd\ta\nb\td\n",
        )
        .unwrap();
        for v in 0..g.num_nodes() {
            assert!(!g.neighbors_of(v).contains(&v));
            assert_eq!(g.neighbors_k(v, 1).unwrap().len(), g.degree(v) + 1);
            for &u in g.neighbors_of(v) {
                assert!(g.neighbors_of(u).contains(&v));
                assert_eq!(g.edge_weight(u, v), g.edge_weight(v, u));
            }
        }
    }
}
