//! Per-node feature graphs: features become nodes and each observed node
//! becomes an independent graph-classification sample.
//!
//! The feature adjacency is the neighbor-averaged, symmetrized
//! cross-correlation of feature vectors, compressed elementwise by the signed
//! square root, then symmetrically normalized with self-loops. All work is
//! restricted to the active set (the union of feature supports across the
//! neighborhood); outside it the normalized matrix is implicitly identity and
//! node values are zero, so restriction loses nothing.

use std::collections::HashMap;

use serde::Serialize;

use crate::continuum::{ContinuumItem, TaskId};
use crate::error::{FgnError, Result};
use crate::graph::SparseVec;

/// Signed square root: sign(v) * sqrt(|v|).
pub fn sgnroot(v: f64) -> f64 {
    v.signum() * v.abs().sqrt()
}

/// A symmetric matrix over the active feature indices of one channel.
/// Rows/columns for inactive features are implicitly zero (identity after
/// normalization) and are not stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureAdjacency {
    /// Channel this adjacency belongs to.
    pub channel: usize,
    /// Sorted, distinct feature indices (< F) with stored entries.
    pub active: Vec<u32>,
    /// Dense side*side row-major block, side = active.len().
    block: Vec<f64>,
}

impl FeatureAdjacency {
    /// Builds from an explicit active set and row-major block.
    pub fn from_block(channel: usize, active: Vec<u32>, block: Vec<f64>) -> Result<Self> {
        if block.len() != active.len() * active.len() {
            return Err(FgnError::InvalidArgument(format!(
                "block has {} entries, expected {}^2",
                block.len(),
                active.len()
            )));
        }
        Ok(FeatureAdjacency { channel, active, block })
    }

    pub fn side(&self) -> usize {
        self.active.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.block[i * self.side() + j]
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    /// Entry for global feature indices (f, g); zero when either is inactive.
    pub fn get_global(&self, f: u32, g: u32) -> f64 {
        match (self.active.binary_search(&f), self.active.binary_search(&g)) {
            (Ok(i), Ok(j)) => self.get(i, j),
            _ => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let s = self.side();
        (0..s).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Applies a function elementwise, keeping the active set.
    fn map(&self, f: impl Fn(f64) -> f64) -> FeatureAdjacency {
        FeatureAdjacency {
            channel: self.channel,
            active: self.active.clone(),
            block: self.block.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Entries of channel `c` of a stacked sparse vector (layout: index = c*F + f),
/// as (feature index, value) pairs in ascending feature order.
fn channel_entries(v: &SparseVec, c: usize, feature_dim: usize) -> Vec<(u32, f64)> {
    let lo = (c * feature_dim) as u32;
    let hi = lo + feature_dim as u32;
    v.iter().filter(|&(i, _)| i >= lo && i < hi).map(|(i, val)| (i - lo, val)).collect()
}

/// Sorted union of channel-`c` supports of the center node and all neighbors.
fn support_union(
    x: &SparseVec,
    neighbors: &[(SparseVec, f64)],
    c: usize,
    feature_dim: usize,
) -> Vec<u32> {
    let mut union: Vec<u32> = channel_entries(x, c, feature_dim).iter().map(|&(f, _)| f).collect();
    for (y, _) in neighbors {
        union.extend(channel_entries(y, c, feature_dim).iter().map(|&(f, _)| f));
    }
    union.sort_unstable();
    union.dedup();
    union
}

/// Accumulates (1/|N|) * sum_y w * (x y^T + y x^T) over the given active set.
fn correlation_block(
    x_entries: &[(u32, f64)],
    neighbors: &[(SparseVec, f64)],
    c: usize,
    feature_dim: usize,
    active: &[u32],
) -> Vec<f64> {
    let side = active.len();
    let pos: HashMap<u32, usize> = active.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut block = vec![0.0; side * side];
    let inv_count = 1.0 / neighbors.len() as f64;
    for (y, w) in neighbors {
        let coeff = w * inv_count;
        for &(fi, xi) in x_entries {
            let i = pos[&fi];
            for (fj, yj) in channel_entries(y, c, feature_dim) {
                let j = pos[&fj];
                let term = coeff * xi * yj;
                block[i * side + j] += term;
                block[j * side + i] += term;
            }
        }
    }
    block
}

/// The pre-compression cross-correlation estimate for channel `c`:
/// (1/|N(x)|) * sum over neighbors y of w_{x,y} (x_c y_c^T + y_c x_c^T),
/// computed over the union of channel supports. The neighbor list is the
/// full neighborhood including the node itself.
pub fn raw_correlation(
    x: &SparseVec,
    neighbors: &[(SparseVec, f64)],
    c: usize,
    feature_dim: usize,
) -> Result<FeatureAdjacency> {
    if neighbors.is_empty() {
        return Err(FgnError::InvalidArgument(
            "neighbor list is empty; the neighborhood must include the node itself".into(),
        ));
    }
    let active = support_union(x, neighbors, c, feature_dim);
    let x_entries = channel_entries(x, c, feature_dim);
    let block = correlation_block(&x_entries, neighbors, c, feature_dim, &active);
    Ok(FeatureAdjacency { channel: c, active, block })
}

/// The channel-`c` feature adjacency: signed square root applied elementwise
/// to [`raw_correlation`].
pub fn build_feature_adjacency(
    x: &SparseVec,
    neighbors: &[(SparseVec, f64)],
    c: usize,
    feature_dim: usize,
) -> Result<FeatureAdjacency> {
    Ok(raw_correlation(x, neighbors, c, feature_dim)?.map(sgnroot))
}

/// Symmetric normalization with self-loops on the active block:
/// A~ = A + I, D_ii = sum_k |A~_ik|, result = D^{-1/2} A~ D^{-1/2}.
/// Degrees use absolute values so real-valued negative correlations cannot
/// produce non-positive degrees; D_ii >= 1 always holds.
pub fn normalize(adj: &FeatureAdjacency) -> FeatureAdjacency {
    let side = adj.side();
    let mut tilde = adj.block.clone();
    for i in 0..side {
        tilde[i * side + i] += 1.0;
    }
    let inv_sqrt_deg: Vec<f64> = (0..side)
        .map(|i| {
            let d: f64 = (0..side).map(|k| tilde[i * side + k].abs()).sum();
            1.0 / d.sqrt()
        })
        .collect();
    // fill the lower triangle and mirror so the result is exactly symmetric
    let mut out = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..=i {
            let v = inv_sqrt_deg[i] * tilde[i * side + j] * inv_sqrt_deg[j];
            out[i * side + j] = v;
            out[j * side + i] = v;
        }
    }
    FeatureAdjacency { channel: adj.channel, active: adj.active.clone(), block: out }
}

/// One graph-classification sample: the normalized feature adjacency per
/// channel (all over one shared active set), the center node's feature values
/// on that set, and the label/task carried from the observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureGraphSample {
    /// Sorted, distinct feature indices (< F) active in this sample.
    pub active: Vec<u32>,
    /// Normalized feature adjacency per channel, each over `active`.
    pub adjacency_hat: Vec<FeatureAdjacency>,
    /// Center-node values on the active set, channel-major:
    /// node_values[c * active.len() + i] = x[c*F + active[i]].
    pub node_values: Vec<f64>,
    pub label: usize,
    pub task: TaskId,
}

impl FeatureGraphSample {
    pub fn side(&self) -> usize {
        self.active.len()
    }

    pub fn channels(&self) -> usize {
        self.adjacency_hat.len()
    }

    /// One-line JSON dump for test fixtures and debugging.
    pub fn to_debug_json(&self) -> String {
        serde_json::to_string(self).expect("sample serializes")
    }
}

/// Converts one observed quartet into a feature-graph sample. The adjacency
/// is frozen at observation time and never retro-updated.
pub fn build_sample(item: &ContinuumItem, feature_dim: usize, channels: usize) -> Result<FeatureGraphSample> {
    let neighbors: Vec<(SparseVec, f64)> =
        item.neighbor_features.iter().map(|(_, v, w)| (v.clone(), *w)).collect();
    build_sample_from_parts(&item.features, &neighbors, feature_dim, channels, item.label, item.task)
}

/// Sample construction from raw parts; `neighbors` must include the node
/// itself. All channels share one active set (the union across channels) so
/// the sample carries a single consistent feature-node set.
pub fn build_sample_from_parts(
    features: &SparseVec,
    neighbors: &[(SparseVec, f64)],
    feature_dim: usize,
    channels: usize,
    label: usize,
    task: TaskId,
) -> Result<FeatureGraphSample> {
    if neighbors.is_empty() {
        return Err(FgnError::InvalidArgument(
            "neighbor list is empty; the neighborhood must include the node itself".into(),
        ));
    }
    let mut active: Vec<u32> = Vec::new();
    for c in 0..channels {
        active.extend(support_union(features, neighbors, c, feature_dim));
    }
    active.sort_unstable();
    active.dedup();

    let adjacency_hat = (0..channels)
        .map(|c| {
            let x_entries = channel_entries(features, c, feature_dim);
            let block = correlation_block(&x_entries, neighbors, c, feature_dim, &active);
            let raw = FeatureAdjacency { channel: c, active: active.clone(), block };
            normalize(&raw.map(sgnroot))
        })
        .collect();

    let side = active.len();
    let mut node_values = vec![0.0; side * channels];
    for c in 0..channels {
        for (i, &f) in active.iter().enumerate() {
            node_values[c * side + i] = features.get((c * feature_dim) as u32 + f);
        }
    }
    Ok(FeatureGraphSample { active, adjacency_hat, node_values, label, task })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sv(dense: &[f64]) -> SparseVec {
        SparseVec::from_dense(dense).unwrap()
    }

    #[test]
    fn sgnroot_values() {
        assert_eq!(sgnroot(0.0), 0.0);
        assert_eq!(sgnroot(4.0), 2.0);
        assert_eq!(sgnroot(-9.0), -3.0);
        assert_eq!(sgnroot(0.25), 0.5);
    }

    #[test]
    fn raw_correlation_self_only() {
        // x = [1,0,0,1] with only itself as neighbor: (1/1) * 2 x x^T
        let x = sv(&[1.0, 0.0, 0.0, 1.0]);
        let adj = raw_correlation(&x, &[(x.clone(), 1.0)], 0, 4).unwrap();
        assert_eq!(adj.active, vec![0, 3]);
        assert_eq!(adj.get_global(0, 0), 2.0);
        assert_eq!(adj.get_global(0, 3), 2.0);
        assert_eq!(adj.get_global(3, 0), 2.0);
        assert_eq!(adj.get_global(3, 3), 2.0);
    }

    #[test]
    fn raw_correlation_one_real_neighbor() {
        // x = [1,0,0,1], y = [0,1,0,0], |N| = 2 (self included)
        let x = sv(&[1.0, 0.0, 0.0, 1.0]);
        let y = sv(&[0.0, 1.0, 0.0, 0.0]);
        let adj = raw_correlation(&x, &[(x.clone(), 1.0), (y, 1.0)], 0, 4).unwrap();
        assert_eq!(adj.active, vec![0, 1, 3]);
        for (f, g, want) in [
            (0, 1, 0.5),
            (1, 0, 0.5),
            (3, 1, 0.5),
            (1, 3, 0.5),
            (0, 0, 1.0),
            (3, 3, 1.0),
            (0, 3, 1.0),
            (3, 0, 1.0),
            (1, 1, 0.0),
        ] {
            assert_eq!(adj.get_global(f, g), want, "entry ({f},{g})");
        }
    }

    #[test]
    fn raw_correlation_all_zero_inputs_give_empty_active() {
        let x = SparseVec::empty();
        let adj = raw_correlation(&x, &[(SparseVec::empty(), 1.0)], 0, 4).unwrap();
        assert!(adj.active.is_empty());
        assert!(adj.block().is_empty());
    }

    #[test]
    fn raw_correlation_rejects_empty_neighborhood() {
        let x = sv(&[1.0]);
        assert!(raw_correlation(&x, &[], 0, 1).is_err());
    }

    #[test]
    fn feature_adjacency_applies_sgnroot() {
        let x = sv(&[2.0]);
        // raw self term: 2 * 2 * 2 = 8 -> sgnroot(8)
        let adj = build_feature_adjacency(&x, &[(x.clone(), 1.0)], 0, 1).unwrap();
        assert_abs_diff_eq!(adj.get(0, 0), 8.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn feature_adjacency_symmetric_even_for_asymmetric_weights() {
        let x = sv(&[1.0, 2.0, 0.0]);
        let y = sv(&[0.0, -1.0, 3.0]);
        let z = sv(&[4.0, 0.0, 0.5]);
        let adj =
            build_feature_adjacency(&x, &[(x.clone(), 1.0), (y, 0.3), (z, -2.0)], 0, 3).unwrap();
        assert!(adj.is_symmetric());
    }

    #[test]
    fn normalize_pure_self_loop() {
        let adj = FeatureAdjacency::from_block(0, vec![5], vec![0.0]).unwrap();
        let out = normalize(&adj);
        assert_eq!(out.get(0, 0), 1.0);
    }

    #[test]
    fn normalize_two_by_two_example() {
        // [[0,1],[1,0]] -> A~ = [[1,1],[1,1]], D = diag(2,2) -> all entries 0.5
        let adj =
            FeatureAdjacency::from_block(0, vec![0, 1], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = normalize(&adj);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(out.get(i, j), 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn normalize_preserves_symmetry() {
        let x = sv(&[1.0, -0.5, 2.0, 0.0]);
        let y = sv(&[0.5, 0.0, -1.0, 1.0]);
        let adj = build_feature_adjacency(&x, &[(x.clone(), 1.0), (y, 2.0)], 0, 4).unwrap();
        let out = normalize(&adj);
        assert!(out.is_symmetric());
    }

    #[test]
    fn build_sample_star_example() {
        // hub features [1,0,0,1]; the active set grows with neighbor supports
        let x = sv(&[1.0, 0.0, 0.0, 1.0]);
        let neighbors = vec![
            (x.clone(), 1.0),
            (sv(&[0.0, 1.0, 0.0, 0.0]), 1.0),
            (sv(&[0.0, 0.0, 1.0, 0.0]), 1.0),
            (sv(&[1.0, 0.0, 0.0, 0.0]), 1.0),
            (sv(&[0.0, 0.0, 0.0, 1.0]), 1.0),
        ];
        let s = build_sample_from_parts(&x, &neighbors, 4, 1, 2, 0).unwrap();
        assert_eq!(s.active, vec![0, 1, 2, 3]);
        assert_eq!(s.node_values, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.label, 2);
        assert_eq!(s.channels(), 1);
        assert!(s.adjacency_hat[0].is_symmetric());
    }

    #[test]
    fn build_sample_isolated_node_uses_self_only() {
        let x = sv(&[0.0, 3.0]);
        let s = build_sample_from_parts(&x, &[(x.clone(), 1.0)], 2, 1, 0, 0).unwrap();
        assert_eq!(s.active, vec![1]);
        // raw = 2*9 = 18, sgnroot -> sqrt(18); normalize: d = sqrt(18)+1
        let a = 18.0f64.sqrt();
        assert_abs_diff_eq!(s.adjacency_hat[0].get(0, 0), (a + 1.0) / (a + 1.0), epsilon = 1e-15);
    }

    #[test]
    fn debug_dump_is_one_line_json() {
        let x = sv(&[1.0, 1.0]);
        let s = build_sample_from_parts(&x, &[(x.clone(), 1.0)], 2, 1, 0, 0).unwrap();
        let line = s.to_debug_json();
        assert!(!line.contains('\n'));
        let value: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(value["active"], serde_json::json!([0, 1]));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn sparse_vec(dim: usize) -> impl Strategy<Value = SparseVec> {
            proptest::collection::vec(-2.0f64..2.0, dim)
                .prop_map(|dense| SparseVec::from_dense(&dense).unwrap())
        }

        proptest! {
            #[test]
            fn sgnroot_is_odd(v in -1e6f64..1e6) {
                prop_assert_eq!(sgnroot(-v), -sgnroot(v));
            }

            #[test]
            fn sgnroot_is_monotone(a in -1e6f64..1e6, b in -1e6f64..1e6) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(sgnroot(lo) <= sgnroot(hi));
            }

            #[test]
            fn raw_correlation_symmetric_for_any_input(
                x in sparse_vec(6),
                ys in proptest::collection::vec((sparse_vec(6), -3.0f64..3.0), 1..5),
            ) {
                let adj = raw_correlation(&x, &ys, 0, 6).unwrap();
                prop_assert!(adj.is_symmetric());
                let out = normalize(&adj.map(sgnroot));
                prop_assert!(out.is_symmetric());
                for v in out.block() {
                    prop_assert!(v.is_finite());
                }
            }

            #[test]
            fn binary_unit_weight_entries_stay_in_range(
                xs in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 5), 1..5),
            ) {
                let binarize = |v: &Vec<f64>| {
                    SparseVec::from_dense(&v.iter().map(|&x| x.round()).collect::<Vec<_>>()).unwrap()
                };
                let x = binarize(&xs[0]);
                let neighbors: Vec<(SparseVec, f64)> =
                    xs.iter().map(|v| (binarize(v), 1.0)).collect();
                let adj = raw_correlation(&x, &neighbors, 0, 5).unwrap();
                for &v in adj.block() {
                    prop_assert!((0.0..=2.0).contains(&v), "entry {v} out of [0, 2]");
                }
            }
        }
    }
}
