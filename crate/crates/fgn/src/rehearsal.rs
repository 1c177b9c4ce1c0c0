//! Bounded rehearsal memory with reservoir selection.
//!
//! The selection rule keeps every offered item with probability 1 until the
//! store is full; afterwards the t-th arrival is accepted with probability
//! M/t and evicts a uniformly random slot. The per-step survival of a stored
//! item at time t is then (t-1)/t, and the telescoping product gives every
//! arrival the same retention probability M/t at any time t.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FgnError, Result};
use crate::featgraph::FeatureGraphSample;

/// Storage policy: plain reservoir or per-class quotas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryMode {
    Uniform,
    Balanced,
}

/// Probability that the n-th observed item is selected (kept) at time t:
/// 1 while t <= M; M/n when the item arrives at t = n > M; per-step survival
/// (t-1)/t afterwards. The cumulative product over steps n..t equals M/t for
/// every n, so all arrivals share the same retention probability.
pub fn selection_probability(n: u64, t: u64, capacity: usize) -> Result<f64> {
    if n == 0 || t == 0 || n > t {
        return Err(FgnError::InvalidArgument(format!(
            "need 1 <= n <= t, got n = {n}, t = {t}"
        )));
    }
    let m = capacity as f64;
    Ok(if t <= capacity as u64 {
        1.0
    } else if t == n {
        m / n as f64
    } else {
        (t - 1) as f64 / t as f64
    })
}

/// Capacity-bounded sample store with reservoir replacement.
#[derive(Debug, Clone)]
pub struct ReservoirMemory {
    capacity: usize,
    mode: MemoryMode,
    items: Vec<Arc<FeatureGraphSample>>,
    arrivals: u64,
    /// Arrival count per class label (balanced mode).
    class_arrivals: Vec<u64>,
    rng: ChaCha8Rng,
}

impl ReservoirMemory {
    pub fn new(capacity: usize, mode: MemoryMode, seed: u64) -> Self {
        ReservoirMemory {
            capacity,
            mode,
            items: Vec::with_capacity(capacity),
            arrivals: 0,
            class_arrivals: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items offered so far.
    pub fn arrivals(&self) -> u64 {
        self.arrivals
    }

    pub fn mode(&self) -> MemoryMode {
        self.mode
    }

    pub fn items(&self) -> &[Arc<FeatureGraphSample>] {
        &self.items
    }

    /// Stored-item count per class label, for harness logging.
    pub fn class_histogram(&self) -> Vec<(usize, usize)> {
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for item in &self.items {
            match counts.iter_mut().find(|(c, _)| *c == item.label) {
                Some((_, n)) => *n += 1,
                None => counts.push((item.label, 1)),
            }
        }
        counts.sort_unstable();
        counts
    }

    /// Offers one item to the store.
    pub fn observe(&mut self, item: Arc<FeatureGraphSample>) {
        match self.mode {
            MemoryMode::Uniform => self.observe_uniform(item),
            MemoryMode::Balanced => self.observe_balanced(item),
        }
    }

    fn observe_uniform(&mut self, item: Arc<FeatureGraphSample>) {
        self.arrivals += 1;
        if self.capacity == 0 {
            return;
        }
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            // accept with probability M/t and evict a uniform slot, in one draw
            let j = self.rng.gen_range(0..self.arrivals) as usize;
            if j < self.capacity {
                self.items[j] = item;
            }
        }
    }

    /// Classes with at least one arrival so far.
    fn seen_classes(&self) -> usize {
        self.class_arrivals.iter().filter(|&&n| n > 0).count()
    }

    /// Per-class quota: floor(M / seen classes).
    fn quota(&self) -> usize {
        self.capacity.checked_div(self.seen_classes()).unwrap_or(self.capacity)
    }

    fn observe_balanced(&mut self, item: Arc<FeatureGraphSample>) {
        self.arrivals += 1;
        if self.capacity == 0 {
            return;
        }
        let class = item.label;
        if class >= self.class_arrivals.len() {
            self.class_arrivals.resize(class + 1, 0);
        }
        let new_class = self.class_arrivals[class] == 0;
        self.class_arrivals[class] += 1;
        if new_class {
            // quotas shrink; evict uniformly random items from over-quota classes
            let quota = self.quota();
            let mut seen: Vec<usize> =
                (0..self.class_arrivals.len()).filter(|&c| self.class_arrivals[c] > 0).collect();
            seen.sort_unstable();
            for c in seen {
                loop {
                    let members: Vec<usize> = (0..self.items.len())
                        .filter(|&i| self.items[i].label == c)
                        .collect();
                    if members.len() <= quota {
                        break;
                    }
                    let pick = members[self.rng.gen_range(0..members.len())];
                    self.items.swap_remove(pick);
                }
            }
        }
        let quota = self.quota();
        let stored: Vec<usize> =
            (0..self.items.len()).filter(|&i| self.items[i].label == class).collect();
        if stored.len() < quota {
            self.items.push(item);
        } else if quota > 0 {
            // within-class reservoir against the quota
            let j = self.rng.gen_range(0..self.class_arrivals[class]) as usize;
            if j < quota {
                self.items[stored[j]] = item;
            }
        }
    }
}

/// Builds a training batch: the new item first, then batch_size - 1 draws
/// uniformly with replacement from the memory. With an empty memory the batch
/// is the new item alone.
pub fn compose_batch(
    memory: &mut ReservoirMemory,
    new_item: &Arc<FeatureGraphSample>,
    batch_size: usize,
) -> Vec<Arc<FeatureGraphSample>> {
    let mut batch = Vec::with_capacity(batch_size);
    batch.push(Arc::clone(new_item));
    if memory.items.is_empty() {
        return batch;
    }
    for _ in 1..batch_size {
        let pick = memory.rng.gen_range(0..memory.items.len());
        batch.push(Arc::clone(&memory.items[pick]));
    }
    batch
}
