//! Exact k-nearest-neighbour search over the entries of one action memory.
//!
//! Two backends are provided. [`Backend::NaiveScan`] is the reference linear
//! scan. [`Backend::SpatialTree`] is a kd-tree built over a snapshot of the
//! keys; entries that were appended or whose key moved since the snapshot are
//! tracked in a small pending list that is scanned linearly, and the tree is
//! rebuilt once that list grows past a size-dependent threshold.
//!
//! Both backends rank candidates by `(squared distance, entry index)`, so
//! they agree exactly, ties included.

use std::cmp::Ordering;

use super::kernel::squared_distance;
use super::MemoryEntry;

/// Nearest-neighbour backend tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    NaiveScan,
    #[default]
    SpatialTree,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "naive" | "naive-scan" | "scan" => Ok(Backend::NaiveScan),
            "tree" | "kdtree" | "kd-tree" | "spatial-tree" => Ok(Backend::SpatialTree),
            other => Err(format!("unknown knn backend `{other}`")),
        }
    }
}

/// One k-NN result: entry index and squared distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

#[inline]
fn rank(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Bounded sorted candidate list. `k` is small (tens), so insertion sort wins
/// over a heap here.
pub(crate) struct Candidates {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    #[inline]
    pub(crate) fn offer(&mut self, dist2: f64, index: usize) {
        let cand = (dist2, index);
        if self.items.len() == self.k {
            if rank(cand, self.items[self.k - 1]) != Ordering::Less {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|&it| rank(it, cand) == Ordering::Less);
        self.items.insert(pos, cand);
    }

    pub(crate) fn into_neighbors(self) -> Vec<Neighbor> {
        self.items
            .into_iter()
            .map(|(dist2, index)| Neighbor { index, dist2 })
            .collect()
    }
}

pub(crate) fn naive_knn(entries: &[MemoryEntry], query: &[f64], k: usize) -> Vec<Neighbor> {
    let mut cands = Candidates::new(k);
    for (i, e) in entries.iter().enumerate() {
        cands.offer(squared_distance(e.key.as_slice(), query), i);
    }
    cands.into_neighbors()
}

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree over a snapshot of keys.
#[derive(Debug, Clone)]
struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
    /// Entry indices in leaf order.
    order: Vec<usize>,
    /// Snapshot coordinates, `dim` values per slot of `order`.
    coords: Vec<f64>,
}

impl KdTree {
    fn build(entries: &[MemoryEntry], dim: usize) -> Self {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            Self::build_node(entries, &mut order, 0, dim, &mut nodes);
        }
        let mut coords = Vec::with_capacity(order.len() * dim);
        for &i in &order {
            coords.extend_from_slice(entries[i].key.as_slice());
        }
        Self {
            dim,
            nodes,
            order,
            coords,
        }
    }

    fn build_node(
        entries: &[MemoryEntry],
        slice: &mut [usize],
        offset: usize,
        dim: usize,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let id = nodes.len();
        if slice.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                start: offset,
                end: offset + slice.len(),
            });
            return id;
        }
        // split on the axis of largest spread
        let mut axis = 0;
        let mut best_spread = -1.0;
        for d in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in slice.iter() {
                let v = entries[i].key.as_slice()[d];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = d;
            }
        }
        if best_spread <= 0.0 {
            // all points identical
            nodes.push(Node::Leaf {
                start: offset,
                end: offset + slice.len(),
            });
            return id;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            let va = entries[a].key.as_slice()[axis];
            let vb = entries[b].key.as_slice()[axis];
            va.total_cmp(&vb).then(a.cmp(&b))
        });
        let value = entries[slice[mid]].key.as_slice()[axis];
        nodes.push(Node::Leaf { start: 0, end: 0 });
        let (lo_half, hi_half) = slice.split_at_mut(mid);
        let left = Self::build_node(entries, lo_half, offset, dim, nodes);
        let right = Self::build_node(entries, hi_half, offset + mid, dim, nodes);
        nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn search(&self, node: usize, query: &[f64], stale: &[bool], cands: &mut Candidates) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let idx = self.order[slot];
                    if stale[idx] {
                        continue;
                    }
                    let p = &self.coords[slot * self.dim..(slot + 1) * self.dim];
                    cands.offer(squared_distance(p, query), idx);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, stale, cands);
                // `<=` keeps equal-distance points reachable for the index tie-break
                if diff * diff <= cands.worst() {
                    self.search(far, query, stale, cands);
                }
            }
        }
    }
}

/// kd-tree plus the overlay of entries that changed since it was built.
#[derive(Debug, Clone, Default)]
pub(crate) struct SpatialIndex {
    tree: Option<KdTree>,
    stale: Vec<bool>,
    pending: Vec<usize>,
}

impl SpatialIndex {
    /// Record that entry `index` was appended or its key moved.
    pub(crate) fn mark_changed(&mut self, index: usize) {
        if index >= self.stale.len() {
            self.stale.resize(index + 1, false);
        }
        if !self.stale[index] {
            self.stale[index] = true;
            self.pending.push(index);
        }
    }

    fn rebuild_threshold(len: usize) -> usize {
        64.max(4 * (len as f64).sqrt() as usize)
    }

    /// Rebuild the tree when the linearly scanned overlay got too large.
    pub(crate) fn maintain(&mut self, entries: &[MemoryEntry], dim: usize) {
        if self.pending.len() > Self::rebuild_threshold(entries.len()) {
            self.rebuild(entries, dim);
        }
    }

    pub(crate) fn rebuild(&mut self, entries: &[MemoryEntry], dim: usize) {
        self.tree = Some(KdTree::build(entries, dim));
        self.stale.clear();
        self.stale.resize(entries.len(), false);
        self.pending.clear();
    }

    pub(crate) fn knn(&self, entries: &[MemoryEntry], query: &[f64], k: usize) -> Vec<Neighbor> {
        let mut cands = Candidates::new(k);
        if let Some(tree) = &self.tree {
            if !tree.nodes.is_empty() {
                tree.search(0, query, &self.stale, &mut cands);
            }
        }
        for &i in &self.pending {
            cands.offer(squared_distance(entries[i].key.as_slice(), query), i);
        }
        cands.into_neighbors()
    }
}
