//! Exact k-nearest-neighbor queries over a static point set.
//!
//! Balanced KD-tree with median splits on the widest-spread axis and
//! deterministic tie-breaking by point id, so every downstream consumer
//! (simplex trimming, envelope lookups, the regressor's candidate search)
//! is reproducible across runs and platforms. Queries are exact: results
//! always equal a linear scan.

use crate::geometry::PointStore;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

const DEFAULT_LEAF_SIZE: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NeighborsError {
    #[error("cannot build a KD-tree over an empty point set")]
    Empty,
    #[error("k = {k} out of range for {n} points")]
    BadK { k: usize, n: usize },
    #[error("query dimension {got} does not match tree dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug)]
enum Node {
    Split { axis: usize, value: f64, left: u32, right: u32 },
    Leaf { start: u32, end: u32 },
}

/// Immutable after [`KdTree::build`]; concurrent queries need no locking.
#[derive(Debug)]
pub struct KdTree {
    dim: usize,
    /// Point ids in tree order; leaves reference contiguous ranges.
    ids: Vec<u32>,
    /// Coordinates permuted to match `ids` for cache-friendly leaf scans.
    coords: Vec<f64>,
    /// Inverse permutation: tree slot of each original point id.
    slot_of_id: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

impl KdTree {
    pub fn build(store: &PointStore) -> Result<Self, NeighborsError> {
        Self::build_with_leaf_size(store, DEFAULT_LEAF_SIZE)
    }

    pub fn build_with_leaf_size(
        store: &PointStore,
        leaf_size: usize,
    ) -> Result<Self, NeighborsError> {
        if store.is_empty() {
            return Err(NeighborsError::Empty);
        }
        let leaf_size = leaf_size.max(1);
        let n = store.len();
        let mut ids: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        let root = build_node(store, &mut ids, 0, n, leaf_size, &mut nodes);
        let dim = store.dim();
        let mut coords = Vec::with_capacity(n * dim);
        let mut slot_of_id = vec![0u32; n];
        for (slot, &id) in ids.iter().enumerate() {
            coords.extend_from_slice(store.point(id as usize));
            slot_of_id[id as usize] = slot as u32;
        }
        Ok(Self { dim, ids, coords, slot_of_id, nodes, root })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of the stored point with the given original id.
    pub fn point(&self, id: u32) -> &[f64] {
        let slot = self.slot_of_id[id as usize] as usize;
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    /// The `k` nearest neighbors of `p`, ascending by distance with ties
    /// broken by lower point id. Exactly equals the linear-scan top-k.
    pub fn knn(&self, p: &[f64], k: usize) -> Result<Vec<(u32, f64)>, NeighborsError> {
        if p.len() != self.dim {
            return Err(NeighborsError::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        if k == 0 || k > self.len() {
            return Err(NeighborsError::BadK { k, n: self.len() });
        }
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, p, k, &mut heap);
        let mut out: Vec<(u32, f64)> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| (e.id, e.dist2.sqrt()))
            .collect();
        // into_sorted_vec is ascending by (dist2, id) already; nothing to do
        // beyond the sqrt above, but keep the invariant explicit.
        debug_assert!(out.windows(2).all(|w| w[0].1 <= w[1].1));
        out.truncate(k);
        Ok(out)
    }

    /// Nearest single neighbor.
    pub fn nearest(&self, p: &[f64]) -> Result<(u32, f64), NeighborsError> {
        Ok(self.knn(p, 1)?[0])
    }

    fn search(&self, node: u32, p: &[f64], k: usize, heap: &mut BinaryHeap<HeapEntry>) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for j in *start as usize..*end as usize {
                    let q = &self.coords[j * self.dim..(j + 1) * self.dim];
                    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    let entry = HeapEntry { dist2: d2, id: self.ids[j] };
                    if heap.len() < k {
                        heap.push(entry);
                    } else if entry < *heap.peek().expect("heap non-empty") {
                        heap.push(entry);
                        heap.pop();
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = p[*axis] - value;
                let (near, far) = if delta <= 0.0 { (*left, *right) } else { (*right, *left) };
                self.search(near, p, k, heap);
                let plane_d2 = delta * delta;
                let must_visit = heap.len() < k
                    || plane_d2 <= heap.peek().expect("heap non-empty").dist2;
                if must_visit {
                    self.search(far, p, k, heap);
                }
            }
        }
    }
}

/// Max-heap entry ordered by (dist2, id); the heap keeps the k smallest.
#[derive(PartialEq)]
struct HeapEntry {
    dist2: f64,
    id: u32,
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then_with(|| self.id.cmp(&other.id))
    }
}

fn build_node(
    store: &PointStore,
    ids: &mut [u32],
    start: usize,
    end: usize,
    leaf_size: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let len = end - start;
    if len <= leaf_size {
        nodes.push(Node::Leaf { start: start as u32, end: end as u32 });
        return (nodes.len() - 1) as u32;
    }
    // Widest-spread axis over this subset.
    let dim = store.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &id in &ids[start..end] {
        for (a, &x) in store.point(id as usize).iter().enumerate() {
            lo[a] = lo[a].min(x);
            hi[a] = hi[a].max(x);
        }
    }
    let axis = (0..dim)
        .max_by(|&i, &j| (hi[i] - lo[i]).total_cmp(&(hi[j] - lo[j])))
        .expect("dim >= 1");

    let mid = start + len / 2;
    let key = |id: u32| (store.point(id as usize)[axis], id);
    ids[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        let (xa, ia) = key(a);
        let (xb, ib) = key(b);
        xa.total_cmp(&xb).then_with(|| ia.cmp(&ib))
    });
    let value = store.point(ids[mid] as usize)[axis];

    // Reserve the slot before recursing so the children land after it.
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let slot = (nodes.len() - 1) as u32;
    let left = build_node(store, ids, start, mid, leaf_size, nodes);
    let right = build_node(store, ids, mid, end, leaf_size, nodes);
    nodes[slot as usize] = Node::Split { axis, value, left, right };
    slot
}
