//! d-dimensional Delaunay triangulation by incremental insertion
//! (Bowyer-Watson).
//!
//! The triangulation is maintained together with a symbolic *infinite vertex*:
//! every hull facet is shared with an infinite cell, so each facet always has
//! exactly two incident cells and hull growth needs no special casing. Points
//! are inserted in seeded-shuffled order; the conflict region is located by a
//! stochastic visibility walk and grown by adjacency.
//!
//! Predicates are evaluated on a *perturbed copy* of the coordinates: each
//! point gets a deterministic per-id jitter of relative magnitude
//! [`PERTURBATION_SCALE`] per axis. This breaks cospherical and collinear ties
//! (grids, points sampled on circles) while the stored coordinates, and hence
//! all downstream geometry, remain untouched. The Delaunay property is exact
//! for the perturbed cloud and holds to within the perturbation for the
//! original one.

use crate::geometry::{PointStore, Simplex};
use crate::seeding;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashMap;
use thiserror::Error;

/// Triangulation cost grows like `n^(D/2)`; beyond this dimension feature
/// bagging is the supported route.
pub const MAX_DIM: usize = 10;

/// Relative magnitude of the per-axis symbolic perturbation.
pub const PERTURBATION_SCALE: f64 = 1e-10;

const INF: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DelaunayError {
    #[error("triangulation in dimension {dim} needs at least {needed} points, got {got}")]
    NotEnoughPoints { dim: usize, needed: usize, got: usize },
    #[error("point cloud spans only {rank} of {dim} dimensions even after perturbation")]
    DegenerateCloud { rank: usize, dim: usize },
    #[error("dimension {dim} exceeds the supported maximum of {max}; bag features instead", max = MAX_DIM)]
    DimensionTooHigh { dim: usize },
    #[error("degenerate simplex passed to a circumsphere predicate")]
    DegenerateSimplex,
    #[error("point location failed; predicates are inconsistent on this input")]
    LocationFailure,
}

/// The convex-hull-covering simplicial complex of a point cloud.
///
/// Simplices are canonical (sorted vertex ids, lexicographically sorted list),
/// so identical input and seed reproduce an identical structure byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub simplices: Vec<Simplex>,
    pub point_count: usize,
    pub dim: usize,
}

impl Triangulation {
    /// Counts simplices incident to each canonical facet. In a well-formed
    /// triangulation every count is 1 (hull) or 2 (interior).
    pub fn facet_incidence(&self) -> HashMap<Vec<u32>, usize> {
        let mut counts = HashMap::new();
        for s in &self.simplices {
            for f in s.facets() {
                *counts.entry(f).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// The perturbed coordinates used by the triangulation predicates for a given
/// seed. Exposed so tests can verify the empty-circumsphere property on
/// exactly the inputs the predicates saw.
pub fn perturbed_coords(points: &PointStore, seed: u64) -> PointStore {
    let dim = points.dim();
    let ranges = points.axis_ranges().unwrap_or_else(|| vec![(0.0, 0.0); dim]);
    let spans: Vec<f64> = ranges.iter().map(|(lo, hi)| hi - lo).collect();
    let mut out = PointStore::with_capacity(dim, points.len());
    let mut buf = vec![0.0; dim];
    for (i, p) in points.iter().enumerate() {
        let mut rng = seeding::rng(seed, 0x7065_7274 ^ ((i as u64) << 8));
        for (a, (b, &x)) in buf.iter_mut().zip(p).enumerate() {
            *b = x + rng.gen_range(-1.0..1.0) * PERTURBATION_SCALE * spans[a];
        }
        out.push(&buf);
    }
    out
}

/// Delaunay triangulation of `points`. Deterministic for a fixed seed.
///
/// Exact duplicate points are merged onto their first occurrence; the
/// resulting simplices reference representative ids only.
pub fn triangulate(points: &PointStore, seed: u64) -> Result<Triangulation, DelaunayError> {
    let dim = points.dim();
    let n = points.len();
    if dim > MAX_DIM {
        return Err(DelaunayError::DimensionTooHigh { dim });
    }
    if n < dim + 1 {
        return Err(DelaunayError::NotEnoughPoints { dim, needed: dim + 1, got: n });
    }

    let perturbed = perturbed_coords(points, seed);

    // Merge exact duplicates before any predicate sees them: two copies of
    // the same coordinates would otherwise become jitter-separated slivers.
    let mut seen: HashMap<Vec<u64>, u32> = HashMap::with_capacity(n);
    let mut unique: Vec<u32> = Vec::with_capacity(n);
    for i in 0..n {
        let key: Vec<u64> = points.point(i).iter().map(|x| x.to_bits()).collect();
        seen.entry(key).or_insert_with(|| {
            unique.push(i as u32);
            i as u32
        });
    }
    if unique.len() < dim + 1 {
        return Err(DelaunayError::NotEnoughPoints { dim, needed: dim + 1, got: unique.len() });
    }

    let mut order = unique.clone();
    order.shuffle(&mut seeding::rng(seed, 0x6f72_6465));

    if dim == 1 {
        return Ok(triangulate_1d(&perturbed, &order, n));
    }

    let mut bw = BowyerWatson::new(&perturbed, seed);
    let initial = bw.find_independent(&order)?;
    bw.build_initial(&initial);
    for &id in &order {
        if !initial.contains(&id) {
            bw.insert(id)?;
        }
    }

    let mut simplices: Vec<Simplex> = bw
        .cells
        .iter()
        .filter(|c| c.alive && !c.verts.contains(&INF))
        .map(|c| Simplex::new(c.verts.clone()))
        .collect();
    simplices.sort_unstable();
    Ok(Triangulation { simplices, point_count: n, dim })
}

/// 1D Delaunay is sorted adjacency: consecutive unique points form segments.
fn triangulate_1d(perturbed: &PointStore, order: &[u32], n: usize) -> Triangulation {
    let mut ids = order.to_vec();
    ids.sort_unstable_by(|&a, &b| {
        perturbed.point(a as usize)[0]
            .total_cmp(&perturbed.point(b as usize)[0])
            .then_with(|| a.cmp(&b))
    });
    let mut simplices: Vec<Simplex> = ids
        .windows(2)
        .map(|w| Simplex::new(vec![w[0], w[1]]))
        .collect();
    simplices.sort_unstable();
    Triangulation { simplices, point_count: n, dim: 1 }
}

/// True iff `p` lies strictly inside the circumsphere of `simplex`.
///
/// Evaluated on the stored coordinates via the lifted-paraboloid determinant
/// with explicit orientation handling.
pub fn circumsphere_contains(
    simplex: &Simplex,
    store: &PointStore,
    p: &[f64],
) -> Result<bool, DelaunayError> {
    let dim = store.dim();
    assert_eq!(p.len(), dim, "query dimension mismatch");
    assert_eq!(simplex.vertices().len(), dim + 1, "need a full-dimensional simplex");
    let verts: Vec<&[f64]> = simplex.vertices().iter().map(|&v| store.point(v as usize)).collect();
    let mut scratch = Scratch::new(dim);
    let orient = scratch.orientation(&verts);
    let scale: f64 = verts
        .iter()
        .flat_map(|v| v.iter().zip(verts[0]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    if orient.abs() <= 1e-12 * scale.powi(dim as i32).max(f64::MIN_POSITIVE) {
        return Err(DelaunayError::DegenerateSimplex);
    }
    let ins = scratch.insphere(&verts, p);
    Ok(ins * orient.signum() * parity(dim) > 0.0)
}

/// Sign relating the lifted determinant to "inside" for dimension `d`.
#[inline]
fn parity(d: usize) -> f64 {
    if d % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Scratch buffers for the determinant predicates; avoids per-call allocation
/// in the insertion hot loop.
struct Scratch {
    dim: usize,
    m: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self { dim, m: vec![0.0; (dim + 1) * (dim + 1)] }
    }

    /// Determinant of `[v1-v0; ...; vd-v0]`; positive for canonical order.
    fn orientation(&mut self, verts: &[&[f64]]) -> f64 {
        let d = self.dim;
        debug_assert_eq!(verts.len(), d + 1);
        for (r, v) in verts[1..].iter().enumerate() {
            for c in 0..d {
                self.m[r * d + c] = v[c] - verts[0][c];
            }
        }
        det_in_place(&mut self.m, d)
    }

    /// Lifted determinant with rows `[v_i - p, |v_i - p|^2]`.
    fn insphere(&mut self, verts: &[&[f64]], p: &[f64]) -> f64 {
        let d = self.dim;
        let w = d + 1;
        debug_assert_eq!(verts.len(), w);
        for (r, v) in verts.iter().enumerate() {
            let mut norm2 = 0.0;
            for c in 0..d {
                let diff = v[c] - p[c];
                self.m[r * w + c] = diff;
                norm2 += diff * diff;
            }
            self.m[r * w + d] = norm2;
        }
        det_in_place(&mut self.m, w)
    }
}

/// In-place partial-pivot Gaussian elimination determinant for tiny matrices.
fn det_in_place(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                m.swap(pivot * n + c, col * n + c);
            }
            det = -det;
        }
        let diag = m[col * n + col];
        det *= diag;
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            if factor != 0.0 {
                for c in col..n {
                    m[row * n + c] -= factor * m[col * n + c];
                }
            }
        }
    }
    det
}

struct Cell {
    /// `dim + 1` vertex ids; `INF` marks the infinite vertex, at most once.
    /// Finite cells are kept positively oriented on the perturbed coords.
    verts: Vec<u32>,
    /// `neighbors[i]` is the cell across the facet opposite `verts[i]`.
    neighbors: Vec<u32>,
    alive: bool,
    stamp: u64,
}

struct BowyerWatson<'a> {
    pts: &'a PointStore,
    dim: usize,
    cells: Vec<Cell>,
    free: Vec<u32>,
    scratch: Scratch,
    walk_rng: rand_chacha::ChaCha8Rng,
    last_created: u32,
    stamp: u64,
    // Reused per-insertion buffers.
    cavity: Vec<u32>,
    boundary: Vec<(u32, usize)>,
    ridge_map: HashMap<Vec<u32>, (u32, usize)>,
}

impl<'a> BowyerWatson<'a> {
    fn new(pts: &'a PointStore, seed: u64) -> Self {
        let dim = pts.dim();
        Self {
            pts,
            dim,
            cells: Vec::new(),
            free: Vec::new(),
            scratch: Scratch::new(dim),
            walk_rng: seeding::rng(seed, 0x77616c6b),
            last_created: 0,
            stamp: 0,
            cavity: Vec::new(),
            boundary: Vec::new(),
            ridge_map: HashMap::new(),
        }
    }

    fn point(&self, id: u32) -> &[f64] {
        self.pts.point(id as usize)
    }

    /// Greedy scan for `dim + 1` affinely independent points, checked by
    /// Gram-Schmidt against a relative tolerance.
    fn find_independent(&self, order: &[u32]) -> Result<Vec<u32>, DelaunayError> {
        let dim = self.dim;
        let scale = self
            .pts
            .axis_ranges()
            .map(|r| r.iter().map(|(lo, hi)| hi - lo).fold(0.0f64, f64::max))
            .unwrap_or(1.0)
            .max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;

        let first = order[0];
        let mut chosen = vec![first];
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for &cand in &order[1..] {
            if basis.len() == dim {
                break;
            }
            let mut v: Vec<f64> = self
                .point(cand)
                .iter()
                .zip(self.point(first))
                .map(|(a, b)| a - b)
                .collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > tol {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
                chosen.push(cand);
            }
        }
        if basis.len() < dim {
            return Err(DelaunayError::DegenerateCloud { rank: basis.len(), dim });
        }
        Ok(chosen)
    }

    fn alloc(&mut self, verts: Vec<u32>) -> u32 {
        let neighbors = vec![u32::MAX; verts.len()];
        let cell = Cell { verts, neighbors, alive: true, stamp: 0 };
        match self.free.pop() {
            Some(id) => {
                self.cells[id as usize] = cell;
                id
            }
            None => {
                self.cells.push(cell);
                (self.cells.len() - 1) as u32
            }
        }
    }

    /// Enforces positive orientation for finite cells by swapping the first
    /// two vertices if needed. Must run before neighbors are assigned.
    fn normalize_orientation(&mut self, cell: u32) {
        let verts = self.cells[cell as usize].verts.clone();
        if verts.contains(&INF) {
            return;
        }
        let store = self.pts;
        let pts: Vec<&[f64]> = verts.iter().map(|&v| store.point(v as usize)).collect();
        if self.scratch.orientation(&pts) < 0.0 {
            self.cells[cell as usize].verts.swap(0, 1);
        }
    }

    fn build_initial(&mut self, verts: &[u32]) {
        let dim = self.dim;
        let root = self.alloc(verts.to_vec());
        self.normalize_orientation(root);
        let root_verts = self.cells[root as usize].verts.clone();

        // One infinite cell per facet of the root simplex.
        let mut inf_cells = Vec::with_capacity(dim + 1);
        for i in 0..=dim {
            let mut f: Vec<u32> = root_verts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            f.push(INF);
            let c = self.alloc(f);
            // Across INF lies the root; across the root's slot i lies c.
            let inf_slot = dim; // INF was pushed last
            self.cells[c as usize].neighbors[inf_slot] = root;
            self.cells[root as usize].neighbors[i] = c;
            inf_cells.push(c);
        }
        // Infinite cells are pairwise adjacent across ridges containing INF.
        self.ridge_map.clear();
        for &c in &inf_cells {
            let verts = self.cells[c as usize].verts.clone();
            for (slot, &skip) in verts.iter().enumerate() {
                if skip == INF {
                    continue; // already glued to the root
                }
                let mut ridge: Vec<u32> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != slot)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                match self.ridge_map.remove(&ridge) {
                    Some((other, other_slot)) => {
                        self.cells[c as usize].neighbors[slot] = other;
                        self.cells[other as usize].neighbors[other_slot] = c;
                    }
                    None => {
                        self.ridge_map.insert(ridge, (c, slot));
                    }
                }
            }
        }
        self.last_created = root;
    }

    /// Does the cell's circumsphere (or outer half-space, for infinite cells)
    /// strictly contain `p`?
    fn conflicts(&mut self, cell: u32, p: &[f64]) -> bool {
        let store = self.pts;
        let c = &self.cells[cell as usize];
        debug_assert!(c.alive);
        match c.verts.iter().position(|&v| v == INF) {
            None => {
                let verts: Vec<&[f64]> =
                    c.verts.iter().map(|&v| store.point(v as usize)).collect();
                self.scratch.insphere(&verts, p) * parity(self.dim) > 0.0
            }
            Some(inf_slot) => {
                // Visible from the real facet = strictly opposite the hull
                // interior, witnessed by the finite neighbor's far vertex.
                let fin = c.neighbors[inf_slot];
                let facet: Vec<u32> = c
                    .verts
                    .iter()
                    .copied()
                    .filter(|&v| v != INF)
                    .collect();
                let fc = &self.cells[fin as usize];
                let inside_vertex = fc
                    .verts
                    .iter()
                    .copied()
                    .find(|v| !facet.contains(v))
                    .expect("finite neighbor has an off-facet vertex");
                let ref_side = self.facet_side(&facet, store.point(inside_vertex as usize));
                let p_side = self.facet_side(&facet, p);
                p_side * ref_side < 0.0
            }
        }
    }

    /// Signed orientation of `p` against the hyperplane through `facet`.
    fn facet_side(&mut self, facet: &[u32], p: &[f64]) -> f64 {
        let store = self.pts;
        let mut pts: Vec<&[f64]> = facet.iter().map(|&v| store.point(v as usize)).collect();
        pts.push(p);
        self.scratch.orientation(&pts)
    }

    /// Finds one conflicting cell by stochastic visibility walk, falling back
    /// to an exhaustive scan if the walk stalls.
    fn locate_conflict(&mut self, p: &[f64]) -> Result<u32, DelaunayError> {
        let mut current = self.last_created;
        if !self.cells[current as usize].alive || self.cells[current as usize].verts.contains(&INF)
        {
            current = match self
                .cells
                .iter()
                .position(|c| c.alive && !c.verts.contains(&INF))
            {
                Some(i) => i as u32,
                None => return Err(DelaunayError::LocationFailure),
            };
        }

        let max_steps = 4 * self.cells.len() + 64;
        for _ in 0..max_steps {
            let verts = self.cells[current as usize].verts.clone();
            let offset = self.walk_rng.gen_range(0..verts.len());
            let mut moved = false;
            for shift in 0..verts.len() {
                let slot = (offset + shift) % verts.len();
                // Facet opposite verts[slot]; p beyond it means the cell
                // cannot contain p and the neighbor is closer.
                let facet: Vec<u32> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != slot)
                    .map(|(_, &v)| v)
                    .collect();
                let store = self.pts;
                let own = self.facet_side(&facet, store.point(verts[slot] as usize));
                let side = self.facet_side(&facet, p);
                if side * own < 0.0 {
                    let next = self.cells[current as usize].neighbors[slot];
                    if self.cells[next as usize].verts.contains(&INF) {
                        // Beyond a hull facet: that infinite cell conflicts.
                        return Ok(next);
                    }
                    current = next;
                    moved = true;
                    break;
                }
            }
            if !moved {
                // No separating facet: p is inside this cell, which therefore
                // conflicts (a simplex lies inside its own circumsphere).
                return Ok(current);
            }
        }

        // Walk exceeded its budget (possible only for near-degenerate
        // inputs); scan everything.
        for id in 0..self.cells.len() as u32 {
            if self.cells[id as usize].alive && self.conflicts(id, p) {
                return Ok(id);
            }
        }
        Err(DelaunayError::LocationFailure)
    }

    fn insert(&mut self, point_id: u32) -> Result<(), DelaunayError> {
        let p = self.point(point_id).to_vec();
        let seed_cell = self.locate_conflict(&p)?;

        // Grow the conflict cavity by adjacency.
        self.stamp += 1;
        let stamp = self.stamp;
        self.cavity.clear();
        self.boundary.clear();
        let mut queue = vec![seed_cell];
        self.cells[seed_cell as usize].stamp = stamp;
        self.cavity.push(seed_cell);
        while let Some(cell) = queue.pop() {
            for slot in 0..=self.dim {
                let nb = self.cells[cell as usize].neighbors[slot];
                if self.cells[nb as usize].stamp == stamp {
                    continue;
                }
                if self.conflicts(nb, &p) {
                    self.cells[nb as usize].stamp = stamp;
                    queue.push(nb);
                    self.cavity.push(nb);
                } else {
                    self.boundary.push((cell, slot));
                }
            }
        }
        // A neighbor may have joined the cavity after its facet was recorded
        // as boundary; re-filter against the final stamps.
        let boundary: Vec<(u32, usize)> = self
            .boundary
            .iter()
            .copied()
            .filter(|&(cell, slot)| {
                let nb = self.cells[cell as usize].neighbors[slot];
                self.cells[nb as usize].stamp != stamp
            })
            .collect();
        if boundary.is_empty() {
            return Err(DelaunayError::LocationFailure);
        }

        // Retriangulate: one new cell per boundary facet, apex at the new point.
        self.ridge_map.clear();
        let mut first_new_finite = u32::MAX;
        for &(dead, slot) in &boundary {
            let outside = self.cells[dead as usize].neighbors[slot];
            let facet: Vec<u32> = self.cells[dead as usize]
                .verts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != slot)
                .map(|(_, &v)| v)
                .collect();
            let mut verts = facet.clone();
            verts.push(point_id);
            let new_cell = self.alloc(verts);
            self.normalize_orientation(new_cell);
            if first_new_finite == u32::MAX && !facet.contains(&INF) {
                first_new_finite = new_cell;
            }

            // Glue across the boundary facet.
            let apex_slot = self.cells[new_cell as usize]
                .verts
                .iter()
                .position(|&v| v == point_id)
                .expect("apex present");
            self.cells[new_cell as usize].neighbors[apex_slot] = outside;
            let outside_slot = self.cells[outside as usize]
                .neighbors
                .iter()
                .position(|&nb| nb == dead)
                .expect("outside cell was adjacent to the cavity");
            self.cells[outside as usize].neighbors[outside_slot] = new_cell;

            // Glue new cells to each other across ridges (facet minus one
            // vertex, plus the apex).
            let new_verts = self.cells[new_cell as usize].verts.clone();
            for (slot, &skip) in new_verts.iter().enumerate() {
                if skip == point_id {
                    continue;
                }
                let mut ridge: Vec<u32> = new_verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != slot)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                match self.ridge_map.remove(&ridge) {
                    Some((other, other_slot)) => {
                        self.cells[new_cell as usize].neighbors[slot] = other;
                        self.cells[other as usize].neighbors[other_slot] = new_cell;
                    }
                    None => {
                        self.ridge_map.insert(ridge, (new_cell, slot));
                    }
                }
            }
        }
        debug_assert!(self.ridge_map.is_empty(), "unmatched cavity ridge");

        for i in 0..self.cavity.len() {
            let cell = self.cavity[i];
            self.cells[cell as usize].alive = false;
            self.free.push(cell);
        }
        // Anchor the next walk at a finite cell; the star of the new point
        // always contains one.
        if first_new_finite != u32::MAX {
            self.last_created = first_new_finite;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_store(n: usize, dim: usize, seed: u64) -> PointStore {
        let mut rng = seeding::rng(seed, 0xfeed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        PointStore::from_rows(&rows, dim)
    }

    /// Brute-force check on the perturbed cloud: no point strictly inside any
    /// simplex circumsphere (up to a relative slack for fp rounding).
    fn assert_empty_circumspheres(tri: &Triangulation, points: &PointStore, seed: u64) {
        let perturbed = perturbed_coords(points, seed);
        for s in &tri.simplices {
            for i in 0..perturbed.len() {
                if s.vertices().contains(&(i as u32)) {
                    continue;
                }
                let p = perturbed.point(i);
                // Tolerate boundary ties at fp noise scale by re-testing with
                // the point pulled slightly toward the simplex exterior.
                if circumsphere_contains(s, &perturbed, p).unwrap() {
                    let margin = circumsphere_margin(s, &perturbed, p);
                    assert!(
                        margin < 1e-7,
                        "point {i} strictly inside circumsphere of {:?} (margin {margin:e})",
                        s.vertices()
                    );
                }
            }
        }
    }

    /// Relative depth of p inside the circumsphere: (R - d)/R via the
    /// explicit circumcenter.
    fn circumsphere_margin(s: &Simplex, store: &PointStore, p: &[f64]) -> f64 {
        let (center, radius) = circumcenter(s, store);
        let d = crate::geometry::euclidean(&center, p);
        (radius - d) / radius
    }

    /// Circumcenter oracle: solve the linear system equating distances to all
    /// vertices.
    fn circumcenter(s: &Simplex, store: &PointStore) -> (Vec<f64>, f64) {
        let dim = store.dim();
        let v0 = store.point(s.vertices()[0] as usize);
        let mut a = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        let mut b = nalgebra::DVector::<f64>::zeros(dim);
        for (r, &v) in s.vertices()[1..].iter().enumerate() {
            let vr = store.point(v as usize);
            let mut rhs = 0.0;
            for c in 0..dim {
                a[(r, c)] = 2.0 * (vr[c] - v0[c]);
                rhs += vr[c] * vr[c] - v0[c] * v0[c];
            }
            b[r] = rhs;
        }
        let center = a.lu().solve(&b).expect("non-degenerate simplex");
        let center: Vec<f64> = center.iter().copied().collect();
        let radius = crate::geometry::euclidean(&center, v0);
        (center, radius)
    }

    #[test]
    fn one_dimensional_sorted_adjacency() {
        let store = PointStore::from_rows(&[[0.0], [0.4], [1.0]], 1);
        let tri = triangulate(&store, 1).unwrap();
        assert_eq!(tri.simplices.len(), 2);
        assert_eq!(tri.simplices[0].vertices(), &[0, 1]);
        assert_eq!(tri.simplices[1].vertices(), &[1, 2]);
    }

    #[test]
    fn square_with_interior_point() {
        // Euler count for 2D Delaunay: 2n - 2 - h triangles (n=4, h=3).
        let store = PointStore::from_rows(&[[0.0, 0.0], [2.0, 0.0], [1.0, 2.0], [1.0, 0.7]], 2);
        let tri = triangulate(&store, 7).unwrap();
        assert_eq!(tri.simplices.len(), 3);
        assert_empty_circumspheres(&tri, &store, 7);
    }

    #[test]
    fn random_2d_circumcircles_empty() {
        let store = random_store(30, 2, 21);
        let tri = triangulate(&store, 3).unwrap();
        assert!(!tri.simplices.is_empty());
        assert_empty_circumspheres(&tri, &store, 3);
    }

    #[test]
    fn random_3d_circumspheres_empty() {
        for seed in [1u64, 2, 3] {
            let store = random_store(40, 3, 100 + seed);
            let tri = triangulate(&store, seed).unwrap();
            assert_empty_circumspheres(&tri, &store, seed);
        }
    }

    #[test]
    fn facet_incidence_one_or_two() {
        for dim in 2..=4usize {
            let store = random_store(24, dim, 55 + dim as u64);
            let tri = triangulate(&store, 9).unwrap();
            for (facet, count) in tri.facet_incidence() {
                assert!(
                    count == 1 || count == 2,
                    "facet {facet:?} has incidence {count} in dim {dim}"
                );
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let store = random_store(60, 3, 77);
        let a = triangulate(&store, 5).unwrap();
        let b = triangulate(&store, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coverage_of_hull_interior() {
        // Points sampled inside the hull must land in some simplex.
        let store = random_store(50, 2, 31);
        let tri = triangulate(&store, 13).unwrap();
        // Interior reference for the side tests: the centroid of the cloud is
        // strictly inside the hull.
        let mut centroid = vec![0.0; 2];
        for p in store.iter() {
            centroid[0] += p[0];
            centroid[1] += p[1];
        }
        centroid.iter_mut().for_each(|x| *x /= store.len() as f64);
        let hull_planes: Vec<(crate::geometry::Hyperplane, f64)> = tri
            .facet_incidence()
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(f, _)| {
                let refs: Vec<&[f64]> = f.iter().map(|&v| store.point(v as usize)).collect();
                let h = crate::geometry::facet_hyperplane(&refs).unwrap().unwrap();
                let side = h.signed_eval(&centroid).signum();
                (h, side)
            })
            .collect();
        let inside_hull = |p: &[f64]| {
            hull_planes
                .iter()
                .all(|(h, side)| h.signed_eval(p) * side >= 1e-9)
        };
        let mut rng = seeding::rng(99, 0);
        let mut tested = 0;
        let mut covered = 0;
        while tested < 10_000 {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if !inside_hull(&p) {
                continue;
            }
            tested += 1;
            if tri.simplices.iter().any(|s| {
                crate::geometry::contains(s, &store, &p, crate::geometry::CONTAINMENT_TOL)
                    .unwrap()
            }) {
                covered += 1;
            }
        }
        assert!(
            covered as f64 >= 0.999 * tested as f64,
            "coverage {covered}/{tested}"
        );
    }

    #[test]
    fn duplicate_points_merged() {
        let store = PointStore::from_rows(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
            2,
        );
        let tri = triangulate(&store, 11).unwrap();
        // Id 3 duplicates id 1 and must not appear.
        assert!(tri
            .simplices
            .iter()
            .all(|s| !s.vertices().contains(&3)));
        assert_eq!(tri.point_count, 5);
        assert_empty_circumspheres(&tri, &store, 11);
    }

    #[test]
    fn cospherical_grid_handled() {
        // A 4x4 grid: maximal cocircularity; perturbation must break ties
        // and still produce a watertight triangulation. The triangle count
        // follows Euler's relation 2n - 2 - h, where the perturbed hull keeps
        // the 4 corners and may dent any of the 8 edge midpoints inward.
        let mut rows = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                rows.push([i as f64, j as f64]);
            }
        }
        let store = PointStore::from_rows(&rows, 2);
        let tri = triangulate(&store, 17).unwrap();
        assert!(
            (18..=26).contains(&tri.simplices.len()),
            "unexpected triangle count {}",
            tri.simplices.len()
        );
        for (_, count) in tri.facet_incidence() {
            assert!(count <= 2);
        }
        assert_empty_circumspheres(&tri, &store, 17);
    }

    #[test]
    fn not_enough_points() {
        let store = PointStore::from_rows(&[[0.0, 0.0], [1.0, 1.0]], 2);
        assert!(matches!(
            triangulate(&store, 0),
            Err(DelaunayError::NotEnoughPoints { .. })
        ));
    }

    #[test]
    fn degenerate_cloud_rejected() {
        // All points identical: no perturbation-visible spread at all.
        let store = PointStore::from_rows(&[[1.0, 2.0]; 5], 2);
        assert!(matches!(
            triangulate(&store, 0),
            Err(DelaunayError::NotEnoughPoints { .. }) | Err(DelaunayError::DegenerateCloud { .. })
        ));
    }

    #[test]
    fn dimension_cap() {
        let store = random_store(20, 11, 1);
        assert!(matches!(
            triangulate(&store, 0),
            Err(DelaunayError::DimensionTooHigh { dim: 11 })
        ));
    }

    #[test]
    fn circumsphere_triangle_examples() {
        let store = PointStore::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 2);
        let s = Simplex::new(vec![0, 1, 2]);
        assert!(circumsphere_contains(&s, &store, &[0.4, 0.4]).unwrap());
        assert!(!circumsphere_contains(&s, &store, &[2.0, 2.0]).unwrap());
    }

    #[test]
    fn circumsphere_degenerate_rejected() {
        let store = PointStore::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], 2);
        let s = Simplex::new(vec![0, 1, 2]);
        assert!(matches!(
            circumsphere_contains(&s, &store, &[0.0, 1.0]),
            Err(DelaunayError::DegenerateSimplex)
        ));
    }

    #[test]
    fn circumsphere_matches_circumcenter_oracle() {
        let mut rng = seeding::rng(23, 0);
        let mut checked = 0;
        while checked < 200 {
            let store = random_store(4, 3, rng.gen());
            let s = Simplex::new(vec![0, 1, 2, 3]);
            let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let got = match circumsphere_contains(&s, &store, &p) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let (center, radius) = circumcenter(&s, &store);
            let d = crate::geometry::euclidean(&center, &p);
            if ((d - radius) / radius).abs() < 1e-9 {
                continue; // too close to the sphere to compare reliably
            }
            assert_eq!(got, d < radius, "d={d} R={radius}");
            checked += 1;
        }
    }

    #[test]
    fn perturbation_is_tiny_and_deterministic() {
        let store = random_store(10, 3, 3);
        let a = perturbed_coords(&store, 4);
        let b = perturbed_coords(&store, 4);
        assert_eq!(a, b);
        for (orig, pert) in store.iter().zip(a.iter()) {
            for (x, y) in orig.iter().zip(pert) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
                assert_ne!(x, y); // jitter actually applied
            }
        }
    }
}
