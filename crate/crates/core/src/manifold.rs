//! Per-class manifold construction: jitter rank-deficient clouds, triangulate,
//! trim simplices whose vertices are not mutual neighbors, and extract the
//! boundary envelope.
//!
//! The trimming rule is the heart of the model: a Delaunay triangulation of a
//! class covers the convex hull, which usually overshoots the manifold the
//! class actually occupies. Deleting every simplex that connects non-neighbors
//! leaves a complex shaped like the data, and the facets belonging to exactly
//! one retained simplex form the decision surface.

use crate::delaunay::{self, DelaunayError, Triangulation};
use crate::geometry::{self, GeometryError, Hyperplane, PointStore, Simplex};
use crate::neighbors::{KdTree, NeighborsError};
use crate::seeding;
use rand::Rng;
use std::collections::HashMap;
use thiserror::Error;

/// Relative rank tolerance for deciding that a class cloud is degenerate.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Relative magnitude of the corrective jitter for degenerate clouds.
pub const JITTER_SCALE: f64 = 1e-8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManifoldError {
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error(transparent)]
    Neighbors(#[from] NeighborsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("an empty simplicial complex has no envelope")]
    EmptyComplex,
    #[error("trimming with k = {k} left no simplices; increase the neighbor count")]
    EmptyManifold { k: usize },
}

/// How two vertices count as neighbors during trimming.
///
/// `Or` keeps a pair when either point lists the other among its k nearest;
/// it is the least destructive reading and the default. `And` requires both
/// directions and trims much more aggressively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborRule {
    Or,
    And,
}

impl Default for NeighborRule {
    fn default() -> Self {
        NeighborRule::Or
    }
}

/// The retained subset of a triangulation for one class manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialComplex {
    pub simplices: Vec<Simplex>,
    pub dim: usize,
    pub point_count: usize,
}

impl SimplicialComplex {
    /// Facet -> number of incident retained simplices (1 = boundary, 2 = interior).
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

/// One boundary facet with its precomputed hyperplane and centroid.
#[derive(Debug, Clone)]
pub struct EnvelopeFacet {
    pub vertices: Vec<u32>,
    /// `None` when the facet vertices do not span a hyperplane (possible for
    /// sliver simplices on degenerate data); such facets still participate in
    /// point-mode distances through their vertices.
    pub plane: Option<Hyperplane>,
    pub centroid: Vec<f64>,
}

/// The boundary of a retained complex: all facets incident to exactly one
/// simplex, plus KD-trees for fast distance queries.
#[derive(Debug)]
pub struct Envelope {
    pub facets: Vec<EnvelopeFacet>,
    /// Sorted ids of every vertex on the envelope.
    pub vertex_ids: Vec<u32>,
    pub centroid_tree: KdTree,
    /// Tree over the envelope vertex coordinates; ids index `vertex_ids`.
    pub vertex_tree: KdTree,
}

/// Everything fitted for one class: jittered points, retained complex,
/// envelope, and a centroid tree over retained simplices for containment
/// candidate lookups.
#[derive(Debug)]
pub struct ClassModel {
    pub points: PointStore,
    pub complex: SimplicialComplex,
    pub envelope: Envelope,
    pub simplex_centroids: PointStore,
    pub simplex_tree: KdTree,
}

/// Adds seeded uniform noise when the centered point matrix is rank-deficient
/// (relative tolerance [`RANK_REL_TOL`]); full-rank clouds pass through
/// unchanged. Noise magnitude is [`JITTER_SCALE`] of each feature's range,
/// or absolute for constant features.
pub fn jitter_if_degenerate(points: &PointStore, seed: u64) -> PointStore {
    if points.len() < 2 || affine_rank(points) >= points.dim() {
        return points.clone();
    }
    let ranges = points.axis_ranges().expect("non-empty");
    let mut rng = seeding::rng(seed, 0x6a69_7474);
    let mut out = PointStore::with_capacity(points.dim(), points.len());
    let mut buf = vec![0.0; points.dim()];
    for p in points.iter() {
        for ((b, &x), (lo, hi)) in buf.iter_mut().zip(p).zip(&ranges) {
            let span = hi - lo;
            let scale = if span > 0.0 { JITTER_SCALE * span } else { JITTER_SCALE };
            *b = x + rng.gen_range(-1.0..1.0) * scale;
        }
        out.push(&buf);
    }
    out
}

/// Rank of the centered point matrix at [`RANK_REL_TOL`], from the singular
/// values of the centered matrix itself (a Gram-matrix shortcut would square
/// the conditioning and miss perturbations near sqrt(machine epsilon)).
pub fn affine_rank(points: &PointStore) -> usize {
    let d = points.dim();
    let n = points.len();
    if n == 0 {
        return 0;
    }
    let mut mean = vec![0.0; d];
    for p in points.iter() {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = nalgebra::DMatrix::<f64>::from_fn(n, d, |r, c| points.point(r)[c] - mean[c]);
    let sv = centered.singular_values();
    let max = sv.iter().fold(0.0f64, |m, &x| m.max(x));
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > RANK_REL_TOL * max).count()
}

/// Keeps exactly the simplices whose vertex pairs are all neighbors under
/// `rule` with `k` neighbors per point (the query point itself excluded).
pub fn trim(
    tri: &Triangulation,
    tree: &KdTree,
    k: usize,
    rule: NeighborRule,
) -> Result<SimplicialComplex, ManifoldError> {
    if k >= tree.len() {
        return Err(NeighborsError::BadK { k, n: tree.len() }.into());
    }

    // Neighbor lists for every vertex that occurs in the triangulation.
    let mut vertex_ids: Vec<u32> = tri
        .simplices
        .iter()
        .flat_map(|s| s.vertices().iter().copied())
        .collect();
    vertex_ids.sort_unstable();
    vertex_ids.dedup();

    let mut neighbor_lists: HashMap<u32, Vec<u32>> = HashMap::with_capacity(vertex_ids.len());
    for &v in &vertex_ids {
        // Query k+1 and drop the point itself so k counts true neighbors.
        let hits = tree.knn(tree.point(v), k + 1)?;
        let mut ids: Vec<u32> = hits.into_iter().map(|(id, _)| id).filter(|&id| id != v).collect();
        ids.truncate(k);
        ids.sort_unstable();
        neighbor_lists.insert(v, ids);
    }
    let is_neighbor = |u: u32, v: u32| -> bool {
        let u_in_v = neighbor_lists[&v].binary_search(&u).is_ok();
        let v_in_u = neighbor_lists[&u].binary_search(&v).is_ok();
        match rule {
            NeighborRule::Or => u_in_v || v_in_u,
            NeighborRule::And => u_in_v && v_in_u,
        }
    };

    let simplices: Vec<Simplex> = tri
        .simplices
        .iter()
        .filter(|s| {
            let vs = s.vertices();
            vs.iter()
                .enumerate()
                .all(|(i, &u)| vs[i + 1..].iter().all(|&v| is_neighbor(u, v)))
        })
        .cloned()
        .collect();
    Ok(SimplicialComplex { simplices, dim: tri.dim, point_count: tri.point_count })
}

/// Extracts the boundary envelope of a retained complex: all facets with
/// incidence count 1, paired with unit hyperplanes and centroids, plus
/// KD-trees over facet centroids and envelope vertices.
pub fn envelope(complex: &SimplicialComplex, store: &PointStore) -> Result<Envelope, ManifoldError> {
    if complex.simplices.is_empty() {
        return Err(ManifoldError::EmptyComplex);
    }
    let incidence = complex.facet_incidence();
    let mut boundary: Vec<Vec<u32>> = incidence
        .into_iter()
        .filter(|(_, c)| *c == 1)
        .map(|(f, _)| f)
        .collect();
    boundary.sort_unstable();

    let dim = store.dim();
    let mut facets = Vec::with_capacity(boundary.len());
    let mut centroids = PointStore::with_capacity(dim, boundary.len());
    for verts in boundary {
        let coords: Vec<&[f64]> = verts.iter().map(|&v| store.point(v as usize)).collect();
        let plane = geometry::facet_hyperplane(&coords)?;
        let mut centroid = vec![0.0; dim];
        for c in &coords {
            for (ci, &x) in centroid.iter_mut().zip(*c) {
                *ci += x;
            }
        }
        centroid.iter_mut().for_each(|x| *x /= coords.len() as f64);
        centroids.push(&centroid);
        facets.push(EnvelopeFacet { vertices: verts, plane, centroid });
    }

    let mut vertex_ids: Vec<u32> = facets
        .iter()
        .flat_map(|f| f.vertices.iter().copied())
        .collect();
    vertex_ids.sort_unstable();
    vertex_ids.dedup();
    let mut vertex_coords = PointStore::with_capacity(dim, vertex_ids.len());
    for &v in &vertex_ids {
        vertex_coords.push(store.point(v as usize));
    }

    Ok(Envelope {
        centroid_tree: KdTree::build(&centroids)?,
        vertex_tree: KdTree::build(&vertex_coords)?,
        facets,
        vertex_ids,
    })
}

/// Full per-class pipeline: jitter if degenerate, triangulate, trim, extract
/// the envelope, and precompute simplex centroids for containment lookups.
/// Deterministic for a fixed seed.
pub fn fit_class_manifold(
    points: &PointStore,
    k: usize,
    seed: u64,
    rule: NeighborRule,
) -> Result<ClassModel, ManifoldError> {
    let points = jitter_if_degenerate(points, seed);
    let tri = delaunay::triangulate(&points, seed)?;
    let tree = KdTree::build(&points)?;
    let complex = trim(&tri, &tree, k, rule)?;
    if complex.simplices.is_empty() {
        return Err(ManifoldError::EmptyManifold { k });
    }
    ClassModel::assemble(points, complex)
}

impl ClassModel {
    /// Rebuilds the derived structures (envelope, centroid trees) from the
    /// stored points and retained complex; used after fitting and when
    /// loading a serialized model. Deterministic.
    pub fn assemble(points: PointStore, complex: SimplicialComplex) -> Result<Self, ManifoldError> {
        let env = envelope(&complex, &points)?;
        let mut simplex_centroids =
            PointStore::with_capacity(points.dim(), complex.simplices.len());
        for s in &complex.simplices {
            simplex_centroids.push(&s.centroid(&points));
        }
        let simplex_tree = KdTree::build(&simplex_centroids)?;
        Ok(ClassModel { points, complex, envelope: env, simplex_centroids, simplex_tree })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ring(n: usize, r_in: f64, r_out: f64, seed: u64) -> PointStore {
        let mut rng = seeding::rng(seed, 1);
        let mut store = PointStore::with_capacity(2, n);
        for i in 0..n {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let r = rng.gen_range(r_in..r_out);
            store.push(&[r * theta.cos(), r * theta.sin()]);
        }
        store
    }

    #[test]
    fn jitter_identity_on_full_rank() {
        let mut rng = seeding::rng(2, 2);
        let rows: Vec<[f64; 3]> = (0..30)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
            .collect();
        let store = PointStore::from_rows(&rows, 3);
        assert_eq!(jitter_if_degenerate(&store, 9), store);
    }

    #[test]
    fn jitter_fixes_collinear_cloud() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, i as f64]).collect();
        let store = PointStore::from_rows(&rows, 2);
        assert_eq!(affine_rank(&store), 1);
        let jittered = jitter_if_degenerate(&store, 5);
        assert_eq!(affine_rank(&jittered), 2);
        let range = 19.0;
        for (orig, new) in store.iter().zip(jittered.iter()) {
            for (a, b) in orig.iter().zip(new) {
                assert!((a - b).abs() <= JITTER_SCALE * range);
            }
        }
    }

    #[test]
    fn jitter_fixes_constant_feature() {
        let rows: Vec<[f64; 2]> = (0..15).map(|i| [i as f64, 4.0]).collect();
        let store = PointStore::from_rows(&rows, 2);
        let jittered = jitter_if_degenerate(&store, 5);
        assert_eq!(affine_rank(&jittered), 2);
        for (orig, new) in store.iter().zip(jittered.iter()) {
            assert!((orig[1] - new[1]).abs() <= JITTER_SCALE);
        }
    }

    #[test]
    fn trim_disconnects_separated_clusters() {
        let mut rng = seeding::rng(4, 4);
        let mut store = PointStore::with_capacity(2, 40);
        for _ in 0..20 {
            store.push(&[rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]);
        }
        for _ in 0..20 {
            store.push(&[10.0 + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]);
        }
        let tri = delaunay::triangulate(&store, 1).unwrap();
        let tree = KdTree::build(&store).unwrap();
        let complex = trim(&tri, &tree, 5, NeighborRule::Or).unwrap();
        assert!(!complex.simplices.is_empty());
        for s in &complex.simplices {
            let sides: Vec<bool> = s
                .vertices()
                .iter()
                .map(|&v| store.point(v as usize)[0] > 5.0)
                .collect();
            assert!(
                sides.iter().all(|&x| x) || sides.iter().all(|&x| !x),
                "simplex {:?} spans both clusters",
                s.vertices()
            );
        }
    }

    #[test]
    fn trim_with_max_k_keeps_everything() {
        let store = ring(24, 0.8, 1.0, 3);
        let tri = delaunay::triangulate(&store, 2).unwrap();
        let tree = KdTree::build(&store).unwrap();
        let complex = trim(&tri, &tree, store.len() - 1, NeighborRule::Or).unwrap();
        assert_eq!(complex.simplices.len(), tri.simplices.len());
    }

    #[test]
    fn trim_tiny_k_leaves_nothing() {
        // k=1 keeps only simplices whose vertices are all mutual single
        // nearest neighbors; on a generic ring that is none.
        let store = ring(40, 0.9, 1.0, 8);
        let tri = delaunay::triangulate(&store, 2).unwrap();
        let tree = KdTree::build(&store).unwrap();
        let complex = trim(&tri, &tree, 1, NeighborRule::And).unwrap();
        assert!(complex.simplices.is_empty());
    }

    #[test]
    fn trim_monotone_in_k() {
        let store = ring(60, 0.7, 1.0, 12);
        let tri = delaunay::triangulate(&store, 2).unwrap();
        let tree = KdTree::build(&store).unwrap();
        let mut prev: Option<Vec<Simplex>> = None;
        for k in [4usize, 8, 14, 30] {
            let complex = trim(&tri, &tree, k, NeighborRule::Or).unwrap();
            if let Some(prev) = &prev {
                for s in prev {
                    assert!(complex.simplices.contains(s), "k sweep lost a simplex");
                }
            }
            prev = Some(complex.simplices);
        }
    }

    #[test]
    fn trim_rejects_oversized_k() {
        let store = ring(10, 0.9, 1.0, 1);
        let tri = delaunay::triangulate(&store, 2).unwrap();
        let tree = KdTree::build(&store).unwrap();
        assert!(trim(&tri, &tree, 10, NeighborRule::Or).is_err());
    }

    #[test]
    fn envelope_of_single_triangle() {
        let store = PointStore::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 2);
        let complex = SimplicialComplex {
            simplices: vec![Simplex::new(vec![0, 1, 2])],
            dim: 2,
            point_count: 3,
        };
        let env = envelope(&complex, &store).unwrap();
        assert_eq!(env.facets.len(), 3);
        assert_eq!(env.vertex_ids, vec![0, 1, 2]);
    }

    #[test]
    fn envelope_excludes_shared_edge() {
        let store =
            PointStore::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], 2);
        let complex = SimplicialComplex {
            simplices: vec![Simplex::new(vec![0, 1, 2]), Simplex::new(vec![1, 2, 3])],
            dim: 2,
            point_count: 4,
        };
        let env = envelope(&complex, &store).unwrap();
        assert_eq!(env.facets.len(), 4);
        assert!(env.facets.iter().all(|f| f.vertices != vec![1, 2]));
    }

    #[test]
    fn envelope_of_empty_complex_rejected() {
        let store = PointStore::from_rows(&[[0.0, 0.0]], 2);
        let complex = SimplicialComplex { simplices: vec![], dim: 2, point_count: 1 };
        assert!(matches!(envelope(&complex, &store), Err(ManifoldError::EmptyComplex)));
    }

    /// Brute-force hull: a facet is on the hull iff every other point lies on
    /// one side of its hyperplane.
    fn brute_hull_facets(store: &PointStore) -> Vec<Vec<u32>> {
        let n = store.len();
        let d = store.dim();
        let mut out = Vec::new();
        let mut subset: Vec<usize> = (0..d).collect();
        loop {
            let refs: Vec<&[f64]> = subset.iter().map(|&i| store.point(i)).collect();
            if let Ok(Some(h)) = geometry::facet_hyperplane(&refs) {
                let mut pos = false;
                let mut neg = false;
                for i in 0..n {
                    if subset.contains(&i) {
                        continue;
                    }
                    let side = h.signed_eval(store.point(i));
                    if side > 1e-9 {
                        pos = true;
                    } else if side < -1e-9 {
                        neg = true;
                    }
                }
                if !(pos && neg) {
                    out.push(subset.iter().map(|&i| i as u32).collect());
                }
            }
            // next combination
            let mut i = d;
            loop {
                if i == 0 {
                    out.sort_unstable();
                    out.dedup();
                    return out;
                }
                i -= 1;
                if subset[i] != i + n - d {
                    subset[i] += 1;
                    for j in i + 1..d {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn untrimmed_envelope_is_convex_hull() {
        for (dim, seed) in [(2usize, 5u64), (3, 6)] {
            let mut rng = seeding::rng(seed, 0);
            let rows: Vec<Vec<f64>> = (0..14)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let store = PointStore::from_rows(&rows, dim);
            let tri = delaunay::triangulate(&store, 3).unwrap();
            let tree = KdTree::build(&store).unwrap();
            let complex = trim(&tri, &tree, store.len() - 1, NeighborRule::Or).unwrap();
            let env = envelope(&complex, &store).unwrap();
            let mut got: Vec<Vec<u32>> = env.facets.iter().map(|f| f.vertices.clone()).collect();
            got.sort_unstable();
            let want = brute_hull_facets(&store);
            assert_eq!(got, want, "dim {dim}");
        }
    }

    #[test]
    fn envelope_planes_contain_their_vertices() {
        let store = ring(80, 0.7, 1.0, 21);
        let model = fit_class_manifold(&store, 14, 7, NeighborRule::Or).unwrap();
        for f in &model.envelope.facets {
            let h = f.plane.as_ref().expect("non-degenerate facet");
            for &v in &f.vertices {
                assert!(h.signed_eval(model.points.point(v as usize)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn ring_envelope_has_two_loops() {
        let store = ring(200, 0.75, 1.0, 33);
        let model = fit_class_manifold(&store, 14, 7, NeighborRule::Or).unwrap();
        // Envelope edges in 2D form closed loops; an annulus has two.
        let mut adjacency: HashMap<u32, Vec<u32>> = HashMap::new();
        for f in &model.envelope.facets {
            adjacency.entry(f.vertices[0]).or_default().push(f.vertices[1]);
            adjacency.entry(f.vertices[1]).or_default().push(f.vertices[0]);
        }
        let mut seen: std::collections::HashSet<u32> = std::collections::HashSet::new();
        let mut loops = 0;
        for &start in adjacency.keys() {
            if seen.contains(&start) {
                continue;
            }
            loops += 1;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                if !seen.insert(v) {
                    continue;
                }
                stack.extend(adjacency[&v].iter().copied());
            }
        }
        assert_eq!(loops, 2, "annulus envelope should be two closed loops");
    }

    #[test]
    fn minimal_input_single_simplex() {
        let store = PointStore::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 2);
        let model = fit_class_manifold(&store, 2, 1, NeighborRule::Or).unwrap();
        assert_eq!(model.complex.simplices.len(), 1);
        assert_eq!(model.envelope.facets.len(), 3);
    }

    #[test]
    fn fit_is_deterministic() {
        let store = ring(100, 0.8, 1.0, 44);
        let a = fit_class_manifold(&store, 14, 5, NeighborRule::Or).unwrap();
        let b = fit_class_manifold(&store, 14, 5, NeighborRule::Or).unwrap();
        assert_eq!(a.complex, b.complex);
        assert_eq!(a.points, b.points);
    }
}
