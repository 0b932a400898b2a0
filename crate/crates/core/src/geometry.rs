//! Simplex-level linear algebra: barycentric coordinates, containment tests,
//! facet hyperplanes, and point-plane distances.
//!
//! Everything here is a pure function over immutable inputs. Degenerate
//! configurations (rank-deficient vertex matrices, facets that do not span a
//! hyperplane) are reported as `None` rather than silently perturbed; callers
//! that want perturbation do it upstream on the data itself.

use nalgebra::DMatrix;
use thiserror::Error;

/// Default tolerance on barycentric coordinates for containment: a point is
/// inside when every coordinate is `>= -CONTAINMENT_TOL`, so exact boundary
/// points are accepted deterministically.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Relative tolerance below which a pivot (or singular value) counts as zero
/// when deciding that a vertex configuration is degenerate.
pub const DEGENERACY_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected {expected} vertices, got {got}")]
    VertexCount { expected: usize, got: usize },
    #[error("non-finite coordinate encountered")]
    NonFinite,
}

/// Row-major store of `n` points in `R^dim`, shared by simplices via indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStore {
    coords: Vec<f64>,
    dim: usize,
}

impl PointStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "point store dimension must be at least 1");
        Self { coords: Vec::new(), dim }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        assert!(dim >= 1);
        Self { coords: Vec::with_capacity(dim * n), dim }
    }

    /// Builds a store from a flat row-major coordinate buffer.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Self {
        assert!(dim >= 1 && coords.len() % dim == 0);
        Self { coords, dim }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Self {
        let mut store = Self::with_capacity(dim, rows.len());
        for r in rows {
            store.push(r.as_ref());
        }
        store
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        debug_assert!(p.iter().all(|x| x.is_finite()));
        self.coords.extend_from_slice(p);
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Per-axis `(min, max)` over all points; `None` when empty.
    pub fn axis_ranges(&self) -> Option<Vec<(f64, f64)>> {
        if self.is_empty() {
            return None;
        }
        let mut ranges: Vec<(f64, f64)> =
            self.point(0).iter().map(|&x| (x, x)).collect();
        for p in self.iter().skip(1) {
            for (r, &x) in ranges.iter_mut().zip(p) {
                r.0 = r.0.min(x);
                r.1 = r.1.max(x);
            }
        }
        Some(ranges)
    }
}

/// A D-simplex: `D+1` distinct vertex indices into a shared [`PointStore`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    vertices: Vec<u32>,
}

impl Simplex {
    /// Vertices are stored sorted so equal simplices compare and hash equal
    /// regardless of construction order.
    pub fn new(mut vertices: Vec<u32>) -> Self {
        vertices.sort_unstable();
        debug_assert!(vertices.windows(2).all(|w| w[0] != w[1]), "duplicate vertex id");
        Self { vertices }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    #[inline]
    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    /// All `D+1` facets: the D-subsets of the vertex set, each sorted
    /// ascending so facets hash canonically across neighboring simplices.
    pub fn facets(&self) -> Vec<Vec<u32>> {
        (0..self.vertices.len())
            .map(|skip| {
                self.vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect()
    }

    pub fn centroid(&self, store: &PointStore) -> Vec<f64> {
        let mut c = vec![0.0; store.dim()];
        for &v in &self.vertices {
            for (ci, xi) in c.iter_mut().zip(store.point(v as usize)) {
                *ci += xi;
            }
        }
        let n = self.vertices.len() as f64;
        c.iter_mut().for_each(|x| *x /= n);
        c
    }
}

/// Barycentric coordinates of a point with respect to one simplex;
/// the entries sum to 1 and are all non-negative iff the point is inside.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricCoords {
    pub xi: Vec<f64>,
}

impl BarycentricCoords {
    pub fn min_coord(&self) -> f64 {
        self.xi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.xi.iter().sum()
    }
}

/// Affine hyperplane `w . x + b = 0` with `||w|| = 1`. The sign is
/// canonicalized (first nonzero component of `w` positive) so serialized
/// models are byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    fn canonicalize(mut normal: Vec<f64>, mut offset: f64) -> Self {
        if let Some(first) = normal.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                normal.iter_mut().for_each(|x| *x = -*x);
                offset = -offset;
            }
        }
        Self { normal, offset }
    }

    /// Signed evaluation `w . p + b`; its absolute value is the distance.
    #[inline]
    pub fn signed_eval(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.normal.len());
        self.normal.iter().zip(p).map(|(w, x)| w * x).sum::<f64>() + self.offset
    }
}

/// Solves `sum xi_d v_d = p, sum xi_d = 1` for the barycentric coordinates of
/// `p` in `simplex`. Returns `None` when the vertex matrix is rank-deficient
/// at relative tolerance [`DEGENERACY_REL_TOL`].
pub fn barycentric_coords(
    simplex: &Simplex,
    store: &PointStore,
    p: &[f64],
) -> Result<Option<BarycentricCoords>, GeometryError> {
    let dim = store.dim();
    if p.len() != dim {
        return Err(GeometryError::DimensionMismatch { expected: dim, got: p.len() });
    }
    if simplex.vertices().len() != dim + 1 {
        return Err(GeometryError::VertexCount {
            expected: dim + 1,
            got: simplex.vertices().len(),
        });
    }

    // Columns: vertices, augmented with a row of ones for the affine constraint.
    let n = dim + 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (col, &v) in simplex.vertices().iter().enumerate() {
        let vp = store.point(v as usize);
        for row in 0..dim {
            a[(row, col)] = vp[row];
        }
        a[(dim, col)] = 1.0;
    }
    let mut rhs = DMatrix::<f64>::zeros(n, 1);
    for row in 0..dim {
        rhs[(row, 0)] = p[row];
    }
    rhs[(dim, 0)] = 1.0;

    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let lu = a.full_piv_lu();
    // Full pivoting puts the largest remaining entry on each pivot; a small
    // trailing pivot therefore certifies rank deficiency.
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if min_pivot <= DEGENERACY_REL_TOL * scale {
        return Ok(None);
    }
    let sol = lu
        .solve(&rhs)
        .expect("non-degenerate pivot implies solvable system");
    Ok(Some(BarycentricCoords { xi: sol.column(0).iter().copied().collect() }))
}

/// True iff every barycentric coordinate of `p` is `>= -tol`.
/// Degenerate simplices contain nothing.
pub fn contains(
    simplex: &Simplex,
    store: &PointStore,
    p: &[f64],
    tol: f64,
) -> Result<bool, GeometryError> {
    Ok(match barycentric_coords(simplex, store, p)? {
        Some(bc) => bc.min_coord() >= -tol,
        None => false,
    })
}

/// Hyperplane through `D` points in `R^D`, unit normal, sign canonicalized.
/// Returns `None` when the vertices do not span a `(D-1)`-flat.
pub fn facet_hyperplane(facet_vertices: &[&[f64]]) -> Result<Option<Hyperplane>, GeometryError> {
    let d = match facet_vertices.first() {
        Some(v) => v.len(),
        None => return Err(GeometryError::VertexCount { expected: 1, got: 0 }),
    };
    if facet_vertices.len() != d {
        return Err(GeometryError::VertexCount { expected: d, got: facet_vertices.len() });
    }
    if facet_vertices.iter().any(|v| v.len() != d) {
        return Err(GeometryError::DimensionMismatch { expected: d, got: 0 });
    }

    if d == 1 {
        // A 0-flat in R^1: the plane is the point itself.
        return Ok(Some(Hyperplane::canonicalize(vec![1.0], -facet_vertices[0][0])));
    }

    // Null space of the edge-vector matrix, padded square so the full set of
    // right singular vectors is available.
    let mut edges = DMatrix::<f64>::zeros(d, d);
    for (row, v) in facet_vertices.iter().skip(1).enumerate() {
        for col in 0..d {
            edges[(row, col)] = v[col] - facet_vertices[0][col];
        }
    }
    let svd = edges.svd(false, true);
    let sv = &svd.singular_values;
    // Genuine singular values occupy the first d-1 slots (descending); the
    // padding row contributes the trailing ~0.
    if sv[d - 2] <= DEGENERACY_REL_TOL * sv[0].max(f64::MIN_POSITIVE) || sv[0] == 0.0 {
        return Ok(None);
    }
    let v_t = svd.v_t.expect("v_t requested");
    let normal: Vec<f64> = v_t.row(d - 1).iter().copied().collect();
    let norm = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
    let normal: Vec<f64> = normal.iter().map(|x| x / norm).collect();
    // Offset from the vertex mean for an even residual across vertices.
    let mean_dot = facet_vertices
        .iter()
        .map(|v| normal.iter().zip(*v).map(|(w, x)| w * x).sum::<f64>())
        .sum::<f64>()
        / d as f64;
    Ok(Some(Hyperplane::canonicalize(normal, -mean_dot)))
}

/// Distance from `p` to the hyperplane: `|w . p + b|` with `w` unit norm.
pub fn point_plane_distance(h: &Hyperplane, p: &[f64]) -> Result<f64, GeometryError> {
    if p.len() != h.normal.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: h.normal.len(),
            got: p.len(),
        });
    }
    Ok(h.signed_eval(p).abs())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
