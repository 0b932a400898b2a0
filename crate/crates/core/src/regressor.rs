//! Regression through barycentric interpolation over one trimmed complex.
//!
//! All training data is triangulated as a single manifold; a query is scored
//! through its barycentric coordinates in one or more simplices:
//! `predict_simplex` interpolates in a single simplex (coordinates may be
//! negative outside it, which extrapolates linearly), `predict_full` averages
//! that interpolation over every retained simplex, and `predict_closest`
//! keeps only the simplex nearest to the query. Targets are never normalized.

use crate::geometry::{self, PointStore, Simplex};
use crate::manifold::{self, ManifoldError, NeighborRule, SimplicialComplex};
use crate::neighbors::KdTree;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressorError {
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error("{got} targets for {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite target at row {row}")]
    NonFiniteTarget { row: usize },
    #[error("degenerate simplex cannot interpolate")]
    DegenerateSimplex,
    #[error("unknown builtin function {name:?} (known: f1..f6)")]
    UnknownFunction { name: String },
}

/// A fitted regression model: the trimmed complex over all training points,
/// their targets, and lookup structures for the closest-simplex rule.
#[derive(Debug)]
pub struct RegressorModel {
    pub points: PointStore,
    pub targets: Vec<f64>,
    pub complex: SimplicialComplex,
    pub simplex_centroids: PointStore,
    /// Tree over all training points, for candidate gathering.
    pub vertex_tree: KdTree,
    /// Point id -> indices of retained simplices containing it.
    pub incidence: Vec<Vec<u32>>,
    pub neighbors: usize,
    pub seed: u64,
}

/// Jitter-triangulate-trim over the whole training set, keeping targets
/// aligned with the (possibly jittered) points.
pub fn fit_regressor(
    points: &PointStore,
    targets: &[f64],
    k: usize,
    seed: u64,
) -> Result<RegressorModel, RegressorError> {
    if targets.len() != points.len() {
        return Err(RegressorError::LengthMismatch {
            expected: points.len(),
            got: targets.len(),
        });
    }
    if let Some(row) = targets.iter().position(|t| !t.is_finite()) {
        return Err(RegressorError::NonFiniteTarget { row });
    }
    let points = manifold::jitter_if_degenerate(points, seed);
    let tri = crate::delaunay::triangulate(&points, seed).map_err(ManifoldError::from)?;
    let tree = KdTree::build(&points).map_err(ManifoldError::from)?;
    let complex = manifold::trim(&tri, &tree, k, NeighborRule::Or)?;
    if complex.simplices.is_empty() {
        return Err(ManifoldError::EmptyManifold { k }.into());
    }
    RegressorModel::assemble(points, targets.to_vec(), complex, k, seed)
}

impl RegressorModel {
    /// Rebuilds the derived lookup structures from points, targets, and the
    /// retained complex; used after fitting and when loading from disk.
    pub fn assemble(
        points: PointStore,
        targets: Vec<f64>,
        complex: SimplicialComplex,
        k: usize,
        seed: u64,
    ) -> Result<Self, RegressorError> {
        let tree = KdTree::build(&points).map_err(ManifoldError::from)?;
        let mut simplex_centroids =
            PointStore::with_capacity(points.dim(), complex.simplices.len());
        let mut incidence = vec![Vec::new(); points.len()];
        for (sid, s) in complex.simplices.iter().enumerate() {
            simplex_centroids.push(&s.centroid(&points));
            for &v in s.vertices() {
                incidence[v as usize].push(sid as u32);
            }
        }
        Ok(RegressorModel {
            targets,
            complex,
            simplex_centroids,
            vertex_tree: tree,
            incidence,
            neighbors: k,
            seed,
            points,
        })
    }

    /// Interpolation (or extrapolation) through one simplex:
    /// `sum_i xi_i * y(v_i)`.
    pub fn predict_simplex(&self, simplex: &Simplex, p: &[f64]) -> Result<f64, RegressorError> {
        let bc = geometry::barycentric_coords(simplex, &self.points, p)
            .map_err(|_| RegressorError::DegenerateSimplex)?
            .ok_or(RegressorError::DegenerateSimplex)?;
        Ok(simplex
            .vertices()
            .iter()
            .zip(&bc.xi)
            .map(|(&v, xi)| xi * self.targets[v as usize])
            .sum())
    }

    /// The literal averaged form: `(1/|S|) * sum_S predict_simplex(S, p)`.
    /// No KD shortcut; meant for tests and small models.
    pub fn predict_full(&self, p: &[f64]) -> Result<f64, RegressorError> {
        let mut sum = 0.0;
        for s in &self.complex.simplices {
            sum += self.predict_simplex(s, p)?;
        }
        Ok(sum / self.complex.simplices.len() as f64)
    }

    /// Prediction through the closest retained simplex only.
    ///
    /// Candidates are the simplices incident to the 14 nearest training
    /// vertices, with a fallback to every simplex when that set comes up
    /// empty (trimming may have dropped all simplices around those vertices).
    /// A candidate that contains `p` is at distance zero and wins outright
    /// (which also makes vertex queries reproduce their targets exactly);
    /// otherwise the smallest query-to-centroid distance decides. Degenerate
    /// candidates are skipped in that order.
    pub fn predict_closest(&self, p: &[f64]) -> Result<f64, RegressorError> {
        let k = 14.min(self.vertex_tree.len());
        let hits = self.vertex_tree.knn(p, k).expect("fitted tree");
        let mut candidates: Vec<u32> = hits
            .iter()
            .flat_map(|(v, _)| self.incidence[*v as usize].iter().copied())
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        if candidates.is_empty() {
            candidates = (0..self.complex.simplices.len() as u32).collect();
        }
        let mut order: Vec<(f64, u32)> = candidates
            .into_iter()
            .map(|sid| {
                (
                    geometry::euclidean(self.simplex_centroids.point(sid as usize), p),
                    sid,
                )
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut fallback: Option<f64> = None;
        for &(_, sid) in &order {
            let s = &self.complex.simplices[sid as usize];
            match geometry::barycentric_coords(s, &self.points, p) {
                Ok(Some(bc)) => {
                    let y = s
                        .vertices()
                        .iter()
                        .zip(&bc.xi)
                        .map(|(&v, xi)| xi * self.targets[v as usize])
                        .sum();
                    if bc.min_coord() >= -geometry::CONTAINMENT_TOL {
                        return Ok(y); // containing simplex: distance zero
                    }
                    if fallback.is_none() {
                        fallback = Some(y); // nearest centroid so far
                    }
                }
                _ => continue,
            }
        }
        fallback.ok_or(RegressorError::DegenerateSimplex)
    }
}

/// Signed volume ratios: weight `i` is the volume of the sub-simplex with
/// `v_i` replaced by `p`, over the simplex volume. Exterior points make the
/// replaced simplex flip orientation, so ratios go negative; the result
/// equals the barycentric coordinates everywhere (Cramer's rule).
pub fn area_ratio_weights(
    simplex: &Simplex,
    store: &PointStore,
    p: &[f64],
) -> Result<Vec<f64>, RegressorError> {
    let d = store.dim();
    assert_eq!(simplex.vertices().len(), d + 1);
    assert_eq!(p.len(), d);
    let verts: Vec<&[f64]> = simplex.vertices().iter().map(|&v| store.point(v as usize)).collect();

    let edge_det = |replace: Option<usize>| -> f64 {
        // Rows: v_i - v_0 for i in 1..=d, with the optional replacement of
        // one vertex by p (replacing v_0 re-bases the rows on p).
        let base: &[f64] = match replace {
            Some(0) => p,
            _ => verts[0],
        };
        let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
        for r in 1..=d {
            let row: &[f64] = match replace {
                Some(i) if i == r => p,
                _ => verts[r],
            };
            for c in 0..d {
                m[(r - 1, c)] = row[c] - base[c];
            }
        }
        m.determinant()
    };

    let total = edge_det(None);
    let scale: f64 = verts
        .iter()
        .flat_map(|v| v.iter().zip(verts[0]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    if total.abs() <= 1e-12 * scale.powi(d as i32).max(f64::MIN_POSITIVE) {
        return Err(RegressorError::DegenerateSimplex);
    }
    Ok((0..=d).map(|i| edge_det(Some(i)) / total).collect())
}

/// The bundled elementary target functions used by the regression sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinFn {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl BuiltinFn {
    pub fn parse(name: &str) -> Result<Self, RegressorError> {
        match name {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            "f5" => Ok(Self::F5),
            "f6" => Ok(Self::F6),
            other => Err(RegressorError::UnknownFunction { name: other.to_string() }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::F3 => "f3",
            Self::F4 => "f4",
            Self::F5 => "f5",
            Self::F6 => "f6",
        }
    }

    /// Input dimension: 2 for f1-f3, 3 for f4-f6.
    pub fn arity(self) -> usize {
        match self {
            Self::F1 | Self::F2 | Self::F3 => 2,
            Self::F4 | Self::F5 | Self::F6 => 3,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Self::F1 => x[0] * x[0] + x[1] * x[1],
            Self::F2 => x[0].sin() + x[1].cos(),
            Self::F3 => (x[0] * x[1]).exp(),
            Self::F4 => x[0] * x[0] + x[1] * x[1] + x[2] * x[2],
            Self::F5 => (x[0] * x[1] * x[2]).exp(),
            Self::F6 => x[0] * x[0] + x[1] * x[1] - x[2] * x[2],
        }
    }

    pub fn all() -> [BuiltinFn; 6] {
        [Self::F1, Self::F2, Self::F3, Self::F4, Self::F5, Self::F6]
    }
}
