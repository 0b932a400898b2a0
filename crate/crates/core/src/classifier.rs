//! The classifier: per-class manifolds queried by barycentric containment
//! plus envelope distance, wrapped in a feature-bagging ensemble with a
//! majority vote.
//!
//! A base model owns one fitted [`ClassModel`] per class over one feature
//! subset. Prediction is two-staged: points inside exactly one class envelope
//! take that label; points inside several take the class with the deepest
//! containment (largest minimum barycentric coordinate); points inside none
//! take the class whose envelope is closest. All ties break toward the lower
//! label id so results are total deterministic functions of the input.

use crate::dataset::Dataset;
use crate::geometry::{self, PointStore};
use crate::manifold::{self, ClassModel, ManifoldError, NeighborRule};
use crate::seeding;
use rand::seq::index::sample as index_sample;
use rand::Rng;
use thiserror::Error;

/// Barycentric slack that triggers a full containment rescan when KD-tree
/// candidates all miss narrowly; guards the candidate heuristic against
/// boundary cases.
const NEAR_MISS_TOL: f64 = 1e-3;

/// Candidate facet count for plane-mode envelope distance queries.
const FACET_CANDIDATES: usize = 50;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("classification needs at least 2 classes, got {got}")]
    TooFewClasses { got: usize },
    #[error("class {label:?} has {got} samples but needs at least {needed} for {nf} bagged features")]
    ClassTooSmall { label: String, needed: usize, got: usize, nf: usize },
    #[error("bagged feature count range {min}..={max} is invalid for {total} features")]
    BadBagRange { min: usize, max: usize, total: usize },
    #[error("dataset carries regression targets; fit a regressor instead")]
    NotClassification,
    #[error("query has {got} features, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coverage probability arguments out of range: Na={na}, Nf={nf}, Ne={ne}")]
    BadCoverageArgs { na: usize, nf: usize, ne: usize },
    #[error("class {label:?}: {source}")]
    Fit {
        label: String,
        #[source]
        source: ManifoldError,
    },
}

/// How point-to-envelope distance is measured.
///
/// `Plane` is the exact point-to-hyperplane form; `Point` approximates it by
/// the nearest envelope vertex (cheaper in high dimension); `Auto` picks
/// `Plane` up to 8 bagged dimensions and `Point` above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    Plane,
    Point,
    Auto,
}

impl DistanceMode {
    /// Resolves `Auto` for a concrete bagged dimension.
    pub fn resolve(self, dim: usize) -> DistanceMode {
        match self {
            DistanceMode::Auto => {
                if dim <= 8 {
                    DistanceMode::Plane
                } else {
                    DistanceMode::Point
                }
            }
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::Plane => "plane",
            DistanceMode::Point => "point",
            DistanceMode::Auto => "auto",
        }
    }
}

impl std::str::FromStr for DistanceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plane" => Ok(DistanceMode::Plane),
            "point" => Ok(DistanceMode::Point),
            "auto" => Ok(DistanceMode::Auto),
            other => Err(format!("unknown distance mode {other:?} (use plane|point|auto)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Neighbor count for simplex trimming.
    pub neighbors: usize,
    /// Bagged feature count range, clipped to the dataset's feature count.
    pub bag_min: usize,
    pub bag_max: usize,
    /// Number of base models; `None` picks 1 when a single base already sees
    /// every feature and `4 * Na` otherwise.
    pub bag_count: Option<usize>,
    pub distance_mode: DistanceMode,
    pub neighbor_rule: NeighborRule,
    /// Worker threads for fitting base models.
    pub processes: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            neighbors: 14,
            bag_min: 4,
            bag_max: 7,
            bag_count: None,
            distance_mode: DistanceMode::Auto,
            neighbor_rule: NeighborRule::Or,
            processes: 6,
        }
    }
}

/// One manifold model per class over one feature subset.
#[derive(Debug)]
pub struct BaseManifoldron {
    /// Sorted feature indices this base projects onto.
    pub feature_mask: Vec<usize>,
    /// Indexed by dense class id.
    pub class_models: Vec<ClassModel>,
    pub distance_mode: DistanceMode,
}

/// Per-query diagnostics from a base model.
#[derive(Debug, Clone)]
pub struct BaseDiagnostics {
    /// Whether the point was inside at least one class envelope.
    pub interior: bool,
    /// Deepest containment per class (`None` when outside that class).
    pub depths: Vec<Option<f64>>,
    /// Envelope distance per class.
    pub distances: Vec<f64>,
}

impl BaseManifoldron {
    pub fn masked_dim(&self) -> usize {
        self.feature_mask.len()
    }

    fn project(&self, p: &[f64]) -> Vec<f64> {
        self.feature_mask.iter().map(|&i| p[i]).collect()
    }

    /// Predicts one full-dimensional point, masking internally.
    pub fn predict(&self, p: &[f64]) -> (usize, BaseDiagnostics) {
        let q = self.project(p);
        let dim = q.len();
        let mode = self.distance_mode.resolve(dim);

        let mut depths: Vec<Option<f64>> = Vec::with_capacity(self.class_models.len());
        for model in &self.class_models {
            depths.push(containment_depth(model, &q, dim));
        }
        let distances: Vec<f64> = self
            .class_models
            .iter()
            .map(|m| point_envelope_distance(&m.envelope, &q, mode).expect("fitted envelope"))
            .collect();

        let interior: Vec<usize> = depths
            .iter()
            .enumerate()
            .filter_map(|(c, d)| d.map(|_| c))
            .collect();
        let label = match interior.len() {
            0 => argmin_label(&distances),
            1 => interior[0],
            // Inside several envelopes: deepest containment, ties low.
            _ => interior
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    depths[a]
                        .unwrap()
                        .total_cmp(&depths[b].unwrap())
                        .then_with(|| b.cmp(&a))
                })
                .unwrap(),
        };
        (label, BaseDiagnostics { interior: !interior.is_empty(), depths, distances })
    }
}

/// Best (largest) minimum barycentric coordinate over simplices containing
/// `q`, or `None` when no retained simplex contains it.
///
/// Candidates come from the simplex-centroid KD tree (`14 * (D'+1)` nearest);
/// if none contains `q` but some candidate misses by less than
/// [`NEAR_MISS_TOL`], the scan falls back to every simplex so the KD shortcut
/// never changes the answer near boundaries.
fn containment_depth(model: &ClassModel, q: &[f64], dim: usize) -> Option<f64> {
    let n = model.complex.simplices.len();
    let k = (14 * (dim + 1)).min(n);
    let candidates = model.simplex_tree.knn(q, k).expect("fitted tree");
    let mut best: Option<f64> = None;
    let mut near_miss = false;
    for (sid, _) in &candidates {
        let s = &model.complex.simplices[*sid as usize];
        if let Ok(Some(bc)) = geometry::barycentric_coords(s, &model.points, q) {
            let min = bc.min_coord();
            if min >= -geometry::CONTAINMENT_TOL {
                best = Some(best.map_or(min, |b: f64| b.max(min)));
            } else if min >= -NEAR_MISS_TOL {
                near_miss = true;
            }
        }
    }
    if best.is_none() && near_miss && k < n {
        for s in &model.complex.simplices {
            if let Ok(Some(bc)) = geometry::barycentric_coords(s, &model.points, q) {
                let min = bc.min_coord();
                if min >= -geometry::CONTAINMENT_TOL {
                    best = Some(best.map_or(min, |b: f64| b.max(min)));
                }
            }
        }
    }
    best
}

/// Distance from `q` to an envelope.
///
/// Plane mode takes the minimum point-to-hyperplane distance; candidates are
/// the [`FACET_CANDIDATES`] nearest facet centroids, with a full scan whenever
/// the best candidate distance exceeds the furthest candidate centroid
/// distance (an unseen facet could then be closer). Point mode is the exact
/// nearest envelope vertex.
pub fn point_envelope_distance(
    env: &manifold::Envelope,
    q: &[f64],
    mode: DistanceMode,
) -> Result<f64, ClassifierError> {
    let mode = mode.resolve(q.len());
    match mode {
        DistanceMode::Point => {
            let (_, d) = env.vertex_tree.nearest(q).expect("non-empty envelope");
            Ok(d)
        }
        DistanceMode::Plane => {
            let nf = env.facets.len();
            let k = FACET_CANDIDATES.min(nf);
            let candidates = env.centroid_tree.knn(q, k).expect("non-empty envelope");
            let horizon = candidates.last().expect("k >= 1").1;
            let mut best = f64::INFINITY;
            for (fid, _) in &candidates {
                if let Some(h) = &env.facets[*fid as usize].plane {
                    best = best.min(h.signed_eval(q).abs());
                }
            }
            if best > horizon && k < nf {
                for f in &env.facets {
                    if let Some(h) = &f.plane {
                        best = best.min(h.signed_eval(q).abs());
                    }
                }
            }
            if best.is_finite() {
                Ok(best)
            } else {
                // Every facet was degenerate (possible only for pathological
                // data); fall back to the vertex distance.
                point_envelope_distance(env, q, DistanceMode::Point)
            }
        }
        DistanceMode::Auto => unreachable!("resolved above"),
    }
}

fn argmin_label(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Feature-bagging ensemble: majority vote over base models.
#[derive(Debug)]
pub struct ManifoldronEnsemble {
    pub bases: Vec<BaseManifoldron>,
    /// Total feature count the ensemble was fitted on.
    pub n_features: usize,
    pub label_names: Vec<String>,
    pub config: FitConfig,
    pub seed: u64,
}

impl ManifoldronEnsemble {
    /// Majority vote over the base models; ties break to the lower label id.
    /// Invariant under base-model order.
    pub fn predict(&self, p: &[f64]) -> Result<usize, ClassifierError> {
        if p.len() != self.n_features {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.n_features,
                got: p.len(),
            });
        }
        let mut votes = vec![0usize; self.label_names.len()];
        for base in &self.bases {
            votes[base.predict(p).0] += 1;
        }
        let mut best = 0;
        for (label, &count) in votes.iter().enumerate().skip(1) {
            if count > votes[best] {
                best = label;
            }
        }
        Ok(best)
    }

    /// Ensemble prediction with per-base diagnostics for the winning label.
    pub fn predict_with_interior(&self, p: &[f64]) -> Result<(usize, bool), ClassifierError> {
        if p.len() != self.n_features {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.n_features,
                got: p.len(),
            });
        }
        let mut votes = vec![0usize; self.label_names.len()];
        let mut interior_votes = vec![false; self.label_names.len()];
        for base in &self.bases {
            let (label, diag) = base.predict(p);
            votes[label] += 1;
            if diag.depths[label].is_some() {
                interior_votes[label] = true;
            }
        }
        let mut best = 0;
        for (label, &count) in votes.iter().enumerate().skip(1) {
            if count > votes[best] {
                best = label;
            }
        }
        Ok((best, interior_votes[best]))
    }

    pub fn predict_batch(&self, points: &PointStore) -> Result<Vec<usize>, ClassifierError> {
        points.iter().map(|p| self.predict(p)).collect()
    }
}

/// Probability that every feature is sampled by at least one of `ne` bagged
/// masks of size `nf` out of `na`: `1 - ((na - nf)/na)^ne`.
pub fn feature_coverage_probability(
    na: usize,
    nf: usize,
    ne: usize,
) -> Result<f64, ClassifierError> {
    if nf == 0 || nf > na || ne == 0 {
        return Err(ClassifierError::BadCoverageArgs { na, nf, ne });
    }
    let miss = (na - nf) as f64 / na as f64;
    Ok(1.0 - miss.powi(ne as i32))
}

/// Fits the feature-bagging ensemble: `Ne` base models, each on a seeded
/// feature subset of size drawn from the clipped `bag_min..=bag_max` range,
/// each class triangulated, trimmed, and enveloped independently.
///
/// Base models are fitted on a worker pool of `config.processes` threads;
/// seeds are preassigned so the result is independent of scheduling.
pub fn fit(
    dataset: &Dataset,
    config: &FitConfig,
    seed: u64,
) -> Result<ManifoldronEnsemble, ClassifierError> {
    if dataset.labels().is_none() {
        return Err(ClassifierError::NotClassification);
    }
    let n_classes = dataset.n_classes();
    if n_classes < 2 {
        return Err(ClassifierError::TooFewClasses { got: n_classes });
    }
    let na = dataset.n_features();
    if config.bag_min == 0 || config.bag_min > config.bag_max {
        return Err(ClassifierError::BadBagRange {
            min: config.bag_min,
            max: config.bag_max,
            total: na,
        });
    }
    let bag_min = config.bag_min.min(na);
    let bag_max = config.bag_max.min(na);
    let ne = config.bag_count.unwrap_or(if bag_min == na { 1 } else { 4 * na });

    // Draw every mask up front so fitting order cannot affect the streams.
    let mut masks = Vec::with_capacity(ne);
    for b in 0..ne {
        let mut rng = seeding::rng(seed, 0xba60_0000 + b as u64);
        let nf = rng.gen_range(bag_min..=bag_max);
        let mut mask: Vec<usize> = index_sample(&mut rng, na, nf).into_vec();
        mask.sort_unstable();
        masks.push(mask);
    }

    let class_rows = dataset.class_indices();
    for (label, rows) in class_rows.iter().enumerate() {
        let needed = bag_max + 1;
        if rows.len() < needed {
            return Err(ClassifierError::ClassTooSmall {
                label: dataset.label_names[label].clone(),
                needed,
                got: rows.len(),
                nf: bag_max,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.processes.max(1))
        .build()
        .expect("worker pool");
    let results: Vec<Result<BaseManifoldron, ClassifierError>> = pool.install(|| {
        use rayon::prelude::*;
        masks
            .par_iter()
            .enumerate()
            .map(|(b, mask)| {
                fit_base(
                    dataset,
                    &class_rows,
                    mask,
                    config,
                    seeding::derive(seed, 0xf17_0000 + b as u64),
                )
            })
            .collect()
    });
    let mut bases = Vec::with_capacity(ne);
    for r in results {
        bases.push(r?);
    }

    Ok(ManifoldronEnsemble {
        bases,
        n_features: na,
        label_names: dataset.label_names.clone(),
        config: config.clone(),
        seed,
    })
}

fn fit_base(
    dataset: &Dataset,
    class_rows: &[Vec<usize>],
    mask: &[usize],
    config: &FitConfig,
    base_seed: u64,
) -> Result<BaseManifoldron, ClassifierError> {
    let mut class_models = Vec::with_capacity(class_rows.len());
    for (label, rows) in class_rows.iter().enumerate() {
        let mut points = PointStore::with_capacity(mask.len(), rows.len());
        let mut buf = vec![0.0; mask.len()];
        for &r in rows {
            let full = dataset.features.point(r);
            for (b, &i) in buf.iter_mut().zip(mask) {
                *b = full[i];
            }
            points.push(&buf);
        }
        let class_seed = seeding::derive(base_seed, label as u64);
        let model = manifold::fit_class_manifold(
            &points,
            config.neighbors,
            class_seed,
            config.neighbor_rule,
        )
        .map_err(|source| ClassifierError::Fit {
            label: dataset.label_names[label].clone(),
            source,
        })?;
        class_models.push(model);
    }
    Ok(BaseManifoldron {
        feature_mask: mask.to_vec(),
        class_models,
        distance_mode: config.distance_mode,
    })
}
