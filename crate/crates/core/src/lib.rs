//! Non-parametric classification and regression via manifold discovery.
//!
//! The model family implemented here builds, per class, a geometric description
//! of where the training data lives: a Delaunay triangulation of the class
//! point cloud is trimmed down to a simplicial complex whose simplices connect
//! only mutual nearest neighbors, and the boundary facets of that complex form
//! the class *envelope*. Prediction tests whether a query point falls inside a
//! retained simplex (barycentric containment) and otherwise picks the class
//! with the nearest envelope. A feature-bagging ensemble with majority voting
//! keeps triangulation tractable in high dimension. The same machinery, fitted
//! on all training data at once, interpolates real-valued targets through
//! barycentric weights and doubles as a regressor.
//!
//! Crate layout:
//! - [`geometry`]: barycentric coordinates, containment, facet hyperplanes
//! - [`delaunay`]: d-dimensional Bowyer-Watson triangulation
//! - [`neighbors`]: exact KD-tree k-nearest-neighbor queries
//! - [`manifold`]: jitter, trimming, envelope extraction, per-class models
//! - [`classifier`]: base model + feature-bagging ensemble, model files
//! - [`regressor`]: barycentric interpolation over one trimmed complex
//! - [`datagen`]: synthetic 3D tube manifolds, 2D toys, regression samples
//! - [`dataset`]: CSV ingestion and the in-memory dataset type
//! - [`metrics`]: accuracy, macro-F1, evaluation reports
//! - [`evaluate`]: decision grids and multi-run benchmark orchestration

pub mod classifier;
pub mod datagen;
pub mod dataset;
pub mod delaunay;
pub mod evaluate;
pub mod geometry;
pub mod manifold;
pub mod metrics;
pub mod model_io;
pub mod neighbors;
pub mod regressor;
mod seeding;

pub use classifier::{BaseManifoldron, DistanceMode, FitConfig, ManifoldronEnsemble};
pub use dataset::{Dataset, Targets};
pub use geometry::{BarycentricCoords, Hyperplane, PointStore, Simplex};
pub use manifold::{ClassModel, Envelope, NeighborRule, SimplicialComplex};
pub use metrics::EvalReport;
pub use regressor::RegressorModel;
