//! Decision-grid export and multi-run benchmark orchestration.

use crate::classifier::{self, ClassifierError, FitConfig, ManifoldronEnsemble};
use crate::dataset::Dataset;
use crate::datagen::{self, DatagenError};
use crate::metrics::{self, ConfigEcho, EvalReport, MetricsError, RunReport};
use crate::seeding;
use std::fmt::Write as _;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Split(#[from] DatagenError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("decision grids need a 2-feature model or a slice spec; model has {features} features")]
    NotTwoDimensional { features: usize },
    #[error("slice spec fixes {got} features, model expects {expected}")]
    BadSlice { expected: usize, got: usize },
    #[error("grid resolution must be at least 1x1")]
    BadResolution,
}

/// Axis-aligned query box for decision grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Evaluates a 2D slice of a higher-dimensional model: grid axes `x_feature`
/// and `y_feature`, every other feature pinned to `fixed[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub x_feature: usize,
    pub y_feature: usize,
    /// Full-length feature vector providing the pinned values.
    pub fixed: Vec<f64>,
}

/// Row-major grid of predicted labels with per-cell interior flags.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionGrid {
    pub bounds: GridBounds,
    pub nx: usize,
    pub ny: usize,
    /// `labels[row * nx + col]`, row 0 at `y_min`.
    pub labels: Vec<usize>,
    pub interior: Vec<bool>,
}

impl DecisionGrid {
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        let dx = (self.bounds.x_max - self.bounds.x_min) / self.nx as f64;
        let dy = (self.bounds.y_max - self.bounds.y_min) / self.ny as f64;
        (
            self.bounds.x_min + (col as f64 + 0.5) * dx,
            self.bounds.y_min + (row as f64 + 0.5) * dy,
        )
    }

    /// CSV rows `x,y,label,interior` for external plotting.
    pub fn to_csv(&self, label_names: &[String]) -> String {
        let mut out = String::from("x,y,label,interior\n");
        for row in 0..self.ny {
            for col in 0..self.nx {
                let (x, y) = self.cell_center(col, row);
                let idx = row * self.nx + col;
                let label = &label_names[self.labels[idx]];
                let _ = writeln!(out, "{x},{y},{label},{}", u8::from(self.interior[idx]));
            }
        }
        out
    }

    /// Number of 4-connected regions sharing a label; a sanity measure for
    /// boundary shape tests.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.labels.len()];
        let mut components = 0;
        for start in 0..self.labels.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            while let Some(idx) = stack.pop() {
                if seen[idx] {
                    continue;
                }
                seen[idx] = true;
                let (row, col) = (idx / self.nx, idx % self.nx);
                let mut push = |r: isize, c: isize| {
                    if r >= 0 && c >= 0 && (r as usize) < self.ny && (c as usize) < self.nx {
                        let j = r as usize * self.nx + c as usize;
                        if !seen[j] && self.labels[j] == self.labels[idx] {
                            stack.push(j);
                        }
                    }
                };
                push(row as isize - 1, col as isize);
                push(row as isize + 1, col as isize);
                push(row as isize, col as isize - 1);
                push(row as isize, col as isize + 1);
            }
        }
        components
    }
}

/// Predicts every cell center of an `nx x ny` grid. Models with more than
/// two features need a [`SliceSpec`].
pub fn decision_grid(
    ens: &ManifoldronEnsemble,
    bounds: GridBounds,
    nx: usize,
    ny: usize,
    slice: Option<&SliceSpec>,
) -> Result<DecisionGrid, EvaluateError> {
    if nx == 0 || ny == 0 {
        return Err(EvaluateError::BadResolution);
    }
    let (ix, iy, mut probe) = match slice {
        None => {
            if ens.n_features != 2 {
                return Err(EvaluateError::NotTwoDimensional { features: ens.n_features });
            }
            (0, 1, vec![0.0; 2])
        }
        Some(s) => {
            if s.fixed.len() != ens.n_features {
                return Err(EvaluateError::BadSlice {
                    expected: ens.n_features,
                    got: s.fixed.len(),
                });
            }
            (s.x_feature, s.y_feature, s.fixed.clone())
        }
    };
    let mut labels = Vec::with_capacity(nx * ny);
    let mut interior = Vec::with_capacity(nx * ny);
    let dx = (bounds.x_max - bounds.x_min) / nx as f64;
    let dy = (bounds.y_max - bounds.y_min) / ny as f64;
    for row in 0..ny {
        for col in 0..nx {
            probe[ix] = bounds.x_min + (col as f64 + 0.5) * dx;
            probe[iy] = bounds.y_min + (row as f64 + 0.5) * dy;
            let (label, inside) = ens.predict_with_interior(&probe)?;
            labels.push(label);
            interior.push(inside);
        }
    }
    Ok(DecisionGrid { bounds, nx, ny, labels, interior })
}

/// `n_runs` independent seeded split/fit/eval cycles on one dataset; the
/// report carries per-run metrics, their means, and wall-clock timings.
/// Metrics are bit-reproducible for a fixed master seed.
pub fn benchmark(
    dataset: &Dataset,
    config: &FitConfig,
    n_runs: usize,
    train_fraction: f64,
    master_seed: u64,
) -> Result<EvalReport, EvaluateError> {
    let mut runs = Vec::with_capacity(n_runs);
    for run in 0..n_runs {
        let run_seed = seeding::derive(master_seed, 0xbe4c_0000 + run as u64);
        let (train, test) = datagen::split(dataset, train_fraction, run_seed)?;
        runs.push(eval_run(&train, &test, config, run_seed)?);
    }
    Ok(EvalReport::from_runs(config_echo(config, train_fraction, master_seed), runs))
}

/// Fits on `train`, scores on `test`, and times both stages.
pub fn eval_run(
    train: &Dataset,
    test: &Dataset,
    config: &FitConfig,
    seed: u64,
) -> Result<RunReport, EvaluateError> {
    let t0 = Instant::now();
    let ens = classifier::fit(train, config, seed)?;
    let train_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let pred = ens.predict_batch(&test.features)?;
    let predict_secs = t1.elapsed().as_secs_f64();

    let truth = test.labels().expect("classification data");
    Ok(RunReport {
        seed,
        accuracy: metrics::accuracy(&pred, truth)?,
        macro_f1: metrics::macro_f1(&pred, truth)?,
        per_class: metrics::per_class_metrics(&pred, truth)?,
        train_secs,
        predict_secs,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
    })
}

pub fn config_echo(config: &FitConfig, train_fraction: f64, master_seed: u64) -> ConfigEcho {
    ConfigEcho {
        neighbors: config.neighbors,
        bag_features: (config.bag_min, config.bag_max),
        bag_count: config.bag_count,
        distance_mode: config.distance_mode.as_str().to_string(),
        processes: config.processes,
        train_fraction,
        master_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::geometry::PointStore;

    fn clusters(offset_b: (f64, f64)) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                rows.push(vec![i as f64 * 0.2, j as f64 * 0.2]);
                labels.push(0);
                rows.push(vec![offset_b.0 + i as f64 * 0.2, offset_b.1 + j as f64 * 0.2]);
                labels.push(1);
            }
        }
        Dataset::new_classification(
            PointStore::from_rows(&rows, 2),
            labels,
            vec!["0".into(), "1".into()],
        )
    }

    fn toy_config() -> FitConfig {
        FitConfig {
            bag_min: 2,
            bag_max: 2,
            bag_count: Some(1),
            processes: 2,
            ..FitConfig::default()
        }
    }

    #[test]
    fn single_cell_grid_is_center_prediction() {
        let ds = clusters((8.0, 0.0));
        let ens = classifier::fit(&ds, &toy_config(), 5).unwrap();
        let bounds = GridBounds { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };
        let grid = decision_grid(&ens, bounds, 1, 1, None).unwrap();
        assert_eq!(grid.labels.len(), 1);
        assert_eq!(grid.labels[0], ens.predict(&[0.5, 0.5]).unwrap());
    }

    #[test]
    fn disjoint_clusters_partition_grid_into_two_regions() {
        let ds = clusters((8.0, 0.0));
        let ens = classifier::fit(&ds, &toy_config(), 5).unwrap();
        let bounds = GridBounds { x_min: -1.0, x_max: 9.8, y_min: -1.0, y_max: 1.8 };
        let grid = decision_grid(&ens, bounds, 40, 12, None).unwrap();
        assert_eq!(grid.connected_components(), 2);
        assert!(grid.labels.iter().any(|&l| l == 0));
        assert!(grid.labels.iter().any(|&l| l == 1));
    }

    #[test]
    fn translating_one_cluster_barely_moves_the_others_boundary() {
        // Fit with class 1 at two different offsets; cells around class 0
        // should hardly change.
        let ens_a = classifier::fit(&clusters((8.0, 0.0)), &toy_config(), 5).unwrap();
        let ens_b = classifier::fit(&clusters((8.0, 2.0)), &toy_config(), 5).unwrap();
        let bounds = GridBounds { x_min: -0.6, x_max: 1.4, y_min: -0.6, y_max: 1.4 };
        let ga = decision_grid(&ens_a, bounds, 25, 25, None).unwrap();
        let gb = decision_grid(&ens_b, bounds, 25, 25, None).unwrap();
        let changed = ga
            .labels
            .iter()
            .zip(&gb.labels)
            .filter(|(a, b)| a != b)
            .count();
        assert!(
            (changed as f64) < 0.05 * ga.labels.len() as f64,
            "{changed} of {} cells changed",
            ga.labels.len()
        );
    }

    #[test]
    fn grid_requires_two_features_or_slice() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = crate::seeding::rng(7, 0);
        use rand::Rng;
        for i in 0..40 {
            rows.push(vec![
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            labels.push(i % 2);
        }
        let ds = Dataset::new_classification(
            PointStore::from_rows(&rows, 3),
            labels,
            vec!["0".into(), "1".into()],
        );
        let config = FitConfig {
            bag_min: 3,
            bag_max: 3,
            bag_count: Some(1),
            neighbors: 12,
            processes: 1,
            ..FitConfig::default()
        };
        let ens = classifier::fit(&ds, &config, 2).unwrap();
        let bounds = GridBounds { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
        assert!(matches!(
            decision_grid(&ens, bounds, 4, 4, None),
            Err(EvaluateError::NotTwoDimensional { features: 3 })
        ));
        let slice = SliceSpec { x_feature: 0, y_feature: 1, fixed: vec![0.0, 0.0, 0.25] };
        let grid = decision_grid(&ens, bounds, 4, 4, Some(&slice)).unwrap();
        assert_eq!(grid.labels.len(), 16);
    }

    #[test]
    fn benchmark_reports_runs_and_means() {
        let ds = clusters((6.0, 0.0));
        let report = benchmark(&ds, &toy_config(), 3, 0.7, 42).unwrap();
        assert_eq!(report.runs.len(), 3);
        let mean = report.runs.iter().map(|r| r.accuracy).sum::<f64>() / 3.0;
        assert!((report.mean_accuracy - mean).abs() < 1e-12);
        // Single run: mean equals the run.
        let single = benchmark(&ds, &toy_config(), 1, 0.7, 42).unwrap();
        assert_eq!(single.mean_accuracy, single.runs[0].accuracy);
    }

    #[test]
    fn benchmark_metrics_bit_reproducible() {
        let ds = clusters((6.0, 0.0));
        let a = benchmark(&ds, &toy_config(), 2, 0.7, 9).unwrap();
        let b = benchmark(&ds, &toy_config(), 2, 0.7, 9).unwrap();
        assert_eq!(a.metrics_block(), b.metrics_block());
        let c = benchmark(&ds, &toy_config(), 2, 0.7, 10).unwrap();
        assert_ne!(a.metrics_block(), c.metrics_block());
    }
}
