//! Classification metrics and evaluation reports.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction and truth lengths differ: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("cannot score an empty prediction set")]
    Empty,
}

/// Fraction of exact matches.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Unweighted mean over classes of `2PR/(P+R)`, with per-class F1 defined as
/// 0 when precision + recall is 0. Classes are every label observed in either
/// the truth or the predictions.
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let per_class = per_class_metrics(pred, truth)?;
    Ok(per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ClassMetrics {
    pub label: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class precision/recall/F1 in ascending label order.
pub fn per_class_metrics(pred: &[usize], truth: &[usize]) -> Result<Vec<ClassMetrics>, MetricsError> {
    check(pred, truth)?;
    let mut labels: Vec<usize> = truth.iter().chain(pred).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let mut out = Vec::with_capacity(labels.len());
    for &label in &labels {
        let tp = pred
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| p == label && t == label)
            .count() as f64;
        let pred_pos = pred.iter().filter(|&&p| p == label).count() as f64;
        let true_pos = truth.iter().filter(|&&t| t == label).count() as f64;
        let precision = if pred_pos > 0.0 { tp / pred_pos } else { 0.0 };
        let recall = if true_pos > 0.0 { tp / true_pos } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        out.push(ClassMetrics { label, precision, recall, f1, support: true_pos as usize });
    }
    Ok(out)
}

fn check(pred: &[usize], truth: &[usize]) -> Result<(), MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Echo of the configuration a report was produced under.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConfigEcho {
    pub neighbors: usize,
    pub bag_features: (usize, usize),
    pub bag_count: Option<usize>,
    pub distance_mode: String,
    pub processes: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
}

/// Metrics and timing for one seeded split/fit/eval cycle.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub train_secs: f64,
    pub predict_secs: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Aggregated evaluation over one or more runs.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub runs: Vec<RunReport>,
    pub mean_accuracy: f64,
    pub mean_macro_f1: f64,
}

impl EvalReport {
    pub fn from_runs(config: ConfigEcho, runs: Vec<RunReport>) -> Self {
        let n = runs.len().max(1) as f64;
        let mean_accuracy = runs.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let mean_macro_f1 = runs.iter().map(|r| r.macro_f1).sum::<f64>() / n;
        Self { config, runs, mean_accuracy, mean_macro_f1 }
    }

    /// The deterministic metrics block: everything except wall-clock timings.
    /// Two runs with the same data, config, and master seed produce identical
    /// bytes here.
    pub fn metrics_block(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        let _ = writeln!(
            s,
            "config: neighbors={} bag_features={}..{} bag_count={} distance_mode={} split={} seed={}",
            self.config.neighbors,
            self.config.bag_features.0,
            self.config.bag_features.1,
            self.config
                .bag_count
                .map(|n| n.to_string())
                .unwrap_or_else(|| "auto".into()),
            self.config.distance_mode,
            self.config.train_fraction,
            self.config.master_seed,
        );
        for r in &self.runs {
            let _ = writeln!(
                s,
                "run seed={}: accuracy={:.6} macro_f1={:.6} (train={} test={})",
                r.seed, r.accuracy, r.macro_f1, r.n_train, r.n_test
            );
        }
        let _ = writeln!(
            s,
            "mean: accuracy={:.6} macro_f1={:.6} over {} run(s)",
            self.mean_accuracy,
            self.mean_macro_f1,
            self.runs.len()
        );
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.metrics_block())?;
        for r in &self.runs {
            writeln!(
                f,
                "timing seed={}: train {:.3}s, predict {:.3}s",
                r.seed, r.train_secs, r.predict_secs
            )?;
            for c in &r.per_class {
                writeln!(
                    f,
                    "  class {}: precision={:.4} recall={:.4} f1={:.4} support={}",
                    c.label, c.precision, c.recall, c.f1, c.support
                )?;
            }
        }
        Ok(())
    }
}
