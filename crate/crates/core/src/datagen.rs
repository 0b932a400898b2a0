//! Synthetic dataset generators: four entangled 3D tube manifolds, three
//! 2D two-class toys, the Gaussian regression sampler, and the seeded
//! train/test split.
//!
//! The 3D sets sweep a circular face along a parametric trajectory, keeping
//! the face perpendicular to the tangent. Training data uses two nested tube
//! radii (`r1 < r3`) and test data the radius in between (`r2`), so every
//! test point is surrounded by training points of its own class.

use crate::dataset::{Dataset, Targets};
use crate::geometry::PointStore;
use crate::regressor::BuiltinFn;
use crate::seeding;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatagenError {
    #[error("trajectory tangent vanishes at t = {t}")]
    ZeroTangent { t: f64 },
    #[error("tube radius must be positive, got {r}")]
    BadRadius { r: f64 },
    #[error("need at least 3 points per swept circle, got {m}")]
    BadCircleCount { m: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {fraction}")]
    BadFraction { fraction: f64 },
    #[error("class {label:?} ended up empty in the training split")]
    EmptyTrainClass { label: String },
    #[error("toy generators need at least 8 points, got {n}")]
    TooFewPoints { n: usize },
}

/// A 3D parametric trajectory with an analytic tangent.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    /// `center + radius (cos t, sin t, 0)`.
    CircleXY { center: [f64; 3], radius: f64 },
    /// `center + radius (cos t, 0, sin t)`.
    CircleXZ { center: [f64; 3], radius: f64 },
    /// `(radius cos(t - phase), radius sin(t - phase), pitch t)`.
    Helix { radius: f64, pitch: f64, phase: f64 },
    /// A winding coil on a torus around the unit circle:
    /// `rho(t) = 0.3 sin(8t) + 1`,
    /// `(rho cos(t - phase), rho sin(t - phase), 0.3 cos(8t))`.
    Coil { phase: f64 },
    /// `origin + t * direction`, for tests and synthetic tubes.
    Line { origin: [f64; 3], direction: [f64; 3] },
}

impl Trajectory {
    pub fn position(&self, t: f64) -> [f64; 3] {
        match self {
            Trajectory::CircleXY { center, radius } => [
                center[0] + radius * t.cos(),
                center[1] + radius * t.sin(),
                center[2],
            ],
            Trajectory::CircleXZ { center, radius } => [
                center[0] + radius * t.cos(),
                center[1],
                center[2] + radius * t.sin(),
            ],
            Trajectory::Helix { radius, pitch, phase } => [
                radius * (t - phase).cos(),
                radius * (t - phase).sin(),
                pitch * t,
            ],
            Trajectory::Coil { phase } => {
                let rho = 0.3 * (8.0 * t).sin() + 1.0;
                [rho * (t - phase).cos(), rho * (t - phase).sin(), 0.3 * (8.0 * t).cos()]
            }
            Trajectory::Line { origin, direction } => [
                origin[0] + t * direction[0],
                origin[1] + t * direction[1],
                origin[2] + t * direction[2],
            ],
        }
    }

    pub fn tangent(&self, t: f64) -> [f64; 3] {
        match self {
            Trajectory::CircleXY { radius, .. } => {
                [-radius * t.sin(), radius * t.cos(), 0.0]
            }
            Trajectory::CircleXZ { radius, .. } => {
                [-radius * t.sin(), 0.0, radius * t.cos()]
            }
            Trajectory::Helix { radius, pitch, phase } => [
                -radius * (t - phase).sin(),
                radius * (t - phase).cos(),
                *pitch,
            ],
            Trajectory::Coil { phase } => {
                let rho = 0.3 * (8.0 * t).sin() + 1.0;
                let drho = 2.4 * (8.0 * t).cos();
                [
                    drho * (t - phase).cos() - rho * (t - phase).sin(),
                    drho * (t - phase).sin() + rho * (t - phase).cos(),
                    -2.4 * (8.0 * t).sin(),
                ]
            }
            Trajectory::Line { direction, .. } => *direction,
        }
    }
}

/// A trajectory plus the parameter grid to sample it on (inclusive of the
/// end within floating-point slack).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub trajectory: Trajectory,
    pub t_start: f64,
    pub t_end: f64,
    pub t_step: f64,
}

impl CurveSpec {
    pub fn sample_ts(&self) -> Vec<f64> {
        let mut ts = Vec::new();
        let n = ((self.t_end - self.t_start) / self.t_step + 1e-9).floor() as usize;
        for i in 0..=n {
            ts.push(self.t_start + i as f64 * self.t_step);
        }
        ts
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Sweeps a circle of radius `r` with `m` points along the curve: at each
/// sampled `t` an orthonormal frame `(n1, n2)` perpendicular to the tangent
/// is built from a fixed up-vector (+z, falling back to +y when the tangent
/// is vertical), and the points `c(t) + r (cos theta n1 + sin theta n2)` are
/// emitted for `theta = 2 pi j / m`.
pub fn tube_sweep(curve: &CurveSpec, r: f64, m: usize) -> Result<Vec<[f64; 3]>, DatagenError> {
    if r <= 0.0 {
        return Err(DatagenError::BadRadius { r });
    }
    if m < 3 {
        return Err(DatagenError::BadCircleCount { m });
    }
    let mut out = Vec::with_capacity(curve.sample_ts().len() * m);
    for t in curve.sample_ts() {
        let c = curve.trajectory.position(t);
        let tangent = curve.trajectory.tangent(t);
        let tnorm = norm3(tangent);
        if tnorm <= 1e-12 {
            return Err(DatagenError::ZeroTangent { t });
        }
        let that = [tangent[0] / tnorm, tangent[1] / tnorm, tangent[2] / tnorm];
        let mut n1 = cross(that, [0.0, 0.0, 1.0]);
        if norm3(n1) <= 1e-9 {
            n1 = cross(that, [0.0, 1.0, 0.0]);
        }
        let n1 = normalize3(n1);
        let n2 = cross(that, n1); // unit: that and n1 are orthonormal
        for j in 0..m {
            let theta = 2.0 * PI * j as f64 / m as f64;
            let (s, co) = theta.sin_cos();
            out.push([
                c[0] + r * (co * n1[0] + s * n2[0]),
                c[1] + r * (co * n1[1] + s * n2[1]),
                c[2] + r * (co * n1[2] + s * n2[2]),
            ]);
        }
    }
    Ok(out)
}

/// The four bundled 3D manifold datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    SixCircles,
    Dna,
    RingSpiral,
    TwoCurlySpirals,
}

impl ManifoldKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "six-circles" => Some(Self::SixCircles),
            "dna" => Some(Self::Dna),
            "ring-spiral" => Some(Self::RingSpiral),
            "two-curly-spirals" => Some(Self::TwoCurlySpirals),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SixCircles => "six-circles",
            Self::Dna => "dna",
            Self::RingSpiral => "ring-spiral",
            Self::TwoCurlySpirals => "two-curly-spirals",
        }
    }
}

/// Tube radii and sampling density for one manifold dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldDatasetSpec {
    pub kind: ManifoldKind,
    /// Inner training radius.
    pub r1: f64,
    /// Test radius, strictly between the training radii.
    pub r2: f64,
    /// Outer training radius.
    pub r3: f64,
    /// Points per swept circle.
    pub m: usize,
}

impl ManifoldDatasetSpec {
    pub fn defaults(kind: ManifoldKind) -> Self {
        let r3 = match kind {
            ManifoldKind::SixCircles | ManifoldKind::Dna => 0.04,
            ManifoldKind::RingSpiral | ManifoldKind::TwoCurlySpirals => 0.05,
        };
        Self { kind, r1: 0.01, r2: 0.02, r3, m: 12 }
    }

    /// Per-class trajectory grids: `(curves for class 0, curves for class 1,
    /// test t-step)`. Training and test share the t-grid except SixCircles,
    /// whose test grid is 5x coarser.
    fn curves(&self) -> (Vec<CurveSpec>, Vec<CurveSpec>, f64) {
        let step_fine = 0.04 * PI;
        let step_coil = 0.02 * PI;
        match self.kind {
            ManifoldKind::SixCircles => {
                // Three coplanar circles (class 0) each threaded by a
                // perpendicular circle (class 1).
                let centers = [[0.0, 0.0, 0.0], [0.8, 0.0, 0.0], [0.45, 0.7, 0.0]];
                let blue = centers
                    .iter()
                    .map(|&c| CurveSpec {
                        trajectory: Trajectory::CircleXY { center: c, radius: 0.4 },
                        t_start: 0.0,
                        t_end: 2.0 * PI,
                        t_step: step_fine,
                    })
                    .collect();
                let red = centers
                    .iter()
                    .map(|&c| CurveSpec {
                        trajectory: Trajectory::CircleXZ {
                            center: [c[0], c[1] + 0.4, c[2]],
                            radius: 0.4,
                        },
                        t_start: 0.0,
                        t_end: 2.0 * PI,
                        t_step: step_fine,
                    })
                    .collect();
                (blue, red, 0.2 * PI)
            }
            ManifoldKind::Dna => {
                let blue = vec![CurveSpec {
                    trajectory: Trajectory::Helix { radius: 0.2, pitch: 0.1, phase: 0.0 },
                    t_start: 0.0,
                    t_end: 4.0 * PI,
                    t_step: step_fine,
                }];
                let red = vec![CurveSpec {
                    trajectory: Trajectory::Helix { radius: 0.2, pitch: 0.1, phase: PI },
                    t_start: PI,
                    t_end: 5.0 * PI,
                    t_step: step_fine,
                }];
                (blue, red, step_fine)
            }
            ManifoldKind::RingSpiral => {
                let blue = vec![CurveSpec {
                    trajectory: Trajectory::CircleXY { center: [0.0; 3], radius: 1.0 },
                    t_start: 0.0,
                    t_end: 2.0 * PI,
                    t_step: step_coil,
                }];
                let red = vec![CurveSpec {
                    trajectory: Trajectory::Coil { phase: 0.0 },
                    t_start: 0.0,
                    t_end: 8.0 * PI,
                    t_step: step_coil,
                }];
                (blue, red, step_coil)
            }
            ManifoldKind::TwoCurlySpirals => {
                let blue = vec![CurveSpec {
                    trajectory: Trajectory::Coil { phase: 0.0 },
                    t_start: 0.0,
                    t_end: 8.0 * PI,
                    t_step: step_coil,
                }];
                // The second coil is the first rotated about the z-axis, so
                // its windings interleave with the first's.
                let red = vec![CurveSpec {
                    trajectory: Trajectory::Coil { phase: 0.1 * PI },
                    t_start: PI,
                    t_end: 9.0 * PI,
                    t_step: step_coil,
                }];
                (blue, red, step_coil)
            }
        }
    }
}

/// Generates one manifold dataset: training tubes at `r1` and `r3`, test tube
/// at `r2`. Class 0 is "blue", class 1 is "red".
pub fn gen_manifold(spec: &ManifoldDatasetSpec) -> Result<(Dataset, Dataset), DatagenError> {
    let (blue, red, test_step) = spec.curves();
    let mut train_rows: Vec<[f64; 3]> = Vec::new();
    let mut train_labels = Vec::new();
    let mut test_rows: Vec<[f64; 3]> = Vec::new();
    let mut test_labels = Vec::new();
    for (label, curves) in [(0usize, &blue), (1, &red)] {
        for curve in curves {
            for r in [spec.r1, spec.r3] {
                let pts = tube_sweep(curve, r, spec.m)?;
                train_labels.extend(std::iter::repeat(label).take(pts.len()));
                train_rows.extend(pts);
            }
            let test_curve = CurveSpec { t_step: test_step, ..curve.clone() };
            let pts = tube_sweep(&test_curve, spec.r2, spec.m)?;
            test_labels.extend(std::iter::repeat(label).take(pts.len()));
            test_rows.extend(pts);
        }
    }
    let names = vec!["0".to_string(), "1".to_string()];
    let train = Dataset::new_classification(
        PointStore::from_rows(&train_rows, 3),
        train_labels,
        names.clone(),
    );
    let test =
        Dataset::new_classification(PointStore::from_rows(&test_rows, 3), test_labels, names);
    Ok((train, test))
}

/// The bundled 2D two-class toys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyKind {
    Spirals,
    Circles,
    Moons,
}

impl ToyKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "spirals" => Some(Self::Spirals),
            "circles" => Some(Self::Circles),
            "moons" => Some(Self::Moons),
            _ => None,
        }
    }
}

/// Standard two-class 2D toys with seeded Gaussian coordinate noise:
/// two interleaved Archimedean spirals, two concentric circles, or two
/// interleaving half-moons. `n` is the total size, split evenly.
pub fn gen_toy2d(kind: ToyKind, n: usize, noise: f64, seed: u64) -> Result<Dataset, DatagenError> {
    if n < 8 {
        return Err(DatagenError::TooFewPoints { n });
    }
    let mut rng = seeding::rng(seed, 0x7432_6400 + kind as u64);
    let n0 = n / 2 + n % 2;
    let n1 = n / 2;
    let mut rows: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut emit = |p: [f64; 2], label: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        rows.push([p[0] + noise * nx, p[1] + noise * ny]);
        labels.push(label);
    };
    match kind {
        ToyKind::Spirals => {
            // r grows linearly with the angle; the second arm lags by pi.
            let theta_min = 0.25 * PI;
            let theta_max = 3.0 * PI;
            for (label, count) in [(0usize, n0), (1, n1)] {
                for i in 0..count {
                    let f = i as f64 / (count - 1).max(1) as f64;
                    let theta = theta_min + (theta_max - theta_min) * f;
                    let r = theta / theta_max;
                    let phase = label as f64 * PI;
                    emit(
                        [r * (theta + phase).cos(), r * (theta + phase).sin()],
                        label,
                        &mut rng,
                    );
                }
            }
        }
        ToyKind::Circles => {
            for (label, count, radius) in [(0usize, n0, 1.0), (1, n1, 0.5)] {
                for i in 0..count {
                    let theta = 2.0 * PI * i as f64 / count as f64;
                    emit([radius * theta.cos(), radius * theta.sin()], label, &mut rng);
                }
            }
        }
        ToyKind::Moons => {
            for i in 0..n0 {
                let t = PI * i as f64 / (n0 - 1) as f64;
                emit([t.cos(), t.sin()], 0, &mut rng);
            }
            for i in 0..n1 {
                let t = PI * i as f64 / (n1 - 1) as f64;
                emit([1.0 - t.cos(), 0.5 - t.sin()], 1, &mut rng);
            }
        }
    }
    Ok(Dataset::new_classification(
        PointStore::from_rows(&rows, 2),
        labels,
        vec!["0".to_string(), "1".to_string()],
    ))
}

/// Regression sample: `n` points with N(0,1) coordinates (2D for f1-f3, 3D
/// for f4-f6), targets by the builtin function. Seeded.
pub fn gen_regression(f: BuiltinFn, n: usize, seed: u64) -> Dataset {
    let dim = f.arity();
    let mut rng = seeding::rng(seed, 0x7265_6700 ^ f as u64);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        targets.push(f.eval(&p));
        rows.push(p);
    }
    Dataset::new_regression(PointStore::from_rows(&rows, dim), targets)
}

/// Seeded shuffle-then-prefix split. Classification data is stratified: each
/// class is split separately so train/test proportions match per class within
/// one sample. Errors if any class would vanish from the training side.
pub fn split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatagenError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatagenError::BadFraction { fraction: train_fraction });
    }
    let mut rng = seeding::rng(seed, 0x7370_6c69);
    let mut train_rows: Vec<usize> = Vec::new();
    let mut test_rows: Vec<usize> = Vec::new();
    match &dataset.targets {
        Targets::Labels(_) => {
            for (label, mut rows) in dataset.class_indices().into_iter().enumerate() {
                rows.shuffle(&mut rng);
                let n_train = ((rows.len() as f64 * train_fraction).round() as usize)
                    .min(rows.len());
                if n_train == 0 {
                    return Err(DatagenError::EmptyTrainClass {
                        label: dataset.label_names[label].clone(),
                    });
                }
                train_rows.extend(&rows[..n_train]);
                test_rows.extend(&rows[n_train..]);
            }
            // Deterministic row order regardless of class interleaving.
            train_rows.sort_unstable();
            test_rows.sort_unstable();
        }
        Targets::Values(_) => {
            let mut rows: Vec<usize> = (0..dataset.n_rows()).collect();
            rows.shuffle(&mut rng);
            let n_train = ((rows.len() as f64 * train_fraction).round() as usize)
                .clamp(1, rows.len() - 1);
            train_rows = rows[..n_train].to_vec();
            test_rows = rows[n_train..].to_vec();
            train_rows.sort_unstable();
            test_rows.sort_unstable();
        }
    }
    Ok((dataset.subset(&train_rows), dataset.subset(&test_rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_sweep_emits_axis_points() {
        let curve = CurveSpec {
            trajectory: Trajectory::Line { origin: [0.0; 3], direction: [0.0, 0.0, 1.0] },
            t_start: 0.0,
            t_end: 1.0,
            t_step: 1.0,
        };
        let pts = tube_sweep(&curve, 1.0, 4).unwrap();
        assert_eq!(pts.len(), 8);
        for t_slice in pts.chunks(4) {
            let mut got: Vec<(i64, i64)> = t_slice
                .iter()
                .map(|p| (p[0].round() as i64, p[1].round() as i64))
                .collect();
            got.sort_unstable();
            assert_eq!(got, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        }
    }

    #[test]
    fn tube_points_have_exact_radius_and_perpendicular_offset() {
        let spec = ManifoldDatasetSpec::defaults(ManifoldKind::RingSpiral);
        let (blue, red, _) = spec.curves();
        for curve in blue.iter().chain(&red) {
            let r = 0.03;
            let pts = tube_sweep(curve, r, 7).unwrap();
            let ts = curve.sample_ts();
            for (ti, t) in ts.iter().enumerate() {
                let c = curve.trajectory.position(*t);
                let tangent = curve.trajectory.tangent(*t);
                for p in &pts[ti * 7..(ti + 1) * 7] {
                    let offset = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                    assert_abs_diff_eq!(norm3(offset), r, epsilon = 1e-12);
                    let dot: f64 =
                        offset.iter().zip(&tangent).map(|(a, b)| a * b).sum();
                    assert!(dot.abs() <= 1e-9 * norm3(tangent));
                }
            }
        }
    }

    #[test]
    fn shrinking_tube_converges_to_trajectory() {
        let curve = CurveSpec {
            trajectory: Trajectory::CircleXY { center: [0.0; 3], radius: 0.4 },
            t_start: 0.0,
            t_end: 2.0 * PI,
            t_step: 0.1 * PI,
        };
        let r = 1e-6;
        for p in tube_sweep(&curve, r, 5).unwrap() {
            // Distance to the circle x^2+y^2 = 0.4^2, z = 0.
            let radial = (p[0] * p[0] + p[1] * p[1]).sqrt() - 0.4;
            let d = (radial * radial + p[2] * p[2]).sqrt();
            assert!(d <= r + 1e-12);
        }
    }

    #[test]
    fn six_circles_layout() {
        let spec = ManifoldDatasetSpec::defaults(ManifoldKind::SixCircles);
        let (blue, _, test_step) = spec.curves();
        // Trajectory 1 starts at (0.4, 0, 0).
        let p = blue[0].trajectory.position(0.0);
        assert_abs_diff_eq!(p[0], 0.4);
        assert_abs_diff_eq!(p[1], 0.0);
        assert_abs_diff_eq!(p[2], 0.0);
        // Training grid: 51 samples over [0, 2pi] at 0.04 pi; test at 0.2 pi.
        assert_eq!(blue[0].sample_ts().len(), 51);
        assert_abs_diff_eq!(test_step, 0.2 * PI);
        let (train, test) = gen_manifold(&spec).unwrap();
        assert_eq!(train.n_rows(), 6 * 51 * 2 * 12);
        assert_eq!(test.n_rows(), 6 * 11 * 12);
        assert_eq!(train.n_classes(), 2);
    }

    #[test]
    fn dna_red_is_blue_rotated_half_turn() {
        let spec = ManifoldDatasetSpec::defaults(ManifoldKind::Dna);
        let (blue, red, _) = spec.curves();
        for t in [0.0, 0.7, 2.0, 5.0] {
            let b = blue[0].trajectory.position(t);
            let r = red[0].trajectory.position(t);
            // Same z, opposite (x, y).
            assert_abs_diff_eq!(r[0], -b[0], epsilon = 1e-12);
            assert_abs_diff_eq!(r[1], -b[1], epsilon = 1e-12);
            assert_abs_diff_eq!(r[2], b[2], epsilon = 1e-12);
        }
    }

    #[test]
    fn test_points_sit_strictly_between_training_tubes() {
        for kind in [
            ManifoldKind::SixCircles,
            ManifoldKind::Dna,
            ManifoldKind::RingSpiral,
            ManifoldKind::TwoCurlySpirals,
        ] {
            let spec = ManifoldDatasetSpec::defaults(kind);
            let (blue, red, test_step) = spec.curves();
            assert!(spec.r1 < spec.r2 && spec.r2 < spec.r3);
            for curve in blue.iter().chain(&red) {
                let test_curve = CurveSpec { t_step: test_step, ..curve.clone() };
                for p in tube_sweep(&test_curve, spec.r2, spec.m).unwrap() {
                    // Distance to the trajectory, minimized over a fine grid.
                    let mut best = f64::INFINITY;
                    let fine = CurveSpec { t_step: test_curve.t_step / 50.0, ..test_curve.clone() };
                    for t in fine.sample_ts() {
                        let c = fine.trajectory.position(t);
                        let d = norm3([p[0] - c[0], p[1] - c[1], p[2] - c[2]]);
                        best = best.min(d);
                    }
                    assert!(
                        best > spec.r1 && best < spec.r3,
                        "{kind:?}: test point at distance {best} outside ({}, {})",
                        spec.r1,
                        spec.r3
                    );
                }
            }
        }
    }

    #[test]
    fn curly_spiral_classes_are_disjoint() {
        let spec = ManifoldDatasetSpec::defaults(ManifoldKind::TwoCurlySpirals);
        let (blue, red, _) = spec.curves();
        let mut min_d = f64::INFINITY;
        for tb in blue[0].sample_ts() {
            let b = blue[0].trajectory.position(tb);
            for tr in red[0].sample_ts() {
                let r = red[0].trajectory.position(tr);
                min_d = min_d.min(norm3([b[0] - r[0], b[1] - r[1], b[2] - r[2]]));
            }
        }
        // The curves must stay far enough apart for the tubes not to touch.
        assert!(min_d > spec.r3 + spec.r2, "coils too close: {min_d}");
    }

    #[test]
    fn spirals_radius_monotone_in_angle() {
        let ds = gen_toy2d(ToyKind::Spirals, 400, 0.0, 1).unwrap();
        let labels = ds.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 200);
        let mut last_r = 0.0;
        for (row, p) in ds.features.iter().enumerate() {
            if labels[row] != 0 {
                continue;
            }
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(r >= last_r - 1e-12);
            last_r = r;
        }
    }

    #[test]
    fn circles_have_fixed_gap() {
        let ds = gen_toy2d(ToyKind::Circles, 100, 0.0, 2).unwrap();
        let labels = ds.labels().unwrap();
        for (row, p) in ds.features.iter().enumerate() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let want = if labels[row] == 0 { 1.0 } else { 0.5 };
            assert_abs_diff_eq!(r, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn toys_deterministic_per_seed() {
        for kind in [ToyKind::Spirals, ToyKind::Circles, ToyKind::Moons] {
            let a = gen_toy2d(kind, 60, 0.05, 9).unwrap();
            let b = gen_toy2d(kind, 60, 0.05, 9).unwrap();
            let c = gen_toy2d(kind, 60, 0.05, 10).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.features, c.features);
        }
    }

    #[test]
    fn regression_sample_shape_and_bounds() {
        let ds = gen_regression(BuiltinFn::F1, 200, 3);
        assert_eq!(ds.n_rows(), 200);
        assert_eq!(ds.n_features(), 2);
        assert!(ds.values().unwrap().iter().all(|&y| y >= 0.0));
        let again = gen_regression(BuiltinFn::F1, 200, 3);
        assert_eq!(ds, again);
        // CLT bound on the coordinate means.
        for c in 0..2 {
            let mean: f64 =
                ds.features.iter().map(|p| p[c]).sum::<f64>() / ds.n_rows() as f64;
            assert!(mean.abs() <= 4.0 / (200.0f64).sqrt(), "mean {mean}");
        }
    }

    #[test]
    fn split_stratified_70_30() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            rows.push([i as f64, (i * 7 % 13) as f64]);
            labels.push(i % 2);
        }
        let ds = Dataset::new_classification(
            PointStore::from_rows(&rows, 2),
            labels,
            vec!["0".into(), "1".into()],
        );
        let (train, test) = split(&ds, 0.7, 11).unwrap();
        assert_eq!(train.n_rows(), 70);
        assert_eq!(test.n_rows(), 30);
        let per_class = |d: &Dataset, l: usize| d.labels().unwrap().iter().filter(|&&x| x == l).count();
        assert_eq!(per_class(&train, 0), 35);
        assert_eq!(per_class(&train, 1), 35);
        let (t2, _) = split(&ds, 0.7, 11).unwrap();
        assert_eq!(train, t2);
    }

    #[test]
    fn split_80_20_regression() {
        let ds = gen_regression(BuiltinFn::F2, 200, 1);
        let (train, test) = split(&ds, 0.8, 2).unwrap();
        assert_eq!(train.n_rows(), 160);
        assert_eq!(test.n_rows(), 40);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = gen_regression(BuiltinFn::F1, 20, 1);
        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }
}
