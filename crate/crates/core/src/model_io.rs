//! Versioned binary model files.
//!
//! Layout (all integers and floats little-endian; see docs/model-format.md
//! for the full byte-level specification):
//!
//! ```text
//! magic   b"MFDN"
//! version u16 (currently 1)
//! kind    u8: 0 = classifier ensemble, 1 = regressor
//! payload kind-specific, see below
//! ```
//!
//! Only fitted *inputs* are stored (jittered points, retained simplices,
//! masks, targets, config); envelopes and KD-trees are rebuilt
//! deterministically on load, so a round trip predicts identically.

use crate::classifier::{BaseManifoldron, DistanceMode, FitConfig, ManifoldronEnsemble};
use crate::geometry::{PointStore, Simplex};
use crate::manifold::{ClassModel, ManifoldError, NeighborRule, SimplicialComplex};
use crate::regressor::{RegressorError, RegressorModel};
use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"MFDN";
const VERSION: u16 = 1;
const KIND_CLASSIFIER: u8 = 0;
const KIND_REGRESSOR: u8 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {got} (this build reads {supported})")]
    VersionMismatch { got: u16, supported: u16 },
    #[error("unknown model kind tag {0}")]
    UnknownKind(u8),
    #[error("model file is truncated or corrupt: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot rebuild model: {0}")]
    Rebuild(String),
}

impl From<ManifoldError> for ModelIoError {
    fn from(e: ManifoldError) -> Self {
        ModelIoError::Rebuild(e.to_string())
    }
}

impl From<RegressorError> for ModelIoError {
    fn from(e: RegressorError) -> Self {
        ModelIoError::Rebuild(e.to_string())
    }
}

/// Either fitted model kind, as stored on disk.
pub enum Model {
    Classifier(ManifoldronEnsemble),
    Regressor(RegressorModel),
}

pub fn save(model: &Model, mut w: impl Write) -> Result<(), ModelIoError> {
    w.write_all(MAGIC)?;
    w.write_u16::<LE>(VERSION)?;
    match model {
        Model::Classifier(ens) => {
            w.write_u8(KIND_CLASSIFIER)?;
            write_classifier(ens, &mut w)
        }
        Model::Regressor(reg) => {
            w.write_u8(KIND_REGRESSOR)?;
            write_regressor(reg, &mut w)
        }
    }
}

pub fn load(mut r: impl Read) -> Result<Model, ModelIoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| ModelIoError::BadMagic)?;
    if &magic != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = r.read_u16::<LE>().map_err(truncated)?;
    if version != VERSION {
        return Err(ModelIoError::VersionMismatch { got: version, supported: VERSION });
    }
    match r.read_u8().map_err(truncated)? {
        KIND_CLASSIFIER => Ok(Model::Classifier(read_classifier(&mut r)?)),
        KIND_REGRESSOR => Ok(Model::Regressor(read_regressor(&mut r)?)),
        other => Err(ModelIoError::UnknownKind(other)),
    }
}

pub fn save_file(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let file = std::fs::File::create(path)?;
    save(model, std::io::BufWriter::new(file))
}

pub fn load_file(path: impl AsRef<Path>) -> Result<Model, ModelIoError> {
    let file = std::fs::File::open(path)?;
    load(std::io::BufReader::new(file))
}

fn truncated(e: std::io::Error) -> ModelIoError {
    ModelIoError::Corrupt(e.to_string())
}

fn write_classifier(ens: &ManifoldronEnsemble, w: &mut impl Write) -> Result<(), ModelIoError> {
    w.write_u64::<LE>(ens.seed)?;
    write_config(&ens.config, w)?;
    w.write_u32::<LE>(ens.n_features as u32)?;
    w.write_u32::<LE>(ens.label_names.len() as u32)?;
    for name in &ens.label_names {
        write_str(name, w)?;
    }
    w.write_u32::<LE>(ens.bases.len() as u32)?;
    for base in &ens.bases {
        w.write_u32::<LE>(base.feature_mask.len() as u32)?;
        for &f in &base.feature_mask {
            w.write_u32::<LE>(f as u32)?;
        }
        for model in &base.class_models {
            write_points(&model.points, w)?;
            write_simplices(&model.complex, w)?;
        }
    }
    Ok(())
}

fn read_classifier(r: &mut impl Read) -> Result<ManifoldronEnsemble, ModelIoError> {
    let seed = r.read_u64::<LE>().map_err(truncated)?;
    let config = read_config(r)?;
    let n_features = r.read_u32::<LE>().map_err(truncated)? as usize;
    let n_labels = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut label_names = Vec::with_capacity(n_labels);
    for _ in 0..n_labels {
        label_names.push(read_str(r)?);
    }
    let n_bases = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut bases = Vec::with_capacity(n_bases);
    for _ in 0..n_bases {
        let mask_len = r.read_u32::<LE>().map_err(truncated)? as usize;
        let mut feature_mask = Vec::with_capacity(mask_len);
        for _ in 0..mask_len {
            feature_mask.push(r.read_u32::<LE>().map_err(truncated)? as usize);
        }
        let mut class_models = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            let points = read_points(r)?;
            let complex = read_simplices(r, points.dim(), points.len())?;
            class_models.push(ClassModel::assemble(points, complex)?);
        }
        bases.push(BaseManifoldron {
            feature_mask,
            class_models,
            distance_mode: config.distance_mode,
        });
    }
    Ok(ManifoldronEnsemble { bases, n_features, label_names, config, seed })
}

fn write_regressor(reg: &RegressorModel, w: &mut impl Write) -> Result<(), ModelIoError> {
    w.write_u64::<LE>(reg.seed)?;
    w.write_u32::<LE>(reg.neighbors as u32)?;
    write_points(&reg.points, w)?;
    for &t in &reg.targets {
        w.write_f64::<LE>(t)?;
    }
    write_simplices(&reg.complex, w)?;
    Ok(())
}

fn read_regressor(r: &mut impl Read) -> Result<RegressorModel, ModelIoError> {
    let seed = r.read_u64::<LE>().map_err(truncated)?;
    let neighbors = r.read_u32::<LE>().map_err(truncated)? as usize;
    let points = read_points(r)?;
    let mut targets = Vec::with_capacity(points.len());
    for _ in 0..points.len() {
        targets.push(r.read_f64::<LE>().map_err(truncated)?);
    }
    let complex = read_simplices(r, points.dim(), points.len())?;
    Ok(RegressorModel::assemble(points, targets, complex, neighbors, seed)?)
}

fn write_config(c: &FitConfig, w: &mut impl Write) -> Result<(), ModelIoError> {
    w.write_u32::<LE>(c.neighbors as u32)?;
    w.write_u32::<LE>(c.bag_min as u32)?;
    w.write_u32::<LE>(c.bag_max as u32)?;
    match c.bag_count {
        Some(n) => {
            w.write_u8(1)?;
            w.write_u32::<LE>(n as u32)?;
        }
        None => {
            w.write_u8(0)?;
            w.write_u32::<LE>(0)?;
        }
    }
    w.write_u8(match c.distance_mode {
        DistanceMode::Plane => 0,
        DistanceMode::Point => 1,
        DistanceMode::Auto => 2,
    })?;
    w.write_u8(match c.neighbor_rule {
        NeighborRule::Or => 0,
        NeighborRule::And => 1,
    })?;
    w.write_u32::<LE>(c.processes as u32)?;
    Ok(())
}

fn read_config(r: &mut impl Read) -> Result<FitConfig, ModelIoError> {
    let neighbors = r.read_u32::<LE>().map_err(truncated)? as usize;
    let bag_min = r.read_u32::<LE>().map_err(truncated)? as usize;
    let bag_max = r.read_u32::<LE>().map_err(truncated)? as usize;
    let has_count = r.read_u8().map_err(truncated)? != 0;
    let count = r.read_u32::<LE>().map_err(truncated)? as usize;
    let distance_mode = match r.read_u8().map_err(truncated)? {
        0 => DistanceMode::Plane,
        1 => DistanceMode::Point,
        2 => DistanceMode::Auto,
        other => return Err(ModelIoError::Corrupt(format!("distance mode tag {other}"))),
    };
    let neighbor_rule = match r.read_u8().map_err(truncated)? {
        0 => NeighborRule::Or,
        1 => NeighborRule::And,
        other => return Err(ModelIoError::Corrupt(format!("neighbor rule tag {other}"))),
    };
    let processes = r.read_u32::<LE>().map_err(truncated)? as usize;
    Ok(FitConfig {
        neighbors,
        bag_min,
        bag_max,
        bag_count: has_count.then_some(count),
        distance_mode,
        neighbor_rule,
        processes,
    })
}

fn write_points(points: &PointStore, w: &mut impl Write) -> Result<(), ModelIoError> {
    w.write_u32::<LE>(points.len() as u32)?;
    w.write_u32::<LE>(points.dim() as u32)?;
    for &x in points.as_flat() {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

fn read_points(r: &mut impl Read) -> Result<PointStore, ModelIoError> {
    let n = r.read_u32::<LE>().map_err(truncated)? as usize;
    let dim = r.read_u32::<LE>().map_err(truncated)? as usize;
    if dim == 0 || dim > 4096 {
        return Err(ModelIoError::Corrupt(format!("implausible dimension {dim}")));
    }
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        let x = r.read_f64::<LE>().map_err(truncated)?;
        if !x.is_finite() {
            return Err(ModelIoError::Corrupt("non-finite coordinate".into()));
        }
        coords.push(x);
    }
    Ok(PointStore::from_flat(coords, dim))
}

fn write_simplices(complex: &SimplicialComplex, w: &mut impl Write) -> Result<(), ModelIoError> {
    w.write_u32::<LE>(complex.simplices.len() as u32)?;
    for s in &complex.simplices {
        for &v in s.vertices() {
            w.write_u32::<LE>(v)?;
        }
    }
    Ok(())
}

fn read_simplices(
    r: &mut impl Read,
    dim: usize,
    point_count: usize,
) -> Result<SimplicialComplex, ModelIoError> {
    let count = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut simplices = Vec::with_capacity(count);
    for _ in 0..count {
        let mut verts = Vec::with_capacity(dim + 1);
        for _ in 0..dim + 1 {
            let v = r.read_u32::<LE>().map_err(truncated)?;
            if v as usize >= point_count {
                return Err(ModelIoError::Corrupt(format!(
                    "vertex id {v} out of range (have {point_count} points)"
                )));
            }
            verts.push(v);
        }
        simplices.push(Simplex::new(verts));
    }
    Ok(SimplicialComplex { simplices, dim, point_count })
}

fn write_str(s: &str, w: &mut impl Write) -> Result<(), ModelIoError> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str(r: &mut impl Read) -> Result<String, ModelIoError> {
    let len = r.read_u32::<LE>().map_err(truncated)? as usize;
    if len > 1 << 20 {
        return Err(ModelIoError::Corrupt(format!("implausible string length {len}")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(truncated)?;
    String::from_utf8(buf).map_err(|_| ModelIoError::Corrupt("invalid utf-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier;
    use crate::dataset::Dataset;
    use rand::Rng;

    fn toy_ensemble() -> (Dataset, ManifoldronEnsemble) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..6 {
            for j in 0..4 {
                rows.push(vec![i as f64 * 0.3, j as f64 * 0.3]);
                labels.push(0);
                rows.push(vec![5.0 + i as f64 * 0.3, j as f64 * 0.3]);
                labels.push(1);
            }
        }
        let ds = Dataset::new_classification(
            PointStore::from_rows(&rows, 2),
            labels,
            vec!["neg".into(), "pos".into()],
        );
        let config = FitConfig {
            bag_min: 2,
            bag_max: 2,
            bag_count: Some(1),
            processes: 1,
            ..FitConfig::default()
        };
        let ens = classifier::fit(&ds, &config, 77).unwrap();
        (ds, ens)
    }

    #[test]
    fn classifier_roundtrip_predicts_identically() {
        let (_, ens) = toy_ensemble();
        let mut buf = Vec::new();
        save(&Model::Classifier(ens), &mut buf).unwrap();
        let loaded = match load(buf.as_slice()).unwrap() {
            Model::Classifier(e) => e,
            _ => panic!("wrong kind"),
        };
        let (_, original) = toy_ensemble();
        let mut rng = crate::seeding::rng(5, 0);
        for _ in 0..100 {
            let p = [rng.gen_range(-2.0..8.0), rng.gen_range(-2.0..3.0)];
            assert_eq!(original.predict(&p).unwrap(), loaded.predict(&p).unwrap());
        }
        assert_eq!(loaded.label_names, vec!["neg", "pos"]);
    }

    #[test]
    fn regressor_roundtrip() {
        let ds = crate::datagen::gen_regression(crate::regressor::BuiltinFn::F2, 120, 4);
        let model =
            crate::regressor::fit_regressor(&ds.features, ds.values().unwrap(), 14, 4).unwrap();
        let mut buf = Vec::new();
        save(&Model::Regressor(model), &mut buf).unwrap();
        let loaded = match load(buf.as_slice()).unwrap() {
            Model::Regressor(m) => m,
            _ => panic!("wrong kind"),
        };
        let model2 =
            crate::regressor::fit_regressor(&ds.features, ds.values().unwrap(), 14, 4).unwrap();
        let mut rng = crate::seeding::rng(6, 0);
        for _ in 0..50 {
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(
                model2.predict_closest(&p).unwrap().to_bits(),
                loaded.predict_closest(&p).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn corrupted_header_rejected() {
        let (_, ens) = toy_ensemble();
        let mut buf = Vec::new();
        save(&Model::Classifier(ens), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(load(bad.as_slice()), Err(ModelIoError::BadMagic)));
        // Future version tag.
        let mut newer = buf.clone();
        newer[4] = 0xff;
        assert!(matches!(
            load(newer.as_slice()),
            Err(ModelIoError::VersionMismatch { .. })
        ));
        // Truncation.
        let cut = &buf[..buf.len() / 2];
        assert!(load(cut).is_err());
    }
}
