use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::architectures::{Model, ModelSpec};
use crate::data::normalize::NormStats;
use crate::error::{Error, Result};
use crate::numerics::Rng;

const MAGIC: &[u8; 8] = b"RUNOFFCK";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub meta: TensorMeta,
    pub values: Vec<f64>,
}

/// A trained model frozen at its best-validation epoch: the spec it was built
/// from, the normalization it expects, and every parameter tensor in layer
/// declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub stats: NormStats,
    pub best_val_loss: f64,
    pub epoch_of_best: usize,
    pub seed: u64,
    pub tensors: Vec<Tensor>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    stats: NormStats,
    best_val_loss: f64,
    epoch_of_best: usize,
    seed: u64,
    tensors: Vec<TensorMeta>,
}

impl Checkpoint {
    pub fn capture(
        model: &mut Model,
        stats: &NormStats,
        best_val_loss: f64,
        epoch_of_best: usize,
        seed: u64,
    ) -> Checkpoint {
        let tensors = model
            .params_mut()
            .iter()
            .map(|p| Tensor {
                meta: TensorMeta {
                    name: p.name().to_string(),
                    shape: p.shape().to_vec(),
                },
                values: p.values_slice().to_vec(),
            })
            .collect();
        Checkpoint {
            spec: model.spec().clone(),
            stats: stats.clone(),
            best_val_loss,
            epoch_of_best,
            seed,
            tensors,
        }
    }

    /// Writes the stored parameters into `model`, which must have been built
    /// from the same spec.
    pub fn restore_into(&self, model: &mut Model) -> Result<()> {
        let mut params = model.params_mut();
        if params.len() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "checkpoint has {} tensors, model has {} parameters",
                self.tensors.len(),
                params.len()
            )));
        }
        for (param, tensor) in params.iter_mut().zip(&self.tensors) {
            if param.name() != tensor.meta.name || param.shape() != &tensor.meta.shape[..] {
                return Err(Error::Shape(format!(
                    "checkpoint tensor {:?} with shape {:?} does not match model parameter {:?} with shape {:?}",
                    tensor.meta.name,
                    tensor.meta.shape,
                    param.name(),
                    param.shape()
                )));
            }
            param.values_slice_mut().copy_from_slice(&tensor.values);
        }
        Ok(())
    }

    /// Builds a fresh model from the stored spec and loads the parameters.
    pub fn instantiate(&self) -> Result<Model> {
        // The init draw is immediately overwritten, any seed works.
        let mut model = Model::build(&self.spec, &mut Rng::new(0))?;
        self.restore_into(&mut model)?;
        Ok(model)
    }
}

/// File layout: magic, format version, length-prefixed JSON header (spec,
/// stats, losses, tensor manifest), then every tensor's values as
/// little-endian f64 in manifest order.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    let header = Header {
        spec: checkpoint.spec.clone(),
        stats: checkpoint.stats.clone(),
        best_val_loss: checkpoint.best_val_loss,
        epoch_of_best: checkpoint.epoch_of_best,
        seed: checkpoint.seed,
        tensors: checkpoint.tensors.iter().map(|t| t.meta.clone()).collect(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(header_json.len() as u64).to_le_bytes())?;
    out.write_all(&header_json)?;
    for tensor in &checkpoint.tensors {
        for v in &tensor.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut reader = BufReader::new(File::open(path)?);
    let corrupt = |what: &str| Error::Format(format!("checkpoint {}: {what}", path.display()));

    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| corrupt("truncated before magic"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic; not a checkpoint file"));
    }
    let mut word = [0u8; 4];
    reader
        .read_exact(&mut word)
        .map_err(|_| corrupt("truncated before version"))?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint {}: format version {version}, this build reads {FORMAT_VERSION}",
            path.display()
        )));
    }
    let mut len_bytes = [0u8; 8];
    reader
        .read_exact(&mut len_bytes)
        .map_err(|_| corrupt("truncated before header"))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    reader
        .read_exact(&mut header_json)
        .map_err(|_| corrupt("truncated inside header"))?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| Error::Format(format!("checkpoint {}: bad header: {e}", path.display())))?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    let mut buf = [0u8; 8];
    for meta in header.tensors {
        let count: usize = meta.shape.iter().product();
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            reader.read_exact(&mut buf).map_err(|_| {
                corrupt(&format!("truncated inside tensor {:?} payload", meta.name))
            })?;
            values.push(f64::from_le_bytes(buf));
        }
        tensors.push(Tensor { meta, values });
    }
    if reader.read(&mut buf).map_err(Error::Io)? != 0 {
        return Err(corrupt("trailing bytes after payload"));
    }
    Ok(Checkpoint {
        spec: header.spec,
        stats: header.stats,
        best_val_loss: header.best_val_loss,
        epoch_of_best: header.epoch_of_best,
        seed: header.seed,
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architectures::ModelKind;
    use crate::check::miniature_spec;
    use crate::data::synthetic::{generate_synthetic, SyntheticConfig};

    fn stats() -> NormStats {
        let table = generate_synthetic(&SyntheticConfig {
            years: 1,
            ..SyntheticConfig::default()
        })
        .unwrap();
        NormStats::fit(&table, 0..table.len()).unwrap()
    }

    fn trained_like_checkpoint(kind: ModelKind) -> (Checkpoint, Model) {
        let spec = miniature_spec(kind);
        let mut model = Model::build(&spec, &mut Rng::new(77)).unwrap();
        let checkpoint = Checkpoint::capture(&mut model, &stats(), 0.125, 17, 99);
        (checkpoint, model)
    }

    #[test]
    fn save_load_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        for kind in ModelKind::ALL {
            let (checkpoint, _) = trained_like_checkpoint(kind);
            let path = dir.path().join(format!("{}.ckpt", kind.label()));
            save_checkpoint(&checkpoint, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            assert_eq!(back.epoch_of_best, 17);
            assert_eq!(back.seed, 99);
            assert_eq!(
                back.best_val_loss.to_bits(),
                checkpoint.best_val_loss.to_bits()
            );
            assert_eq!(back.tensors.len(), checkpoint.tensors.len());
            for (a, b) in back.tensors.iter().zip(&checkpoint.tensors) {
                assert_eq!(a.meta, b.meta);
                for (x, y) in a.values.iter().zip(&b.values) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn instantiate_reproduces_the_model_outputs() {
        use crate::architectures::AssembledInput;
        use ndarray::Array2;

        let spec = miniature_spec(ModelKind::CnnOnly);
        let mut model = Model::build(&spec, &mut Rng::new(5)).unwrap();
        let checkpoint = Checkpoint::capture(&mut model, &stats(), 1.0, 1, 5);
        let mut rebuilt = checkpoint.instantiate().unwrap();
        let mut rng = Rng::new(123);
        let window =
            Array2::from_shape_fn((spec.n_vars, spec.long_len), |_| rng.uniform(-1.0, 1.0));
        let a = model.forward(&AssembledInput::long(window.view())).unwrap();
        let b = rebuilt
            .forward(&AssembledInput::long(window.view()))
            .unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn truncated_file_is_rejected_everywhere() {
        let dir = tempfile::tempdir().unwrap();
        let (checkpoint, _) = trained_like_checkpoint(ModelKind::LstmWHour);
        let path = dir.path().join("full.ckpt");
        save_checkpoint(&checkpoint, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // Chop at several depths: inside magic, header, and payload.
        for cut in [4, 11, 30, bytes.len() / 2, bytes.len() - 3] {
            let tpath = dir.path().join(format!("cut{cut}.ckpt"));
            std::fs::write(&tpath, &bytes[..cut]).unwrap();
            let err = load_checkpoint(&tpath).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "cut {cut}: {err}");
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (checkpoint, _) = trained_like_checkpoint(ModelKind::CnnOnly);
        let path = dir.path().join("pad.ckpt");
        save_checkpoint(&checkpoint, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0u8; 9]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn wrong_magic_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (checkpoint, _) = trained_like_checkpoint(ModelKind::CnnOnly);
        let path = dir.path().join("v.ckpt");
        save_checkpoint(&checkpoint, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path)
            .unwrap_err()
            .to_string()
            .contains("magic"));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'R';
        bytes[8] = 42; // version
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path)
            .unwrap_err()
            .to_string()
            .contains("version 42"));
    }

    #[test]
    fn mismatched_spec_names_the_first_bad_tensor() {
        let (checkpoint, _) = trained_like_checkpoint(ModelKind::CnnOnly);
        let mut other =
            Model::build(&miniature_spec(ModelKind::LstmWHour), &mut Rng::new(1)).unwrap();
        let err = checkpoint.restore_into(&mut other).unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err}");
    }
}
