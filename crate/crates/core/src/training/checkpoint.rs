//! Binary checkpoint container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic     8 bytes  "ONTOCKPT"
//! version   u32
//! config    u32 length + UTF-8 "key = value" lines
//! epoch     u64
//! tensors   u32 count, then per tensor:
//!             u16 name length + name, u8 rank, rank × u64 dims, f64 data
//! checksum  32 bytes SHA-256 of everything above
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ModelState, TrainingConfig};
use crate::error::{Error, Result};
use crate::extensional::ExtensionalParams;
use crate::intensional::{Bridge, BridgeKind, IntensionalParams};
use crate::linalg::Matrix;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"ONTOCKPT";
const DIGEST_LEN: usize = 32;

struct Tensor {
    name: String,
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn matrix_tensor(name: &str, m: &Matrix) -> Tensor {
    Tensor {
        name: name.to_string(),
        dims: vec![m.rows(), m.cols()],
        data: m.as_slice().to_vec(),
    }
}

fn encode(state: &ModelState) -> Vec<u8> {
    let ext = &state.extensional;
    let int = &state.intensional;
    let mut tensors = vec![
        matrix_tensor("instances", &ext.instances),
        matrix_tensor("relations", &ext.relations),
        matrix_tensor("centers", &ext.centers),
        matrix_tensor("axes", &ext.axes),
        Tensor {
            name: "radii".into(),
            dims: vec![ext.radii.len()],
            data: ext.radii.clone(),
        },
        matrix_tensor("concept_vectors", &int.concepts),
    ];
    if let Bridge::Learnable(m) = &int.bridge {
        tensors.push(matrix_tensor("bridge", m));
    }

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let mut config = state.config.clone();
    config.init = int.init_mode;
    let cfg = config.to_text();
    buf.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    buf.extend_from_slice(cfg.as_bytes());
    buf.extend_from_slice(&(state.epoch as u64).to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        buf.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(t.name.as_bytes());
        buf.push(t.dims.len() as u8);
        for d in &t.dims {
            buf.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

/// Writes atomically via a sibling temp file.
pub fn save_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(state);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn decode(bytes: &[u8]) -> Result<ModelState> {
    if bytes.len() < MAGIC.len() + 4 {
        return Err(Error::Checkpoint("truncated file".into()));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "version mismatch: file has {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    if bytes.len() < 12 + DIGEST_LEN {
        return Err(Error::Checkpoint("truncated file".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checkpoint(
            "checksum mismatch (truncated or corrupted file)".into(),
        ));
    }

    let mut r = Reader { bytes: body, pos: 12 };
    let cfg_len = r.u32()? as usize;
    let cfg_text = std::str::from_utf8(r.take(cfg_len)?)
        .map_err(|_| Error::Checkpoint("config is not UTF-8".into()))?;
    let config = TrainingConfig::from_text(cfg_text)
        .map_err(|e| Error::Checkpoint(format!("bad config echo: {e}")))?;
    let epoch = r.u64()? as usize;
    let count = r.u32()?;
    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = r.u8()? as usize;
        let dims = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint(format!("tensor {name} too large")))?;
        let raw = r.take(len.checked_mul(8).ok_or_else(|| {
            Error::Checkpoint(format!("tensor {name} too large"))
        })?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Tensor { name, dims, data });
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after tensors".into()));
    }

    let mut take = |name: &str| -> Result<Tensor> {
        let idx = tensors
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
        Ok(tensors.swap_remove(idx))
    };
    let matrix = |t: Tensor| -> Result<Matrix> {
        match t.dims[..] {
            [rows, cols] => Ok(Matrix::from_vec(rows, cols, t.data)),
            _ => Err(Error::Checkpoint(format!("tensor {} is not a matrix", t.name))),
        }
    };
    let extensional = ExtensionalParams {
        instances: matrix(take("instances")?)?,
        relations: matrix(take("relations")?)?,
        centers: matrix(take("centers")?)?,
        axes: matrix(take("axes")?)?,
        radii: take("radii")?.data,
    };
    let concepts = matrix(take("concept_vectors")?)?;
    let bridge = match config.bridge {
        BridgeKind::Identity => Bridge::Identity,
        BridgeKind::Matrix => Bridge::Learnable(matrix(take("bridge")?)?),
    };
    let d = extensional.dim();
    let consistent = extensional.relations.cols() == d
        && extensional.centers.cols() == d
        && extensional.axes.shape() == extensional.centers.shape()
        && extensional.radii.len() == extensional.centers.rows()
        && concepts.shape() == extensional.centers.shape()
        && match &bridge {
            Bridge::Learnable(m) => m.shape() == (d, d),
            Bridge::Identity => true,
        }
        && config.dim == d;
    if !consistent {
        return Err(Error::Checkpoint("tensor shapes are inconsistent".into()));
    }
    Ok(ModelState {
        extensional,
        intensional: IntensionalParams {
            concepts,
            bridge,
            init_mode: config.init,
        },
        config,
        epoch,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelState> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
