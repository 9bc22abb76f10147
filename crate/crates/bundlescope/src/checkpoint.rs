//! Single-file model checkpoints.
//!
//! Layout:
//!
//! ```text
//! 8 bytes   magic "BNDLSCP1" (last byte is the format version)
//! 8 bytes   header length N, u64 little-endian
//! N bytes   JSON header: arch, config, epoch, seed, tensor manifest
//! ...       tensor data, f64 little-endian, row-major, in manifest order
//! ```
//!
//! Manifest offsets are relative to the start of the tensor data.

use std::fs;
use std::path::Path;

use bundlescope_core::nn::{ArchitectureSpec, ModelParams};
use bundlescope_core::{Matrix, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

pub const MAGIC: &[u8; 8] = b"BNDLSCP1";
const MAGIC_STEM: &[u8; 7] = b"BNDLSCP";
const PREAMBLE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub arch: ArchitectureSpec,
    pub params: ModelParams,
    pub config: TrainConfig,
    pub seed: u64,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    /// `[rows, cols]` for weights, `[len]` for biases.
    pub shape: Vec<usize>,
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: ArchitectureSpec,
    config: TrainConfig,
    epoch: usize,
    seed: u64,
    tensors: Vec<TensorEntry>,
}

fn tensors(params: &ModelParams) -> impl Iterator<Item = (String, Vec<usize>, &[f64])> {
    let weights = params
        .weights
        .iter()
        .enumerate()
        .map(|(k, w)| (format!("weights[{k}]"), vec![w.rows(), w.cols()], w.as_slice()));
    let biases = params
        .biases
        .iter()
        .enumerate()
        .map(|(k, b)| (format!("biases[{k}]"), vec![b.len()], b.as_slice()));
    weights.chain(biases)
}

pub fn to_bytes(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    ckpt.params.check_shapes(&ckpt.arch)?;
    let mut manifest = Vec::new();
    let mut data = Vec::new();
    for (name, shape, values) in tensors(&ckpt.params) {
        manifest.push(TensorEntry {
            name,
            shape,
            offset: data.len() as u64,
            len: values.len() as u64,
        });
        for v in values {
            data.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = serde_json::to_vec(&Header {
        arch: ckpt.arch.clone(),
        config: ckpt.config.clone(),
        epoch: ckpt.epoch,
        seed: ckpt.seed,
        tensors: manifest,
    })?;
    let mut out = Vec::with_capacity(PREAMBLE + header.len() + data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&data);
    Ok(out)
}

fn read_values(data: &[u8], entry: &TensorEntry) -> Result<Vec<f64>> {
    let start = entry.offset as usize;
    let end = start + entry.len as usize * 8;
    let bytes = data.get(start..end).ok_or(Error::LengthMismatch {
        expected: end as u64,
        actual: data.len() as u64,
    })?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Parse and fully validate a checkpoint; nothing is returned on any error.
pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    let magic = bytes.get(..8).unwrap_or(bytes);
    if magic.len() < 8 || &magic[..7] != MAGIC_STEM {
        return Err(Error::BadMagic { found: magic.to_vec() });
    }
    if magic != MAGIC {
        return Err(Error::UnsupportedVersion {
            found: String::from_utf8_lossy(magic).into_owned(),
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
        });
    }
    let len_bytes: [u8; 8] = bytes
        .get(8..PREAMBLE)
        .ok_or(Error::LengthMismatch {
            expected: PREAMBLE as u64,
            actual: bytes.len() as u64,
        })?
        .try_into()
        .expect("8 bytes");
    let header_len = u64::from_le_bytes(len_bytes);
    let header_end = (PREAMBLE as u64).saturating_add(header_len);
    if header_end > bytes.len() as u64 {
        return Err(Error::LengthMismatch {
            expected: header_end,
            actual: bytes.len() as u64,
        });
    }
    let header: Header = serde_json::from_slice(&bytes[PREAMBLE..header_end as usize])
        .map_err(|e| Error::Header(e.to_string()))?;
    let data = &bytes[header_end as usize..];

    let needed: u64 = header.tensors.iter().map(|t| t.len * 8).sum();
    if needed != data.len() as u64 {
        return Err(Error::LengthMismatch {
            expected: header_end + needed,
            actual: bytes.len() as u64,
        });
    }

    let layers = header.arch.depth() + 1;
    let mut params = ModelParams::zeros(&header.arch);
    let mut seen = vec![false; 2 * layers];
    for entry in &header.tensors {
        let values = read_values(data, entry)?;
        let slot = parse_name(&entry.name, layers)?;
        if std::mem::replace(&mut seen[slot.index(layers)], true) {
            return Err(Error::Header(format!("duplicate tensor {}", entry.name)));
        }
        match (slot, entry.shape.as_slice()) {
            (Slot::Weights(k), &[rows, cols]) if rows * cols == values.len() => {
                params.weights[k] = Matrix::from_vec(rows, cols, values)?;
            }
            (Slot::Biases(k), &[len]) if len == values.len() => params.biases[k] = values,
            _ => {
                return Err(Error::Header(format!(
                    "tensor {} has shape {:?} but {} values",
                    entry.name, entry.shape, entry.len
                )))
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Header("manifest does not list every tensor".into()));
    }
    params.check_shapes(&header.arch)?;
    Ok(Checkpoint {
        arch: header.arch,
        params,
        config: header.config,
        seed: header.seed,
        epoch: header.epoch,
    })
}

#[derive(Clone, Copy)]
enum Slot {
    Weights(usize),
    Biases(usize),
}

impl Slot {
    fn index(self, layers: usize) -> usize {
        match self {
            Slot::Weights(k) => k,
            Slot::Biases(k) => layers + k,
        }
    }
}

fn parse_name(name: &str, layers: usize) -> Result<Slot> {
    let parse = |rest: &str| rest.strip_suffix(']').and_then(|n| n.parse::<usize>().ok()).filter(|&k| k < layers);
    let slot = if let Some(rest) = name.strip_prefix("weights[") {
        parse(rest).map(Slot::Weights)
    } else if let Some(rest) = name.strip_prefix("biases[") {
        parse(rest).map(Slot::Biases)
    } else {
        None
    };
    slot.ok_or_else(|| Error::Header(format!("unknown tensor {name:?}")))
}

/// Write via a temporary sibling and rename, so readers never see a
/// half-written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_atomic(path, &to_bytes(ckpt)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    from_bytes(&fs::read(path).at(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bundlescope_core::nn::he_init;

    fn sample() -> Checkpoint {
        let arch = ArchitectureSpec::uniform_residual(3, 3, 2, 4).unwrap();
        Checkpoint {
            params: he_init(&arch, 5),
            arch,
            config: TrainConfig::default(),
            seed: 5,
            epoch: 7,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = from_bytes(&to_bytes(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        for (a, b) in back.params.weights.iter().zip(&c.params.weights) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn truncation_is_a_length_error() {
        let bytes = to_bytes(&sample()).unwrap();
        for cut in [bytes.len() - 1, bytes.len() - 12, 20] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::LengthMismatch { .. })), "cut {cut}");
        }
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(from_bytes(&longer), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn other_version_is_rejected() {
        let mut bytes = to_bytes(&sample()).unwrap();
        bytes[7] = b'9';
        assert!(matches!(from_bytes(&bytes), Err(Error::UnsupportedVersion { .. })));
    }

    #[test]
    fn foreign_file_is_bad_magic() {
        assert!(matches!(from_bytes(b"PK\x03\x04 zip"), Err(Error::BadMagic { .. })));
        assert!(matches!(from_bytes(b""), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn manifest_names_are_checked() {
        assert!(parse_name("weights[2]", 3).is_ok());
        assert!(parse_name("weights[3]", 3).is_err());
        assert!(parse_name("bias[0]", 3).is_err());
    }
}
