//! `NRNN1` checkpoint files.
//!
//! All integers little-endian:
//!
//! ```text
//! "NRNN1"          5 bytes
//! version          u16 (= 1)
//! arch tag         u8  (1 lstm-rows, 2 lstm-strokes, 3 rnn-rows, 0 custom)
//! cell kind        u8  (0 LSTM, 1 RNN)
//! steps, input, hidden, classes   4 × u32
//! sigma_train      f32
//! seed             u64
//! epoch            u32
//! param count      u32
//! parameters       count × f32, in `Model::tensors` order
//! crc32            u32 over every preceding byte
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Arch, CellKind, Dims, Model};

pub const MAGIC: &[u8; 5] = b"NRNN1";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 5 + 2 + 1 + 1 + 16 + 4 + 8 + 4 + 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// `None` for models whose dims match no preset.
    pub arch: Option<Arch>,
    pub sigma_train: f32,
    pub seed: u64,
    pub epoch: u32,
    pub model: Model<f32>,
}

impl Checkpoint {
    pub fn new(model: Model<f32>, sigma_train: f64, seed: u64, epoch: u32) -> Self {
        let arch = Arch::ALL
            .into_iter()
            .find(|a| a.kind() == model.kind() && a.dims() == model.dims());
        Self {
            arch,
            sigma_train: sigma_train as f32,
            seed,
            epoch,
            model,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let d = self.model.dims();
        let params = self.model.to_flat();
        let mut out = Vec::with_capacity(HEADER_LEN + params.len() * 4 + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.arch.map_or(0, Arch::tag));
        out.push(match self.model.kind() {
            CellKind::Lstm => 0,
            CellKind::Rnn => 1,
        });
        for v in [d.steps, d.input, d.hidden, d.classes] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.sigma_train.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for p in params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: String| Error::CorruptCheckpoint(m);
        if bytes.len() < 7 || &bytes[..5] != MAGIC {
            return Err(corrupt("missing NRNN1 magic".into()));
        }
        let version = u16::from_le_bytes([bytes[5], bytes[6]]);
        if version != VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: VERSION,
            });
        }
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let arch_tag = bytes[7];
        let kind = match bytes[8] {
            0 => CellKind::Lstm,
            1 => CellKind::Rnn,
            k => return Err(corrupt(format!("unknown cell kind {k}"))),
        };
        let dims = Dims::new(
            u32_at(9) as usize,
            u32_at(13) as usize,
            u32_at(17) as usize,
            u32_at(21) as usize,
        )
        .map_err(|e| corrupt(e.to_string()))?;
        let sigma_train = f32::from_le_bytes(bytes[25..29].try_into().unwrap());
        let seed = u64::from_le_bytes(bytes[29..37].try_into().unwrap());
        let epoch = u32_at(37);
        let count = u32_at(41) as usize;
        if count != kind.param_count(&dims) {
            return Err(corrupt(format!(
                "header declares {count} parameters, architecture needs {}",
                kind.param_count(&dims)
            )));
        }
        let expected_len = HEADER_LEN + count * 4 + 4;
        if bytes.len() != expected_len {
            return Err(corrupt(format!(
                "file is {} bytes, expected {expected_len}",
                bytes.len()
            )));
        }
        let body = &bytes[..expected_len - 4];
        let stored = u32::from_le_bytes(bytes[expected_len - 4..].try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }
        let arch = match arch_tag {
            0 => None,
            t => Some(Arch::from_tag(t).ok_or_else(|| corrupt(format!("unknown arch tag {t}")))?),
        };
        if let Some(a) = arch {
            if a.kind() != kind || a.dims() != dims {
                return Err(corrupt(format!("arch tag {a} disagrees with stored dims")));
            }
        }
        let params: Vec<f32> = body[HEADER_LEN..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mut model = Model::zeros(kind, dims);
        model.load_flat(&params)?;
        Ok(Self {
            arch,
            sigma_train,
            seed,
            epoch,
            model,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), ckpt.encode()).map_err(Error::file(path.as_ref()))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::decode(&fs::read(path.as_ref()).map_err(Error::file(path.as_ref()))?)
}
