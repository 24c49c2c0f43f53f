//! `STRK1` stroke container.
//!
//! ```text
//! "STRK1"            5 bytes
//! count              u32 LE
//! max_steps (= 50)   u32 LE
//! per sample:
//!   label            u8
//!   valid_len        u8
//!   points           max_steps × 2 f32 LE, (row, col) pairs
//! ```

use std::fs;
use std::path::Path;

use crate::data::sequence::SequenceDataset;
use crate::data::stroke::{StrokeDataset, STROKE_STEPS};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"STRK1";

pub fn encode_strokes(data: &StrokeDataset) -> Vec<u8> {
    let seq = &data.sequences;
    let per = STROKE_STEPS * 2;
    let mut out = Vec::with_capacity(13 + seq.len() * (2 + per * 4));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    out.extend_from_slice(&(STROKE_STEPS as u32).to_le_bytes());
    for i in 0..seq.len() {
        out.push(seq.label(i));
        out.push(data.valid_lengths[i]);
        for v in seq.sample(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_strokes(path: impl AsRef<Path>, data: &StrokeDataset) -> Result<()> {
    fs::write(path.as_ref(), encode_strokes(data)).map_err(Error::file(path.as_ref()))?;
    Ok(())
}

pub fn read_strokes(path: impl AsRef<Path>) -> Result<StrokeDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(Error::file(path))?;
    let truncated = |offset: usize, needed: usize| Error::Truncated {
        path: path.to_path_buf(),
        offset: offset as u64,
        needed: needed as u64,
    };
    if bytes.len() < 13 {
        return Err(truncated(bytes.len(), 13 - bytes.len()));
    }
    if &bytes[..5] != MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "missing STRK1 magic".into(),
        });
    }
    let count = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let steps = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    if steps != STROKE_STEPS {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("max-steps {steps}, expected {STROKE_STEPS}"),
        });
    }
    let record = 2 + steps * 2 * 4;
    let need = 13 + count * record;
    if bytes.len() < need {
        return Err(truncated(bytes.len(), need - bytes.len()));
    }
    let mut labels = Vec::with_capacity(count);
    let mut valid = Vec::with_capacity(count);
    let mut inputs = Vec::with_capacity(count * steps * 2);
    for rec in bytes[13..need].chunks_exact(record) {
        labels.push(rec[0]);
        valid.push(rec[1]);
        inputs.extend(
            rec[2..]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap())),
        );
    }
    Ok(StrokeDataset {
        sequences: SequenceDataset::new(steps, 2, inputs, labels)?,
        valid_lengths: valid,
        raw_lengths: None,
    })
}
