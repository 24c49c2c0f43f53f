//! MNIST IDX container: big-endian magic, dimensions, then raw bytes.
//! Gzip-compressed files are inflated transparently.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Grayscale images scaled to `[0, 1]` with their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImages {
    pub rows: usize,
    pub cols: usize,
    /// `len × rows × cols`, row-major per image.
    pub pixels: Vec<f32>,
    pub labels: Vec<u8>,
}

impl LabeledImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }

    /// First `n` items (all of them when `n` exceeds the count).
    pub fn truncated(mut self, n: usize) -> Self {
        let n = n.min(self.len());
        self.labels.truncate(n);
        self.pixels.truncate(n * self.rows * self.cols);
        self
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(Error::file(path))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: format!("gzip: {e}"),
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Cursor<'a> {
    path: PathBuf,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                path: self.path.clone(),
                offset: self.bytes.len() as u64,
                needed: (self.pos + n - self.bytes.len()) as u64,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn header(path: &Path, bytes: &[u8], magic: u32) -> Result<(Vec<usize>, usize)> {
    let mut cur = Cursor {
        path: path.to_path_buf(),
        bytes,
        pos: 0,
    };
    let found = cur.u32()?;
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found,
            expected: magic,
        });
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|_| cur.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = dims.iter().product();
    cur.take(count)?;
    Ok((dims, cur.pos - count))
}

/// Loads an IDX image file and its label file.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<LabeledImages> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let img_bytes = read_bytes(ip)?;
    let lbl_bytes = read_bytes(lp)?;
    let (idims, ioff) = header(ip, &img_bytes, IMAGES_MAGIC)?;
    let (ldims, loff) = header(lp, &lbl_bytes, LABELS_MAGIC)?;
    if idims[0] != ldims[0] {
        return Err(Error::CountMismatch {
            images: idims[0],
            labels: ldims[0],
        });
    }
    let n = idims[0];
    let (rows, cols) = (idims[1], idims[2]);
    let labels = lbl_bytes[loff..loff + n].to_vec();
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::Format {
            path: lp.to_path_buf(),
            message: format!("label {bad} outside 0..=9"),
        });
    }
    let pixels = img_bytes[ioff..ioff + n * rows * cols]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    Ok(LabeledImages {
        rows,
        cols,
        pixels,
        labels,
    })
}

/// Writes raw bytes in IDX layout. Used for fixtures and round trips.
pub fn write_idx_images(
    path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    bytes: &[u8],
) -> Result<()> {
    let n = bytes.len() / (rows * cols);
    let mut out = IMAGES_MAGIC.to_be_bytes().to_vec();
    for d in [n, rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(bytes);
    fs::write(path.as_ref(), out).map_err(Error::file(path.as_ref()))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut out = LABELS_MAGIC.to_be_bytes().to_vec();
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path.as_ref(), out).map_err(Error::file(path.as_ref()))
}

/// Standard file names under an MNIST directory, preferring uncompressed
/// copies and falling back to `.gz`.
pub fn mnist_paths(dir: impl AsRef<Path>, train: bool) -> (PathBuf, PathBuf) {
    let dir = dir.as_ref();
    let prefix = if train { "train" } else { "t10k" };
    let pick = |stem: String| {
        let plain = dir.join(&stem);
        if plain.exists() {
            plain
        } else {
            dir.join(format!("{stem}.gz"))
        }
    };
    (
        pick(format!("{prefix}-images-idx3-ubyte")),
        pick(format!("{prefix}-labels-idx1-ubyte")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn all_zero_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        write_idx_images(&ip, 28, 28, &vec![0u8; 3 * 784]).unwrap();
        write_idx_labels(&lp, &[0, 1, 2]).unwrap();
        let d = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.pixels.iter().all(|&p| p == 0.0));
        assert_eq!(d.labels, vec![0, 1, 2]);
    }

    #[test]
    fn error_paths() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        write_idx_images(&ip, 28, 28, &vec![7u8; 2 * 784]).unwrap();
        write_idx_labels(&lp, &[1, 2, 3]).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(Error::CountMismatch {
                images: 2,
                labels: 3
            })
        ));

        // swapped files: wrong magic
        assert!(matches!(load_idx(&lp, &ip), Err(Error::BadMagic { .. })));

        write_idx_labels(&lp, &[1, 2]).unwrap();
        let full = fs::read(&ip).unwrap();
        fs::write(&ip, &full[..full.len() - 10]).unwrap();
        match load_idx(&ip, &lp) {
            Err(e @ Error::Truncated { offset, needed, .. }) => {
                assert_eq!(offset as usize, full.len() - 10);
                assert_eq!(needed, 10);
                assert!(e.to_string().contains("offset"));
            }
            other => panic!("expected truncation, got {other:?}"),
        }
        fs::write(&ip, &full[..6]).unwrap();
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Truncated { .. })));
    }

    #[test]
    fn gzip_is_inflated() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l.gz"));
        write_idx_images(&ip, 2, 2, &[0, 255, 51, 102]).unwrap();
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&LABELS_MAGIC.to_be_bytes()).unwrap();
        enc.write_all(&1u32.to_be_bytes()).unwrap();
        enc.write_all(&[9]).unwrap();
        fs::write(&lp, enc.finish().unwrap()).unwrap();
        let d = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.labels, vec![9]);
        assert_eq!(d.pixels, vec![0.0, 1.0, 0.2, 0.4]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn writer_round_trip(
            n in 1usize..5,
            rows in 1usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::NoiseRng::new(seed, 0);
            let bytes: Vec<u8> = (0..n * rows * cols).map(|_| rng.next_u64() as u8).collect();
            let labels: Vec<u8> = (0..n).map(|_| (rng.next_u64() % 10) as u8).collect();
            let dir = tempfile::tempdir().unwrap();
            let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
            write_idx_images(&ip, rows, cols, &bytes).unwrap();
            write_idx_labels(&lp, &labels).unwrap();
            let d = load_idx(&ip, &lp).unwrap();
            prop_assert_eq!((d.rows, d.cols), (rows, cols));
            prop_assert_eq!(d.labels, labels);
            let back: Vec<u8> = d.pixels.iter().map(|&p| (p * 255.0).round() as u8).collect();
            prop_assert_eq!(back, bytes);
        }
    }
}
