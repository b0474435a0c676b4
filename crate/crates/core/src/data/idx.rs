use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// One split of an IDX image/label pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MnistSplit {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `len x rows x cols` pixels.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl MnistSplit {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mnist {
    pub train: MnistSplit,
    pub test: MnistSplit,
}

/// Load the four canonical IDX files from `dir`.
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<Mnist> {
    let dir = dir.as_ref();
    let split = |prefix: &str| -> Result<MnistSplit> {
        let images = dir.join(format!("{prefix}-images-idx3-ubyte"));
        let labels = dir.join(format!("{prefix}-labels-idx1-ubyte"));
        let (rows, cols, pixels, n_images) = load_idx_images(&images)?;
        let labels_v = load_idx_labels(&labels)?;
        if labels_v.len() != n_images {
            return Err(Error::Ingestion {
                file: labels,
                field: "count",
                detail: format!("{} labels but {} images", labels_v.len(), n_images),
            });
        }
        Ok(MnistSplit {
            rows,
            cols,
            pixels,
            labels: labels_v,
        })
    };
    Ok(Mnist {
        train: split("train")?,
        test: split("t10k")?,
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, file: &Path, field: &'static str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Ingestion {
            file: PathBuf::from(file),
            field,
            detail: "file truncated inside the header".into(),
        })
}

/// Parse an IDX3 image file; returns `(rows, cols, pixels, count)`.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>, usize)> {
    let path = path.as_ref();
    let bytes = read(path)?;
    parse_images(&bytes, path)
}

pub(crate) fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>, usize)> {
    let magic = be_u32(bytes, 0, path, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Ingestion {
            file: path.into(),
            field: "magic",
            detail: format!("expected {IMAGE_MAGIC:#010x}, found {magic:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, path, "count")? as usize;
    let rows = be_u32(bytes, 8, path, "rows")? as usize;
    let cols = be_u32(bytes, 12, path, "cols")? as usize;
    let body = &bytes[16..];
    let want = count * rows * cols;
    if body.len() != want {
        return Err(Error::Ingestion {
            file: path.into(),
            field: "count",
            detail: format!(
                "header declares {count} images of {rows}x{cols} ({want} bytes), body has {} bytes",
                body.len()
            ),
        });
    }
    Ok((rows, cols, body.to_vec(), count))
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = read(path)?;
    parse_labels(&bytes, path)
}

pub(crate) fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, path, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Ingestion {
            file: path.into(),
            field: "magic",
            detail: format!("expected {LABEL_MAGIC:#010x}, found {magic:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, path, "count")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Ingestion {
            file: path.into(),
            field: "count",
            detail: format!("header declares {count} labels, body has {} bytes", body.len()),
        });
    }
    if let Some(bad) = body.iter().find(|&&l| l > 9) {
        return Err(Error::Ingestion {
            file: path.into(),
            field: "label",
            detail: format!("label value {bad} outside 0..=9"),
        });
    }
    Ok(body.to_vec())
}
