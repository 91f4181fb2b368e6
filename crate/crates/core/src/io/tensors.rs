use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::preprocess::{EncodeConfig, Scaler};
use crate::trace::Dataset;
use crate::{Error, Result};

pub const TENSOR_MAGIC: [u8; 4] = *b"VCFP";
pub const TENSOR_VERSION: u16 = 1;
/// magic(4) + version(2) + rows(4) + cols(4) + reserved(2)
pub const TENSOR_HEADER_LEN: usize = 16;

/// Row-major `f32` matrix as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl TensorFile {
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

pub fn write_tensor_file(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: bad.len(),
        });
    }
    let (n, c) = (count_u32(rows.len())?, count_u32(cols)?);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&TENSOR_MAGIC)?;
    w.write_all(&TENSOR_VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&c.to_le_bytes())?;
    w.write_all(&[0, 0])?;
    for &v in rows.iter().flatten() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn count_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("dimension {n} exceeds u32")))
}

pub fn read_tensor_file(path: &Path) -> Result<TensorFile> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < TENSOR_HEADER_LEN || bytes[..4] != TENSOR_MAGIC {
        return Err(Error::Format("not a VCFP tensor file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != TENSOR_VERSION {
        return Err(Error::Format(format!(
            "tensor version {version} (expected {TENSOR_VERSION})"
        )));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let body = &bytes[TENSOR_HEADER_LEN..];
    if body.len() != rows * cols * 4 {
        return Err(Error::Format(format!(
            "tensor body has {} bytes, header implies {}",
            body.len(),
            rows * cols * 4
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(TensorFile { rows, cols, data })
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for &l in labels {
        w.write_all(&count_u32(l)?.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Format(
            "label file length is not a multiple of 4".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        .collect())
}

/// Encodes `indices` of `dataset` and writes the tensor and label files.
pub fn export_tensors(
    dataset: &Dataset,
    indices: &[usize],
    config: &EncodeConfig,
    scaler: Option<&Scaler>,
    tensor_path: &Path,
    label_path: &Path,
) -> Result<()> {
    config.validate()?;
    let traces = dataset.traces();
    let rows = indices
        .iter()
        .map(|&i| config.row(&traces[i].trace, scaler))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = indices.iter().map(|&i| traces[i].command_id).collect();
    write_tensor_file(tensor_path, &rows)?;
    write_labels(label_path, &labels)
}
