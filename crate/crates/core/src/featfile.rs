//! Binary container for per-molecule level features.
//!
//! Header: magic `HGFEATS1`, version `u32`, record count `u32`, width
//! `u32`. Each record: `a: u32`, `b: u32`, then `(a + b + 1) * width` f32
//! in the order node rows, motif rows, graph vector. Little-endian.

use crate::encoder::LevelFeatures;
use ndarray::{Array1, Array2};
use std::path::Path;

pub const FEATURES_MAGIC: [u8; 8] = *b"HGFEATS1";
pub const FEATURES_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FeatureFileError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a features file")]
    BadMagic,
    #[error("unsupported features file version {0}")]
    Version(u32),
    #[error("features file is truncated or has trailing bytes")]
    Length,
    #[error("record {0} has width {1}, file width is {2}")]
    Width(usize, usize, usize),
}

pub fn features_bytes(items: &[LevelFeatures<f32>], d: usize) -> Result<Vec<u8>, FeatureFileError> {
    let mut out = Vec::new();
    out.extend_from_slice(&FEATURES_MAGIC);
    out.extend_from_slice(&FEATURES_VERSION.to_le_bytes());
    out.extend_from_slice(&(items.len() as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for (i, f) in items.iter().enumerate() {
        if f.dim() != d {
            return Err(FeatureFileError::Width(i, f.dim(), d));
        }
        out.extend_from_slice(&(f.a() as u32).to_le_bytes());
        out.extend_from_slice(&(f.b() as u32).to_le_bytes());
        for x in f
            .node_mat
            .iter()
            .chain(f.motif_mat.iter())
            .chain(f.graph_vec.iter())
        {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], FeatureFileError> {
        let end = self.pos.checked_add(n).ok_or(FeatureFileError::Length)?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or(FeatureFileError::Length)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, FeatureFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f32>, FeatureFileError> {
        let len = n.checked_mul(4).ok_or(FeatureFileError::Length)?;
        Ok(self
            .take(len)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Returns `(width, records)`.
pub fn features_from_bytes(
    bytes: &[u8],
) -> Result<(usize, Vec<LevelFeatures<f32>>), FeatureFileError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8).map_err(|_| FeatureFileError::BadMagic)? != FEATURES_MAGIC {
        return Err(FeatureFileError::BadMagic);
    }
    let version = c.u32()? as u32;
    if version != FEATURES_VERSION {
        return Err(FeatureFileError::Version(version));
    }
    let count = c.u32()?;
    let d = c.u32()?;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let a = c.u32()?;
        let b = c.u32()?;
        let node = c.floats(a * d)?;
        let motif = c.floats(b * d)?;
        let graph = c.floats(d)?;
        out.push(LevelFeatures {
            node_mat: Array2::from_shape_vec((a, d), node).unwrap(),
            motif_mat: Array2::from_shape_vec((b, d), motif).unwrap(),
            graph_vec: Array1::from(graph),
        });
    }
    if c.pos != bytes.len() {
        return Err(FeatureFileError::Length);
    }
    Ok((d, out))
}

pub fn write_features(
    path: &Path,
    items: &[LevelFeatures<f32>],
    d: usize,
) -> Result<(), FeatureFileError> {
    std::fs::write(path, features_bytes(items, d)?)?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<(usize, Vec<LevelFeatures<f32>>), FeatureFileError> {
    features_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip() {
        let f = LevelFeatures {
            node_mat: array![[1.0f32, 2.0], [3.0, 4.0]],
            motif_mat: array![[5.0, 6.0]],
            graph_vec: array![7.0, -0.0],
        };
        let g = LevelFeatures::zeros(1, 0, 2);
        let bytes = features_bytes(&[f.clone(), g.clone()], 2).unwrap();
        let (d, back) = features_from_bytes(&bytes).unwrap();
        assert_eq!(d, 2);
        assert_eq!(back, vec![f, g]);
        assert_eq!(features_bytes(&back, 2).unwrap(), bytes);
        assert!(matches!(
            features_from_bytes(&bytes[..bytes.len() - 1]),
            Err(FeatureFileError::Length)
        ));
        assert!(matches!(
            features_from_bytes(b"nope"),
            Err(FeatureFileError::BadMagic)
        ));
    }
}
