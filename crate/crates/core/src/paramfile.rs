//! Named-block parameter container.
//!
//! Layout (all integers u32 little-endian):
//!
//! ```text
//! magic[8] version d_gnn layers block_count
//! per block: name_len name[name_len] ndim dims[ndim] data[prod(dims)] (f32 LE)
//! ```

use crate::numeric::{c, Blocks, Real};
use std::io::{Read, Write};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;
pub const CHECKPOINT_MAGIC: [u8; 8] = *b"HMOLCKPT";
pub const PROJECTOR_MAGIC: [u8; 8] = *b"HMOLPROJ";

#[derive(Debug, thiserror::Error)]
pub enum ParamFileError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 8], expected: [u8; 8] },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("file is truncated")]
    Truncated,
    #[error("block name is not UTF-8")]
    Name,
    #[error("block '{0}' missing or shaped differently from the model")]
    Mismatch(String),
    #[error("file has {found} blocks, model expects {expected}")]
    BlockCount { found: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamFile {
    pub magic: [u8; 8],
    pub d_gnn: u32,
    pub layers: u32,
    pub blocks: Vec<NamedBlock>,
}

impl ParamFile {
    /// Snapshot of `params` stored as f32.
    pub fn from_params<T: Real>(
        magic: [u8; 8],
        d_gnn: usize,
        layers: usize,
        params: &impl Blocks<T>,
    ) -> Self {
        ParamFile {
            magic,
            d_gnn: d_gnn as u32,
            layers: layers as u32,
            blocks: params
                .blocks()
                .into_iter()
                .map(|b| NamedBlock {
                    name: b.name,
                    shape: b.shape,
                    data: b.data.iter().map(|x| x.to_f32().unwrap()).collect(),
                })
                .collect(),
        }
    }

    /// Copies the stored values into `params`. The files's blocks must match
    /// the model's, in order, by name and shape.
    pub fn load_into<T: Real>(&self, params: &mut impl Blocks<T>) -> Result<(), ParamFileError> {
        let targets = params.blocks_mut();
        if targets.len() != self.blocks.len() {
            return Err(ParamFileError::BlockCount {
                found: self.blocks.len(),
                expected: targets.len(),
            });
        }
        for (dst, src) in targets.into_iter().zip(&self.blocks) {
            if dst.name != src.name || dst.shape != src.shape {
                return Err(ParamFileError::Mismatch(dst.name));
            }
            for (d, &s) in dst.data.iter_mut().zip(&src.data) {
                *d = c(s as f64);
            }
        }
        Ok(())
    }

    pub fn block(&self, name: &str) -> Option<&NamedBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.magic);
        for v in [
            FORMAT_VERSION,
            self.d_gnn,
            self.layers,
            self.blocks.len() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for b in &self.blocks {
            out.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
            out.extend_from_slice(b.name.as_bytes());
            out.extend_from_slice(&(b.shape.len() as u32).to_le_bytes());
            for &d in &b.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &x in &b.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], expected_magic: [u8; 8]) -> Result<Self, ParamFileError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 8] = r.take(8)?.try_into().unwrap();
        if magic != expected_magic {
            return Err(ParamFileError::BadMagic {
                found: magic,
                expected: expected_magic,
            });
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(ParamFileError::Version(version));
        }
        let d_gnn = r.u32()?;
        let layers = r.u32()?;
        let count = r.u32()? as usize;
        let mut blocks = Vec::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| ParamFileError::Name)?
                .to_string();
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or(ParamFileError::Truncated)?)?;
            let data = raw
                .chunks_exact(4)
                .map(|ch| f32::from_le_bytes(ch.try_into().unwrap()))
                .collect();
            blocks.push(NamedBlock { name, shape, data });
        }
        Ok(ParamFile {
            magic,
            d_gnn,
            layers,
            blocks,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ParamFileError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path, expected_magic: [u8; 8]) -> Result<Self, ParamFileError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, expected_magic)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ParamFileError> {
        let end = self.pos.checked_add(n).ok_or(ParamFileError::Truncated)?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or(ParamFileError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ParamFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{init_params, GnnDims, GnnParams};

    #[test]
    fn round_trip_is_bit_exact() {
        let p: GnnParams<f32> = init_params(4, GnnDims::new(5, 2));
        let file = ParamFile::from_params(CHECKPOINT_MAGIC, 5, 2, &p);
        let bytes = file.to_bytes();
        let back = ParamFile::from_bytes(&bytes, CHECKPOINT_MAGIC).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_bytes(), bytes);
        let mut q = p.zeros_like();
        back.load_into(&mut q).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rejects_bad_input() {
        let p: GnnParams<f32> = init_params(4, GnnDims::new(3, 1));
        let bytes = ParamFile::from_params(CHECKPOINT_MAGIC, 3, 1, &p).to_bytes();
        assert!(matches!(
            ParamFile::from_bytes(&bytes, PROJECTOR_MAGIC),
            Err(ParamFileError::BadMagic { .. })
        ));
        assert!(matches!(
            ParamFile::from_bytes(&bytes[..bytes.len() - 1], CHECKPOINT_MAGIC),
            Err(ParamFileError::Truncated)
        ));
        let mut other: GnnParams<f32> = init_params(4, GnnDims::new(4, 1));
        let file = ParamFile::from_bytes(&bytes, CHECKPOINT_MAGIC).unwrap();
        assert!(matches!(
            file.load_into(&mut other),
            Err(ParamFileError::Mismatch(_))
        ));
    }
}
