//! Hashed bag-of-words text vectors and the embedding sidecar format.

use crate::fnv::{extend, fnv1a64};
use std::path::Path;

pub const MIN_TEXT_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("text dimension {0} is below the minimum of 8")]
    DimTooSmall(usize),
}

/// Lowercased whitespace tokens are hashed with a seeded FNV-1a; the hash
/// picks coordinate `h mod d_text` and its top bit picks the sign. The sum
/// is L2-normalized. Empty input, or tokens that cancel exactly, give the
/// first basis vector.
pub fn text_embed_stub(text: &str, d_text: usize, seed: u64) -> Result<Vec<f32>, EmbedError> {
    if d_text < MIN_TEXT_DIM {
        return Err(EmbedError::DimTooSmall(d_text));
    }
    let base = fnv1a64(&seed.to_le_bytes());
    let mut v = vec![0f64; d_text];
    for tok in text.split_whitespace() {
        let h = extend(base, tok.to_lowercase().as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[(h % d_text as u64) as usize] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut e = vec![0f32; d_text];
        e[0] = 1.0;
        return Ok(e);
    }
    Ok(v.iter().map(|x| (x / norm) as f32).collect())
}

#[derive(Debug, thiserror::Error)]
pub enum SidecarError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar length does not match its header")]
    Length,
    #[error("vector {0} has the wrong dimension")]
    Ragged(usize),
    #[error("vector {0} is zero or not finite")]
    BadVector(usize),
}

/// Header `count: u32, d_text: u32`, then `count * d_text` f32, all
/// little-endian. Vectors map to records by position.
pub fn sidecar_bytes(vectors: &[Vec<f32>], d_text: usize) -> Result<Vec<u8>, SidecarError> {
    let mut out = Vec::with_capacity(8 + 4 * vectors.len() * d_text);
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(d_text as u32).to_le_bytes());
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != d_text {
            return Err(SidecarError::Ragged(i));
        }
        v.iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    }
    Ok(out)
}

pub fn write_sidecar(path: &Path, vectors: &[Vec<f32>], d_text: usize) -> Result<(), SidecarError> {
    std::fs::write(path, sidecar_bytes(vectors, d_text)?)?;
    Ok(())
}

/// Reads a sidecar and L2-normalizes each vector. Returns `(d_text, vectors)`.
pub fn parse_sidecar(bytes: &[u8]) -> Result<(usize, Vec<Vec<f32>>), SidecarError> {
    if bytes.len() < 8 {
        return Err(SidecarError::Length);
    }
    let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if Some(bytes.len())
        != count
            .checked_mul(d)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(8))
    {
        return Err(SidecarError::Length);
    }
    let mut out = Vec::with_capacity(count);
    for (i, chunk) in bytes[8..]
        .chunks_exact(4 * d.max(1))
        .take(count)
        .enumerate()
    {
        let v: Vec<f32> = chunk
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let norm = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(SidecarError::BadVector(i));
        }
        out.push(v.iter().map(|&x| (x as f64 / norm) as f32).collect());
    }
    if out.len() != count {
        return Err(SidecarError::BadVector(out.len()));
    }
    Ok((d, out))
}

pub fn read_sidecar(path: &Path) -> Result<(usize, Vec<Vec<f32>>), SidecarError> {
    parse_sidecar(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f32], b: &[f32]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (*x as f64) * (*y as f64))
            .sum()
    }

    #[test]
    fn stub_properties() {
        let a = text_embed_stub("The molecule is an Acid", 256, 0).unwrap();
        let b = text_embed_stub("the molecule is an acid", 256, 0).unwrap();
        assert_eq!(a, b);
        assert!((cos(&a, &a) - 1.0).abs() < 1e-6);
        let e = text_embed_stub("", 16, 3).unwrap();
        assert_eq!(e[0], 1.0);
        assert_eq!(text_embed_stub("x", 4, 0), Err(EmbedError::DimTooSmall(4)));
        assert_ne!(
            a,
            text_embed_stub("the molecule is an acid", 256, 1).unwrap()
        );
    }

    #[test]
    fn disjoint_texts_are_nearly_orthogonal() {
        let n = 200;
        let mut small = 0;
        let mut total = 0.0;
        for i in 0..n {
            let t1: Vec<String> = (0..5).map(|k| format!("a{i}w{k}")).collect();
            let t2: Vec<String> = (0..5).map(|k| format!("b{i}w{k}")).collect();
            let c = cos(
                &text_embed_stub(&t1.join(" "), 256, 0).unwrap(),
                &text_embed_stub(&t2.join(" "), 256, 0).unwrap(),
            )
            .abs();
            total += c;
            small += usize::from(c < 0.2);
        }
        let mean = total / n as f64;
        assert!(mean < 0.05, "mean |cos| {mean}");
        assert!(small as f64 / n as f64 >= 0.85, "{small}/{n}");
    }

    #[test]
    fn sidecar_round_trip() {
        let v = vec![vec![3.0f32, 4.0], vec![0.0, 2.0]];
        let bytes = sidecar_bytes(&v, 2).unwrap();
        let (d, back) = parse_sidecar(&bytes).unwrap();
        assert_eq!(d, 2);
        assert_eq!(back, vec![vec![0.6, 0.8], vec![0.0, 1.0]]);
        assert!(matches!(
            parse_sidecar(&bytes[..12]),
            Err(SidecarError::Length)
        ));
        assert!(matches!(sidecar_bytes(&v, 3), Err(SidecarError::Ragged(0))));
    }
}
