//! Dataset ingestion: cleaning, line-oriented loaders, the hashed text
//! embedding stub, and a synthetic molecule generator.

mod embed;
mod load;
pub mod synth;

pub use embed::{
    parse_sidecar, read_sidecar, sidecar_bytes, text_embed_stub, write_sidecar, EmbedError,
    SidecarError, MIN_TEXT_DIM,
};
pub use load::{
    lines_with, load_pairs_file, load_smiles_file, read_pairs, read_smiles, LoadError, Loaded,
    OnError, PairRecord, PairText,
};

use crate::molgraph::{canonicalize, parse_smiles, validate_valence, Molecule};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CleanConfig {
    pub min_heavy_atoms: usize,
    pub keep_largest_fragment: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_heavy_atoms: 5,
            keep_largest_fragment: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Rejection {
    Parse(String),
    TooSmall { heavy_atoms: usize },
    Valence { atom: usize },
}

impl Rejection {
    /// Short reason key used in cleaning reports.
    pub fn reason(&self) -> &'static str {
        match self {
            Rejection::Parse(_) => "parse",
            Rejection::TooSmall { .. } => "size",
            Rejection::Valence { .. } => "valence",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Parse(m) => write!(f, "unparseable: {m}"),
            Rejection::TooSmall { heavy_atoms } => write!(f, "only {heavy_atoms} heavy atoms"),
            Rejection::Valence { atom } => write!(f, "valence violation at atom {atom}"),
        }
    }
}

/// A single bracket atom such as `[Na+]`.
fn is_bracket_ion(frag: &str) -> bool {
    frag.len() > 2 && frag.starts_with('[') && frag.ends_with(']') && !frag[1..].contains('[')
}

/// Parses `smiles` into fragments. When the whole string does not parse,
/// it is split at `.` and single bracket atoms outside the supported
/// element set are dropped as free ions.
fn parse_fragments(smiles: &str) -> Result<Vec<Molecule>, Rejection> {
    match parse_smiles(smiles) {
        Ok(mol) => Ok(mol.fragments().iter().map(|f| mol.subgraph(f)).collect()),
        Err(whole) => {
            if !smiles.contains('.') {
                return Err(Rejection::Parse(whole.to_string()));
            }
            let mut out = Vec::new();
            for frag in smiles.split('.') {
                match parse_smiles(frag) {
                    Ok(m) => out.push(m),
                    Err(_) if is_bracket_ion(frag) => {}
                    Err(_) => return Err(Rejection::Parse(whole.to_string())),
                }
            }
            if out.is_empty() {
                return Err(Rejection::Parse(whole.to_string()));
            }
            Ok(out)
        }
    }
}

/// Keeps the largest fragment (by heavy atoms, ties to the first), enforces
/// the size and valence rules, and returns the canonical SMILES.
pub fn clean(smiles: &str, cfg: &CleanConfig) -> Result<String, Rejection> {
    let frags = parse_fragments(smiles.trim())?;
    let largest = frags
        .iter()
        .enumerate()
        .max_by_key(|(i, m)| (m.heavy_atom_count(), std::cmp::Reverse(*i)))
        .map(|(_, m)| m)
        .ok_or_else(|| Rejection::Parse("empty input".into()))?;
    let heavy = largest.heavy_atom_count();
    if heavy < cfg.min_heavy_atoms {
        return Err(Rejection::TooSmall { heavy_atoms: heavy });
    }
    let kept = if cfg.keep_largest_fragment {
        largest.clone()
    } else {
        parse_smiles(smiles.trim()).map_err(|e| Rejection::Parse(e.to_string()))?
    };
    if let Some(v) = validate_valence(&kept).first() {
        return Err(Rejection::Valence { atom: v.atom });
    }
    Ok(canonicalize(&kept).0)
}

/// Counts of accepted inputs and of rejections by reason.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CleanReport {
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
}

impl CleanReport {
    pub fn record(&mut self, outcome: &Result<String, Rejection>) {
        match outcome {
            Ok(_) => self.accepted += 1,
            Err(r) => *self.rejected.entry(r.reason().to_string()).or_insert(0) += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.accepted + self.rejected.values().sum::<usize>()
    }
}

/// Cleans every input in parallel; results keep input order.
pub fn clean_all(
    inputs: &[String],
    cfg: &CleanConfig,
) -> (Vec<Result<String, Rejection>>, CleanReport) {
    use rayon::prelude::*;
    let out: Vec<_> = inputs.par_iter().map(|s| clean(s, cfg)).collect();
    let mut report = CleanReport::default();
    out.iter().for_each(|o| report.record(o));
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let cfg = CleanConfig::default();
        assert_eq!(
            clean("CCO", &cfg),
            Err(Rejection::TooSmall { heavy_atoms: 3 })
        );
        assert_eq!(
            clean("CC(=O)O.[Na+]", &cfg),
            Err(Rejection::TooSmall { heavy_atoms: 4 })
        );
        let ok = clean("CCc1ccccc1", &cfg).unwrap();
        assert_eq!(clean(&ok, &cfg).unwrap(), ok);
        assert_eq!(clean("c1ccccc1CC.[Cl-]", &cfg).unwrap(), ok);
        assert!(matches!(clean("C(", &cfg), Err(Rejection::Parse(_))));
        assert_eq!(
            clean("CC(C)(C)(C)(C)CC", &cfg),
            Err(Rejection::Valence { atom: 1 })
        );
    }

    #[test]
    fn largest_fragment_tie_goes_first() {
        let cfg = CleanConfig {
            min_heavy_atoms: 1,
            ..Default::default()
        };
        assert_eq!(clean("CCO.CCN", &cfg).unwrap(), clean("CCO", &cfg).unwrap());
        assert_eq!(clean("CCN.CCO", &cfg).unwrap(), clean("CCN", &cfg).unwrap());
    }

    #[test]
    fn report_counts() {
        let inputs: Vec<String> = ["CCO", "CCc1ccccc1", "C(", "OCC1CCCCC1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (_, r) = clean_all(&inputs, &CleanConfig::default());
        assert_eq!(r.accepted, 2);
        assert_eq!(r.rejected["size"], 1);
        assert_eq!(r.rejected["parse"], 1);
        assert_eq!(r.total(), 4);
    }
}
