//! Line-oriented SMILES and molecule-text pair files.
//!
//! Blank lines are ignored. A SMILES line holds the SMILES as its first
//! whitespace-separated field; later fields are ignored. A pair line is
//! `smiles<TAB>description`.

use crate::molgraph::{canonicalize, parse_smiles};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OnError {
    /// Count and drop malformed lines.
    #[default]
    Skip,
    /// Stop at the first malformed line.
    Abort,
}

impl FromStr for OnError {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "skip" => Ok(OnError::Skip),
            "abort" => Ok(OnError::Abort),
            other => Err(format!(
                "unknown error policy '{other}' (expected skip or abort)"
            )),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairText {
    Description(String),
    /// Unit-norm embedding.
    Vector(Vec<f32>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    /// Canonical SMILES.
    pub molecule: String,
    pub text: PairText,
}

/// Accepted records plus the 1-based line numbers and reasons of skipped
/// lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub skipped: Vec<(usize, String)>,
}

/// Streams `(line number, parsed record)` for every non-blank line.
pub fn lines_with<R: BufRead, T>(
    reader: R,
    parse: impl Fn(&str) -> Result<T, String>,
) -> impl Iterator<Item = std::io::Result<(usize, Result<T, String>)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(e)),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, parse(l.trim_end_matches('\r'))))),
        })
}

fn collect<T>(
    items: impl Iterator<Item = std::io::Result<(usize, Result<T, String>)>>,
    policy: OnError,
) -> Result<Loaded<T>, LoadError> {
    let mut out = Loaded {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    for item in items {
        match item? {
            (_, Ok(r)) => out.records.push(r),
            (line, Err(reason)) => match policy {
                OnError::Skip => out.skipped.push((line, reason)),
                OnError::Abort => return Err(LoadError::Malformed { line, reason }),
            },
        }
    }
    Ok(out)
}

fn parse_smiles_line(line: &str) -> Result<String, String> {
    let field = line.split_whitespace().next().unwrap_or("");
    parse_smiles(field).map_err(|e| e.to_string())?;
    Ok(field.to_string())
}

fn parse_pair_line(line: &str) -> Result<PairRecord, String> {
    let (smiles, text) = line
        .split_once('\t')
        .ok_or_else(|| "expected 'smiles<TAB>text'".to_string())?;
    let text = text.trim();
    if text.is_empty() {
        return Err("empty description".into());
    }
    let mol = parse_smiles(smiles.trim()).map_err(|e| e.to_string())?;
    Ok(PairRecord {
        molecule: canonicalize(&mol).0,
        text: PairText::Description(text.to_string()),
    })
}

pub fn read_smiles<R: BufRead>(reader: R, policy: OnError) -> Result<Loaded<String>, LoadError> {
    collect(lines_with(reader, parse_smiles_line), policy)
}

pub fn read_pairs<R: BufRead>(reader: R, policy: OnError) -> Result<Loaded<PairRecord>, LoadError> {
    collect(lines_with(reader, parse_pair_line), policy)
}

pub fn load_smiles_file(path: &Path, policy: OnError) -> Result<Loaded<String>, LoadError> {
    read_smiles(BufReader::new(File::open(path)?), policy)
}

pub fn load_pairs_file(path: &Path, policy: OnError) -> Result<Loaded<PairRecord>, LoadError> {
    read_pairs(BufReader::new(File::open(path)?), policy)
}
