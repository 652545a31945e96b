//! Line-aligned corpus evaluation.

use super::fingerprint::{
    morgan_fp, path_fp, structural_keys_fp, tanimoto, DEFAULT_MAX_PATH, DEFAULT_NBITS,
    DEFAULT_RADIUS,
};
use super::text::{bleu_n, levenshtein, rouge_l, rouge_n, tokenize, TextMetricError, Tokenization};
use super::{parse_valid, same_structure};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write;
use std::path::Path;
use std::str::FromStr;

/// Summary columns for molecule-generation tasks.
pub const MOL_COLUMNS: [&str; 7] = [
    "BLEU",
    "Exact",
    "Levenshtein",
    "Validity",
    "MACCS",
    "RDK",
    "Morgan",
];
/// Summary columns for captioning tasks.
pub const TEXT_COLUMNS: [&str; 5] = ["BLEU-2", "BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MolFormat {
    Smiles,
    Selfies,
}

impl FromStr for MolFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smiles" => Ok(MolFormat::Smiles),
            "selfies" => Ok(MolFormat::Selfies),
            other => Err(format!("unknown molecule format '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskMode {
    Molecule(MolFormat),
    Text,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("no lines to evaluate")]
    Empty,
    #[error("{pred} prediction lines but {gt} reference lines")]
    LineCount { pred: usize, gt: usize },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        source: TextMetricError,
    },
}

/// Per-line molecule scores. Similarities are present only when both sides
/// are valid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MolRecord {
    pub line: usize,
    pub bleu: f64,
    pub exact: u8,
    pub levenshtein: usize,
    pub validity: u8,
    pub maccs: Option<f64>,
    pub rdk: Option<f64>,
    pub morgan: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TextRecord {
    pub line: usize,
    pub bleu2: f64,
    pub bleu4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Records {
    Molecule(Vec<MolRecord>),
    Text(Vec<TextRecord>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub records: Records,
    /// Column name and corpus mean, in table order.
    pub summary: Vec<(&'static str, f64)>,
}

impl MetricReport {
    pub fn get(&self, column: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|(c, _)| *c == column)
            .map(|&(_, v)| v)
    }

    /// Header line plus one row of means.
    pub fn summary_csv(&self) -> String {
        let head: Vec<&str> = self.summary.iter().map(|(c, _)| *c).collect();
        let row: Vec<String> = self
            .summary
            .iter()
            .map(|(_, v)| format!("{v:.6}"))
            .collect();
        format!("{}\n{}\n", head.join(","), row.join(","))
    }

    /// One JSON object per line.
    pub fn records_jsonl(&self) -> String {
        let mut out = String::new();
        match &self.records {
            Records::Molecule(r) => r
                .iter()
                .for_each(|x| writeln!(out, "{}", serde_json::to_string(x).unwrap()).unwrap()),
            Records::Text(r) => r
                .iter()
                .for_each(|x| writeln!(out, "{}", serde_json::to_string(x).unwrap()).unwrap()),
        }
        out
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn mol_record(
    line: usize,
    pred: &str,
    gt: &str,
    format: MolFormat,
) -> Result<MolRecord, TextMetricError> {
    let bleu = bleu_n(
        &tokenize(pred, Tokenization::Chars),
        &tokenize(gt, Tokenization::Chars),
        4,
    )?;
    let p = parse_valid(pred, format);
    let g = parse_valid(gt, format);
    let mut rec = MolRecord {
        line,
        bleu,
        exact: 0,
        levenshtein: levenshtein(pred, gt),
        validity: u8::from(p.is_some()),
        maccs: None,
        rdk: None,
        morgan: None,
    };
    if let (Some(p), Some(g)) = (p, g) {
        rec.exact = u8::from(same_structure(&p, &g));
        let sim = |a, b| tanimoto(&a, &b).expect("same kind");
        rec.maccs = Some(sim(structural_keys_fp(&p), structural_keys_fp(&g)));
        rec.rdk = Some(sim(
            path_fp(&p, DEFAULT_MAX_PATH, DEFAULT_NBITS),
            path_fp(&g, DEFAULT_MAX_PATH, DEFAULT_NBITS),
        ));
        rec.morgan = Some(sim(
            morgan_fp(&p, DEFAULT_RADIUS, DEFAULT_NBITS),
            morgan_fp(&g, DEFAULT_RADIUS, DEFAULT_NBITS),
        ));
    }
    Ok(rec)
}

fn text_record(line: usize, pred: &str, gt: &str) -> Result<TextRecord, TextMetricError> {
    let c = tokenize(pred, Tokenization::Whitespace);
    let r = tokenize(gt, Tokenization::Whitespace);
    Ok(TextRecord {
        line,
        bleu2: bleu_n(&c, &r, 2)?,
        bleu4: bleu_n(&c, &r, 4)?,
        rouge1: rouge_n(&c, &r, 1)?,
        rouge2: rouge_n(&c, &r, 2)?,
        rouge_l: rouge_l(&c, &r)?,
    })
}

/// Scores aligned lines. Line numbers in records are 1-based. Fingerprint
/// similarities are averaged over lines where both sides are valid.
pub fn evaluate_lines(
    preds: &[&str],
    gts: &[&str],
    mode: TaskMode,
) -> Result<MetricReport, CorpusError> {
    if preds.len() != gts.len() {
        return Err(CorpusError::LineCount {
            pred: preds.len(),
            gt: gts.len(),
        });
    }
    if preds.is_empty() {
        return Err(CorpusError::Empty);
    }
    let wrap = |i: usize| {
        move |source| CorpusError::Line {
            line: i + 1,
            source,
        }
    };
    match mode {
        TaskMode::Molecule(format) => {
            let recs = preds
                .par_iter()
                .zip(gts)
                .enumerate()
                .map(|(i, (p, g))| mol_record(i + 1, p, g, format).map_err(wrap(i)))
                .collect::<Result<Vec<_>, _>>()?;
            let summary = vec![
                ("BLEU", mean(recs.iter().map(|r| r.bleu))),
                ("Exact", mean(recs.iter().map(|r| r.exact as f64))),
                (
                    "Levenshtein",
                    mean(recs.iter().map(|r| r.levenshtein as f64)),
                ),
                ("Validity", mean(recs.iter().map(|r| r.validity as f64))),
                ("MACCS", mean(recs.iter().filter_map(|r| r.maccs))),
                ("RDK", mean(recs.iter().filter_map(|r| r.rdk))),
                ("Morgan", mean(recs.iter().filter_map(|r| r.morgan))),
            ];
            Ok(MetricReport {
                records: Records::Molecule(recs),
                summary,
            })
        }
        TaskMode::Text => {
            let recs = preds
                .par_iter()
                .zip(gts)
                .enumerate()
                .map(|(i, (p, g))| text_record(i + 1, p, g).map_err(wrap(i)))
                .collect::<Result<Vec<_>, _>>()?;
            let summary = vec![
                ("BLEU-2", mean(recs.iter().map(|r| r.bleu2))),
                ("BLEU-4", mean(recs.iter().map(|r| r.bleu4))),
                ("ROUGE-1", mean(recs.iter().map(|r| r.rouge1))),
                ("ROUGE-2", mean(recs.iter().map(|r| r.rouge2))),
                ("ROUGE-L", mean(recs.iter().map(|r| r.rouge_l))),
            ];
            Ok(MetricReport {
                records: Records::Text(recs),
                summary,
            })
        }
    }
}

fn read_lines(path: &Path) -> Result<String, CorpusError> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn evaluate_corpus(
    pred: &Path,
    gt: &Path,
    mode: TaskMode,
) -> Result<MetricReport, CorpusError> {
    let p = read_lines(pred)?;
    let g = read_lines(gt)?;
    let pl: Vec<&str> = p.lines().collect();
    let gl: Vec<&str> = g.lines().collect();
    evaluate_lines(&pl, &gl, mode)
}
