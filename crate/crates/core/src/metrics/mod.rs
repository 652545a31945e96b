//! Molecule and text evaluation metrics.

mod corpus;
mod fingerprint;
mod text;

pub use corpus::{
    evaluate_corpus, evaluate_lines, CorpusError, MetricReport, MolFormat, MolRecord, Records,
    TaskMode, TextRecord, MOL_COLUMNS, TEXT_COLUMNS,
};
pub use fingerprint::{
    morgan_fp, morgan_ids, path_fp, path_patterns, structural_keys_fp, tanimoto, Fingerprint,
    FingerprintError, FpKind, DEFAULT_MAX_PATH, DEFAULT_NBITS, DEFAULT_RADIUS, STRUCTURAL_KEYS,
};
pub use text::{
    bleu_n, lcs_len, levenshtein, rouge_l, rouge_n, tokenize, TextMetricError, Tokenization,
};

use crate::molgraph::{canonicalize, decode_selfies, parse_smiles, validate_valence, Molecule};

/// Parses a molecule string and accepts it only if every valence is allowed.
pub fn parse_valid(text: &str, format: MolFormat) -> Option<Molecule> {
    let mol = match format {
        MolFormat::Smiles => parse_smiles(text).ok()?,
        MolFormat::Selfies => decode_selfies(text).ok()?,
    };
    validate_valence(&mol).is_empty().then_some(mol)
}

/// 1 if the string parses (or decodes) into a valence-valid molecule.
pub fn validity(text: &str, format: MolFormat) -> u8 {
    u8::from(parse_valid(text, format).is_some())
}

/// 1 if both strings parse and have the same canonical form.
pub fn exact_match(pred: &str, gt: &str) -> u8 {
    exact_match_in(pred, gt, MolFormat::Smiles)
}

pub fn exact_match_in(pred: &str, gt: &str, format: MolFormat) -> u8 {
    match (parse_valid(pred, format), parse_valid(gt, format)) {
        (Some(p), Some(g)) => u8::from(same_structure(&p, &g)),
        _ => 0,
    }
}

fn same_structure(a: &Molecule, b: &Molecule) -> bool {
    canonicalize(a) == canonicalize(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_validity() {
        assert_eq!(exact_match("CCO", "CCO"), 1);
        assert_eq!(exact_match("OCC", "CCO"), 1);
        assert_eq!(exact_match("CCO", "COC"), 0);
        assert_eq!(exact_match("C(", "CCO"), 0);
        assert_eq!(validity("CCO", MolFormat::Smiles), 1);
        assert_eq!(validity("C(", MolFormat::Smiles), 0);
        assert_eq!(validity("C(C)(C)(C)(C)C", MolFormat::Smiles), 0);
        assert_eq!(validity("[C][C][O]", MolFormat::Selfies), 1);
    }
}
