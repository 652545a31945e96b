//! Edit distance and n-gram overlap scores.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextMetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tokenization {
    /// Lowercased whitespace tokens, for captions.
    Whitespace,
    /// One token per character, for molecule strings.
    Chars,
}

pub fn tokenize(text: &str, mode: Tokenization) -> Vec<String> {
    match mode {
        Tokenization::Whitespace => text.split_whitespace().map(str::to_lowercase).collect(),
        Tokenization::Chars => text.chars().map(String::from).collect(),
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *m.entry(g).or_insert(0) += 1;
        }
    }
    m
}

/// (clipped overlap, candidate n-gram total, reference n-gram total)
fn overlap(cand: &[String], refr: &[String], n: usize) -> (usize, usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(refr, n);
    let hits = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (
        hits,
        cand.len().saturating_sub(n - 1),
        refr.len().saturating_sub(n - 1),
    )
}

/// Sentence BLEU: brevity penalty times the geometric mean of clipped
/// precisions for orders `1..=n`. Orders that neither side is long enough
/// to contain are left out of the mean.
pub fn bleu_n(cand: &[String], refr: &[String], n: usize) -> Result<f64, TextMetricError> {
    if n == 0 {
        return Err(TextMetricError::ZeroOrder);
    }
    if refr.is_empty() {
        return Err(TextMetricError::EmptyReference);
    }
    if cand.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for k in 1..=n {
        let (hits, total, ref_total) = overlap(cand, refr, k);
        if total == 0 && ref_total == 0 {
            continue;
        }
        if hits == 0 {
            return Ok(0.0);
        }
        log_sum += (hits as f64 / total as f64).ln();
        orders += 1;
    }
    let bp = if cand.len() >= refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    Ok(bp * (log_sum / orders as f64).exp())
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// F1 of clipped n-gram overlap.
pub fn rouge_n(cand: &[String], refr: &[String], n: usize) -> Result<f64, TextMetricError> {
    if n == 0 {
        return Err(TextMetricError::ZeroOrder);
    }
    if refr.is_empty() {
        return Err(TextMetricError::EmptyReference);
    }
    let (hits, total, ref_total) = overlap(cand, refr, n);
    if total == 0 && ref_total == 0 {
        return Ok(if cand == refr { 1.0 } else { 0.0 });
    }
    if total == 0 || ref_total == 0 {
        return Ok(0.0);
    }
    Ok(f1(
        hits as f64 / total as f64,
        hits as f64 / ref_total as f64,
    ))
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// F1 from the longest common subsequence.
pub fn rouge_l(cand: &[String], refr: &[String]) -> Result<f64, TextMetricError> {
    if refr.is_empty() {
        return Err(TextMetricError::EmptyReference);
    }
    if cand.is_empty() {
        return Ok(0.0);
    }
    let l = lcs_len(cand, refr) as f64;
    Ok(f1(l / cand.len() as f64, l / refr.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(s: &str) -> Vec<String> {
        tokenize(s, Tokenization::Whitespace)
    }

    #[test]
    fn edit_distances() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("CCO", "CC(=O)O"), 4);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", "abc"), 0);
    }

    #[test]
    fn rouge_one() {
        let r = rouge_n(&ws("the cat sat"), &ws("the cat"), 1).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        let l = rouge_l(&ws("the cat sat"), &ws("the cat")).unwrap();
        assert!((l - 0.8).abs() < 1e-12);
    }

    #[test]
    fn identical_and_disjoint() {
        for s in ["a", "a b", "the cat sat on the mat"] {
            let t = ws(s);
            assert_eq!(bleu_n(&t, &t, 4).unwrap(), 1.0);
            assert_eq!(bleu_n(&t, &t, 2).unwrap(), 1.0);
            for n in 1..=2 {
                assert_eq!(rouge_n(&t, &t, n).unwrap(), 1.0);
            }
            assert_eq!(rouge_l(&t, &t).unwrap(), 1.0);
        }
        let (a, b) = (ws("x y z"), ws("p q r"));
        assert_eq!(bleu_n(&a, &b, 2).unwrap(), 0.0);
        assert_eq!(rouge_n(&a, &b, 1).unwrap(), 0.0);
        assert_eq!(rouge_l(&a, &b).unwrap(), 0.0);
        assert_eq!(bleu_n(&a, &[], 2), Err(TextMetricError::EmptyReference));
    }

    #[test]
    fn brevity_penalty() {
        let b = bleu_n(&ws("the cat"), &ws("the cat sat"), 1).unwrap();
        assert!((b - (1.0f64 - 1.5).exp()).abs() < 1e-12);
    }
}
