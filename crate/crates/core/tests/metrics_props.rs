mod common;

use common::{medium_molecule, permutation};
use hiermol::metrics::{
    bleu_n, evaluate_corpus, exact_match, levenshtein, morgan_fp, path_fp, path_patterns, rouge_l,
    rouge_n, structural_keys_fp, tanimoto, tokenize, MolFormat, TaskMode, Tokenization,
};
use hiermol::molgraph::{parse_smiles, to_smiles};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["a", "b", "c", "the", "acid"]),
        0..10,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn levenshtein_is_a_metric(a in "[abc]{0,8}", b in "[abc]{0,8}", c in "[abc]{0,8}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }

    #[test]
    fn fingerprints_ignore_atom_order(mol in medium_molecule(), seed in any::<u64>()) {
        let p = mol.permute(&permutation(mol.atom_count(), seed));
        prop_assert_eq!(morgan_fp(&mol, 2, 2048), morgan_fp(&p, 2, 2048));
        prop_assert_eq!(path_fp(&mol, 7, 2048), path_fp(&p, 7, 2048));
        prop_assert_eq!(structural_keys_fp(&mol), structural_keys_fp(&p));
    }

    #[test]
    fn tanimoto_is_bounded(a in medium_molecule(), b in medium_molecule()) {
        for (x, y) in [
            (morgan_fp(&a, 2, 1024), morgan_fp(&b, 2, 1024)),
            (path_fp(&a, 5, 1024), path_fp(&b, 5, 1024)),
            (structural_keys_fp(&a), structural_keys_fp(&b)),
        ] {
            let s = tanimoto(&x, &y).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(tanimoto(&x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn exact_match_implies_equal_morgan(mol in medium_molecule(), seed in any::<u64>()) {
        let a = to_smiles(&mol);
        let b = to_smiles(&mol.permute(&permutation(mol.atom_count(), seed)));
        prop_assert_eq!(exact_match(&a, &b), 1);
        let (pa, pb) = (parse_smiles(&a).unwrap(), parse_smiles(&b).unwrap());
        prop_assert_eq!(tanimoto(&morgan_fp(&pa, 2, 2048), &morgan_fp(&pb, 2, 2048)).unwrap(), 1.0);
    }

    #[test]
    fn text_scores_are_bounded(c in words(), r in words()) {
        let (c, r) = (tokenize(&c, Tokenization::Whitespace), tokenize(&r, Tokenization::Whitespace));
        prop_assume!(!r.is_empty());
        for v in [bleu_n(&c, &r, 2).unwrap(), bleu_n(&c, &r, 4).unwrap(), rouge_n(&c, &r, 1).unwrap(), rouge_n(&c, &r, 2).unwrap(), rouge_l(&c, &r).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        for v in [bleu_n(&r, &r, 4).unwrap(), rouge_n(&r, &r, 2).unwrap(), rouge_l(&r, &r).unwrap()] {
            prop_assert_eq!(v, 1.0);
        }
    }
}

#[test]
fn ethane_paths() {
    let pats: BTreeSet<String> = path_patterns(&parse_smiles("CC").unwrap(), 7)
        .into_iter()
        .collect();
    assert_eq!(pats, ["C", "C-C"].into_iter().map(String::from).collect());
}

#[test]
fn corpus_files() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.txt");
    let gt = dir.path().join("gt.txt");
    std::fs::write(&pred, "OCC\nc1ccccc1\nC(\n").unwrap();
    std::fs::write(&gt, "CCO\nc1ccccc1\nCCN\n").unwrap();
    let r = evaluate_corpus(&pred, &gt, TaskMode::Molecule(MolFormat::Smiles)).unwrap();
    assert!((r.get("Exact").unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((r.get("Validity").unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(r.get("Morgan"), Some(1.0));
    std::fs::write(&gt, "CCO\n").unwrap();
    assert!(evaluate_corpus(&pred, &gt, TaskMode::Text).is_err());
}
