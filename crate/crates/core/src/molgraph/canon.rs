//! Canonical atom ranking and canonical SMILES.
//!
//! Ranking is iterative neighborhood refinement. Atoms start from the
//! invariant (atomic number, heavy degree, formal charge, total H, aromatic);
//! each round re-sorts atoms by (current class, sorted multiset of
//! (bond code, neighbor class)) until the number of classes stops growing.
//! Remaining ties are broken by promoting the lowest-index atom of the
//! smallest tied class and refining again.

use super::aromatic::aromatize;
use super::writer::write_smiles;
use super::Molecule;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Version of the normalization rules behind canonical strings. Bump when
/// aromaticity, ranking or writer rules change.
pub const CANONICAL_RULES_VERSION: u32 = 1;

/// A canonical SMILES string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalForm(pub String);

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Per-atom canonical rank, a permutation of `0..n`.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atom_count();
    if n == 0 {
        return Vec::new();
    }
    let initial: Vec<(u8, usize, i8, u32, bool)> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            (
                a.element.atomic_number(),
                mol.heavy_degree(i),
                a.charge,
                mol.total_h(i),
                a.aromatic,
            )
        })
        .collect();
    let mut classes = dense_rank(&initial);
    refine(mol, &mut classes);
    loop {
        let count = class_count(&classes);
        if count == n {
            return classes;
        }
        let mut sizes = vec![0usize; count];
        for &c in &classes {
            sizes[c] += 1;
        }
        let target = (0..count)
            .filter(|&c| sizes[c] > 1)
            .min_by_key(|&c| (sizes[c], c))
            .unwrap();
        let chosen = (0..n).find(|&i| classes[i] == target).unwrap();
        let keys: Vec<(usize, bool)> = (0..n).map(|i| (classes[i], i != chosen)).collect();
        classes = dense_rank(&keys);
        refine(mol, &mut classes);
    }
}

fn refine(mol: &Molecule, classes: &mut Vec<usize>) {
    let n = classes.len();
    let mut count = class_count(classes);
    loop {
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..n)
            .map(|i| {
                let mut env: Vec<(u8, usize)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, b)| (mol.bond(b).order.code(), classes[j]))
                    .collect();
                env.sort_unstable();
                (classes[i], env)
            })
            .collect();
        let next = dense_rank(&keys);
        let next_count = class_count(&next);
        *classes = next;
        if next_count == count {
            return;
        }
        count = next_count;
    }
}

/// Index of each key among the sorted distinct keys.
fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut distinct: Vec<K> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    keys.iter()
        .map(|k| distinct.binary_search(k).unwrap())
        .collect()
}

fn class_count(classes: &[usize]) -> usize {
    classes.iter().max().map_or(0, |&m| m + 1)
}

/// Canonical form: aromaticity normalization, canonical ranking, then
/// rank-guided SMILES emission.
pub fn canonicalize(mol: &Molecule) -> CanonicalForm {
    let normalized = aromatize(mol);
    let ranks = canonical_ranks(&normalized);
    CanonicalForm(write_smiles(&normalized, &ranks))
}

/// Parses and canonicalizes in one step.
pub fn canonical_smiles(text: &str) -> Result<CanonicalForm, super::SmilesError> {
    Ok(canonicalize(&super::parse_smiles(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn canon(s: &str) -> String {
        canonical_smiles(s).unwrap().0
    }

    #[test]
    fn methane() {
        assert_eq!(canonical_ranks(&parse_smiles("C").unwrap()), vec![0]);
        assert_eq!(canon("C"), "C");
    }

    #[test]
    fn benzene_ties_are_broken() {
        let m = parse_smiles("c1ccccc1").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort();
        assert_eq!(r, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn traversal_order_does_not_matter() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_ne!(canon("CCO"), canon("COC"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
        assert_eq!(
            canon("OC(=O)c1ccccc1OC(C)=O"),
            canon("CC(=O)Oc1ccccc1C(=O)O")
        );
    }

    #[test]
    fn canonical_is_a_fixed_point() {
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "c1ccc2[nH]ccc2c1",
            "CC(C)(C)N.Cl",
            "C1CC1C#N",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "{s}");
        }
    }

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("CC(C)(C)C(C)(C)C").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort();
        assert_eq!(r, (0..m.atom_count()).collect::<Vec<_>>());
    }
}
