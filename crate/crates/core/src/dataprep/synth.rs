//! Seeded generator of drug-like SMILES for tests and benchmarks.
//!
//! Molecules are grown from ring templates, short chains and terminal
//! groups. Every returned string is canonical, valence-valid, and within
//! the requested heavy-atom range.

use crate::molgraph::{canonicalize, parse_smiles, validate_valence};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ring templates: atom symbols, and which positions may carry substituents.
const RINGS: [(&[&str], &[bool]); 8] = [
    (
        &["c", "c", "c", "c", "c", "c"],
        &[true, true, true, true, true, false],
    ),
    (
        &["c", "c", "c", "n", "c", "c"],
        &[true, true, true, false, true, false],
    ),
    (
        &["C", "C", "C", "C", "C", "C"],
        &[true, true, true, true, true, false],
    ),
    (
        &["C", "C", "C", "N", "C", "C"],
        &[true, true, true, true, true, false],
    ),
    (&["C", "C", "C", "C", "C"], &[true, true, true, true, false]),
    (
        &["c", "c", "c", "s", "c"],
        &[true, true, true, false, false],
    ),
    (
        &["c", "c", "c", "o", "c"],
        &[true, true, true, false, false],
    ),
    (
        &["C", "C", "O", "C", "C", "C"],
        &[true, true, false, true, true, false],
    ),
];

const TERMINALS: [&str; 12] = [
    "F", "Cl", "Br", "O", "N", "C", "OC", "C(=O)O", "C#N", "C(F)(F)F", "C=O", "C(N)=O",
];

const CHAIN: [&str; 7] = ["C", "C", "C", "N", "O", "C(=O)", "C(C)"];

const MAX_DEPTH: usize = 3;

struct Builder<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn ring(&mut self, depth: usize, root: bool) -> String {
        let (atoms, subs) = *RINGS.choose(self.rng).unwrap();
        let digit = (depth + 1).to_string();
        let last = atoms.len() - 1;
        let mut s = String::new();
        for (i, a) in atoms.iter().enumerate() {
            s.push_str(a);
            if i == 0 || i == last {
                s.push_str(&digit);
            }
            let allowed = subs[i] && (i > 0 || root);
            if allowed && depth < MAX_DEPTH && self.rng.random_bool(0.3) {
                s.push('(');
                s.push_str(&self.substituent(depth + 1));
                s.push(')');
            }
        }
        s
    }

    fn chain(&mut self, depth: usize) -> String {
        let len = self.rng.random_range(1..=3);
        let mut s: String = (0..len).map(|_| *CHAIN.choose(self.rng).unwrap()).collect();
        if depth < MAX_DEPTH && self.rng.random_bool(0.6) {
            s.push_str(&self.substituent(depth + 1));
        }
        s
    }

    fn substituent(&mut self, depth: usize) -> String {
        match self.rng.random_range(0..10) {
            0..=3 => TERMINALS.choose(self.rng).unwrap().to_string(),
            4..=6 => self.chain(depth),
            _ if depth < MAX_DEPTH => self.ring(depth, false),
            _ => TERMINALS.choose(self.rng).unwrap().to_string(),
        }
    }

    fn molecule(&mut self) -> String {
        if self.rng.random_bool(0.75) {
            self.ring(0, true)
        } else {
            let mut s = self.chain(0);
            s.push_str(&self.ring(1, false));
            s
        }
    }
}

/// `n` canonical SMILES with heavy-atom counts in `min_heavy..=max_heavy`.
pub fn random_smiles(seed: u64, n: usize, min_heavy: usize, max_heavy: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = Builder { rng: &mut rng }.molecule();
        let mol =
            parse_smiles(&s).unwrap_or_else(|e| panic!("generator emitted bad SMILES {s}: {e}"));
        let heavy = mol.heavy_atom_count();
        if (min_heavy..=max_heavy).contains(&heavy) && validate_valence(&mol).is_empty() {
            out.push(canonicalize(&mol).0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::{clean, CleanConfig};

    #[test]
    fn deterministic_valid_and_clean() {
        let a = random_smiles(7, 300, 5, 50);
        assert_eq!(a, random_smiles(7, 300, 5, 50));
        let cfg = CleanConfig::default();
        for s in &a {
            assert_eq!(clean(s, &cfg).as_ref(), Ok(s), "{s}");
        }
        let distinct: std::collections::HashSet<_> = a.iter().collect();
        assert!(distinct.len() > 200);
    }
}
