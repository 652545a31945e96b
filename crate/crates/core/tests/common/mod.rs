#![allow(dead_code)]

use hiermol::dataprep::synth::random_smiles;
use hiermol::molgraph::{parse_smiles, Molecule};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn molecule(seed: u64, min_heavy: usize, max_heavy: usize) -> Molecule {
    let s = random_smiles(seed, 1, min_heavy, max_heavy).pop().unwrap();
    parse_smiles(&s).unwrap()
}

/// `perm[old] = new`
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

pub fn small_molecule() -> impl Strategy<Value = Molecule> {
    any::<u64>().prop_map(|s| molecule(s, 3, 12))
}

pub fn medium_molecule() -> impl Strategy<Value = Molecule> {
    any::<u64>().prop_map(|s| molecule(s, 5, 30))
}
