//! Bit fingerprints and Tanimoto similarity.
//!
//! All three fingerprints first normalize aromaticity, so Kekulé and
//! aromatic spellings of one structure give the same bits.
//!
//! Structural keys (bit: predicate):
//!
//! | bit | key | bit | key |
//! |---|---|---|---|
//! | 0 | contains B | 16 | ring of size 7 or 8 |
//! | 1 | contains C | 17 | double bond |
//! | 2 | contains N | 18 | triple bond |
//! | 3 | contains O | 19 | C=O |
//! | 4 | contains P | 20 | O with attached H |
//! | 5 | contains S | 21 | N with attached H |
//! | 6 | contains F | 22 | C#N |
//! | 7 | contains Cl | 23 | C-N single bond |
//! | 8 | contains Br | 24 | C-O single bond |
//! | 9 | contains I | 25 | ring-chain attachment |
//! | 10 | any halogen | 26 | charged atom |
//! | 11 | aromatic atom | 27 | at least 10 heavy atoms |
//! | 12 | ring of size 3 | 28 | at least 20 heavy atoms |
//! | 13 | ring of size 4 | 29 | aromatic heteroatom |
//! | 14 | ring of size 5 | 30 | at least two independent rings |
//! | 15 | ring of size 6 | 31 | more than one fragment |

use crate::fnv::{extend, fnv1a64};
use crate::molgraph::{aromatize, BondOrder, Element, Molecule, RingInfo};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const DEFAULT_NBITS: usize = 2048;
pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_MAX_PATH: u32 = 7;
pub const STRUCTURAL_KEYS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FpKind {
    Morgan { radius: u32 },
    Path { max_len: u32 },
    StructuralKeys,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FingerprintError {
    #[error("cannot compare {0:?}/{1} bits with {2:?}/{3} bits")]
    KindMismatch(FpKind, usize, FpKind, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub kind: FpKind,
    nbits: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn empty(kind: FpKind, nbits: usize) -> Self {
        assert!(nbits > 0, "fingerprint width must be positive");
        Fingerprint {
            kind,
            nbits,
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    /// Sets bit `h mod nbits`.
    pub fn set_hash(&mut self, h: u64) {
        self.set((h % self.nbits as u64) as usize);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&b| self.get(b)).collect()
    }
}

/// `|A and B| / |A or B|`; 1.0 when both are empty.
pub fn tanimoto(f1: &Fingerprint, f2: &Fingerprint) -> Result<f64, FingerprintError> {
    if f1.kind != f2.kind || f1.nbits != f2.nbits {
        return Err(FingerprintError::KindMismatch(
            f1.kind, f1.nbits, f2.kind, f2.nbits,
        ));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (a, b) in f1.words.iter().zip(&f2.words) {
        inter += (a & b).count_ones();
        union += (a | b).count_ones();
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Per-atom environment identifiers for radii `0..=radius`, indexed
/// `[radius][atom]`.
pub fn morgan_ids(mol: &Molecule, radius: u32) -> Vec<Vec<u64>> {
    let mol = aromatize(mol);
    let mut ids: Vec<u64> = (0..mol.atom_count())
        .map(|i| {
            let a = mol.atom(i);
            fnv1a64(&[
                a.element.atomic_number(),
                mol.heavy_degree(i) as u8,
                a.charge as u8,
                mol.total_h(i) as u8,
                a.aromatic as u8,
            ])
        })
        .collect();
    let mut out = vec![ids.clone()];
    for _ in 0..radius {
        ids = (0..mol.atom_count())
            .map(|i| {
                let mut env: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(n, b)| (mol.bond(b).order.code(), ids[n]))
                    .collect();
                env.sort_unstable();
                let mut h = fnv1a64(&ids[i].to_le_bytes());
                for (code, id) in env {
                    h = extend(h, &[code]);
                    h = extend(h, &id.to_le_bytes());
                }
                h
            })
            .collect();
        out.push(ids.clone());
    }
    out
}

pub fn morgan_fp(mol: &Molecule, radius: u32, nbits: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(FpKind::Morgan { radius }, nbits);
    for id in morgan_ids(mol, radius).into_iter().flatten() {
        fp.set_hash(id);
    }
    fp
}

fn atom_label(mol: &Molecule, i: usize) -> String {
    let a = mol.atom(i);
    if a.aromatic {
        a.element.symbol().to_lowercase()
    } else {
        a.element.symbol().to_string()
    }
}

fn path_string(mol: &Molecule, atoms: &[usize], bonds: &[usize]) -> String {
    let mut s = atom_label(mol, atoms[0]);
    for (k, &b) in bonds.iter().enumerate() {
        s.push(mol.bond(b).order.symbol());
        s.push_str(&atom_label(mol, atoms[k + 1]));
    }
    s
}

/// Distinct canonical strings of all simple paths with `0..=max_len`
/// bonds. Each path reads in whichever direction gives the smaller string.
pub fn path_patterns(mol: &Molecule, max_len: u32) -> BTreeSet<String> {
    let mol = aromatize(mol);
    let mut out = BTreeSet::new();
    let mut atoms = Vec::new();
    let mut bonds = Vec::new();
    let mut on_path = vec![false; mol.atom_count()];
    for start in 0..mol.atom_count() {
        atoms.push(start);
        on_path[start] = true;
        walk(
            &mol,
            max_len as usize,
            &mut atoms,
            &mut bonds,
            &mut on_path,
            &mut out,
        );
        on_path[start] = false;
        atoms.pop();
    }
    out
}

fn walk(
    mol: &Molecule,
    max_len: usize,
    atoms: &mut Vec<usize>,
    bonds: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut BTreeSet<String>,
) {
    let fwd = path_string(mol, atoms, bonds);
    let rev_atoms: Vec<usize> = atoms.iter().rev().copied().collect();
    let rev_bonds: Vec<usize> = bonds.iter().rev().copied().collect();
    let rev = path_string(mol, &rev_atoms, &rev_bonds);
    out.insert(fwd.min(rev));
    if bonds.len() == max_len {
        return;
    }
    let last = *atoms.last().unwrap();
    for &(n, b) in mol.neighbors(last) {
        if on_path[n] {
            continue;
        }
        on_path[n] = true;
        atoms.push(n);
        bonds.push(b);
        walk(mol, max_len, atoms, bonds, on_path, out);
        bonds.pop();
        atoms.pop();
        on_path[n] = false;
    }
}

pub fn path_fp(mol: &Molecule, max_len: u32, nbits: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(FpKind::Path { max_len }, nbits);
    for p in path_patterns(mol, max_len) {
        fp.set_hash(fnv1a64(p.as_bytes()));
    }
    fp
}

pub fn structural_keys_fp(mol: &Molecule) -> Fingerprint {
    let mol = aromatize(mol);
    let rings = RingInfo::new(&mol, 8);
    let mut fp = Fingerprint::empty(FpKind::StructuralKeys, STRUCTURAL_KEYS);
    let has = |e: Element| mol.atoms().iter().any(|a| a.element == e);
    let bond_between = |x: Element, y: Element, order: BondOrder| {
        mol.bonds().iter().any(|b| {
            let (ea, eb) = (mol.atom(b.a).element, mol.atom(b.b).element);
            b.order == order && ((ea, eb) == (x, y) || (ea, eb) == (y, x))
        })
    };
    let h_on =
        |e: Element| (0..mol.atom_count()).any(|i| mol.atom(i).element == e && mol.total_h(i) > 0);
    let heavy = mol.heavy_atom_count();
    let (_, fragments) = mol.fragment_ids();
    let cyclomatic = mol.bond_count() + fragments - mol.atom_count();

    let keys = [
        has(Element::B),
        has(Element::C),
        has(Element::N),
        has(Element::O),
        has(Element::P),
        has(Element::S),
        has(Element::F),
        has(Element::Cl),
        has(Element::Br),
        has(Element::I),
        mol.atoms().iter().any(|a| a.element.is_halogen()),
        mol.atoms().iter().any(|a| a.aromatic),
        rings.has_cycle_of_len(3),
        rings.has_cycle_of_len(4),
        rings.has_cycle_of_len(5),
        rings.has_cycle_of_len(6),
        rings.has_cycle_of_len(7) || rings.has_cycle_of_len(8),
        mol.bonds().iter().any(|b| b.order == BondOrder::Double),
        mol.bonds().iter().any(|b| b.order == BondOrder::Triple),
        bond_between(Element::C, Element::O, BondOrder::Double),
        h_on(Element::O),
        h_on(Element::N),
        bond_between(Element::C, Element::N, BondOrder::Triple),
        bond_between(Element::C, Element::N, BondOrder::Single),
        bond_between(Element::C, Element::O, BondOrder::Single),
        mol.bonds().iter().enumerate().any(|(k, b)| {
            !rings.ring_bond[k]
                && rings.ring_atom[b.a] != rings.ring_atom[b.b]
                && mol.atom(b.a).element != Element::H
                && mol.atom(b.b).element != Element::H
        }),
        mol.atoms().iter().any(|a| a.charge != 0),
        heavy >= 10,
        heavy >= 20,
        mol.atoms()
            .iter()
            .any(|a| a.aromatic && a.element != Element::C),
        cyclomatic >= 2,
        fragments > 1,
    ];
    for (bit, &on) in keys.iter().enumerate() {
        if on {
            fp.set(bit);
        }
    }
    fp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn mol(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn tanimoto_definition() {
        let kind = FpKind::StructuralKeys;
        let mut a = Fingerprint::empty(kind, 32);
        let mut b = Fingerprint::empty(kind, 32);
        assert_eq!(tanimoto(&a, &b).unwrap(), 1.0);
        for bit in [0, 1, 2, 3] {
            a.set(bit);
        }
        for bit in [2, 3, 4] {
            b.set(bit);
        }
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.4);
        let c = Fingerprint::empty(FpKind::Path { max_len: 7 }, 32);
        assert!(tanimoto(&a, &c).is_err());
    }

    #[test]
    fn methane_and_water_share_no_morgan_bits() {
        let m = morgan_fp(&mol("C"), 2, 2048);
        let w = morgan_fp(&mol("O"), 2, 2048);
        assert!(m.count_ones() > 0 && w.count_ones() > 0);
        assert_eq!(tanimoto(&m, &w).unwrap(), 0.0);
    }

    #[test]
    fn ethane_paths() {
        let p = path_patterns(&mol("CC"), 7);
        assert_eq!(p, BTreeSet::from(["C".to_string(), "C-C".to_string()]));
        let p = path_patterns(&mol("CO"), 7);
        assert_eq!(
            p,
            BTreeSet::from(["C".into(), "O".into(), "C-O".to_string()])
        );
    }

    #[test]
    fn kekule_and_aromatic_agree() {
        let a = mol("C1=CC=CC=C1O");
        let b = mol("Oc1ccccc1");
        assert_eq!(morgan_fp(&a, 2, 2048), morgan_fp(&b, 2, 2048));
        assert_eq!(path_fp(&a, 7, 2048), path_fp(&b, 7, 2048));
        assert_eq!(structural_keys_fp(&a), structural_keys_fp(&b));
    }

    #[test]
    fn structural_keys() {
        let benzene = structural_keys_fp(&mol("c1ccccc1"));
        assert!(benzene.get(11) && benzene.get(15));
        assert!(!benzene.get(19));
        let aspirin = structural_keys_fp(&mol("CC(=O)Oc1ccccc1C(=O)O"));
        for bit in [11, 15, 19, 20, 24, 25] {
            assert!(aspirin.get(bit), "bit {bit}");
        }
        assert_eq!(structural_keys_fp(&mol("C")).on_bits(), vec![1]);
        let naphthalene = structural_keys_fp(&mol("c1ccc2ccccc2c1"));
        assert!(naphthalene.get(30));
        assert!(structural_keys_fp(&mol("CC#N")).get(22));
    }
}
