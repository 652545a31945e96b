//! Molecular graph model, SMILES and SELFIES codecs, canonicalization and
//! valence checks.
//!
//! A [`Molecule`] is an undirected labelled graph. Hydrogens are normally
//! folded into the heavy atom they belong to (`Atom::hydrogens`); a bracketed
//! `[H]` in the input is kept as an explicit graph node.

mod aromatic;
mod canon;
mod iso;
mod kekule;
mod rings;
mod selfies;
mod smiles;
mod valence;
mod writer;

pub use aromatic::aromatize;
pub use canon::{
    canonical_ranks, canonical_smiles, canonicalize, CanonicalForm, CANONICAL_RULES_VERSION,
};
pub use iso::{is_isomorphic, IsoError, MAX_ISO_HEAVY_ATOMS};
pub use kekule::{kekulize, KekuleError};
pub use rings::RingInfo;
pub use selfies::{decode_selfies, encode_selfies, SelfiesError};
pub use smiles::{parse_smiles, SmilesError};
pub use valence::{allowed_valences, default_implicit_h, validate_valence, ValenceViolation};
pub use writer::{to_smiles, write_smiles};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Supported elements. The declaration order is the class order used by the
/// atom-type vocabulary (`Element::index`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    B,
    C,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
    H,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::P,
        Element::S,
        Element::F,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::H,
    ];

    /// Number of element classes.
    pub const COUNT: usize = 11;

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.symbol() == symbol)
    }

    /// Class index in `Element::ALL`.
    pub fn index(self) -> usize {
        Element::ALL.iter().position(|&e| e == self).unwrap()
    }

    pub fn from_index(index: usize) -> Option<Element> {
        Element::ALL.get(index).copied()
    }

    pub fn is_halogen(self) -> bool {
        matches!(self, Element::F | Element::Cl | Element::Br | Element::I)
    }

    /// Elements that may appear in aromatic lowercase form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];

    /// Small integer code used by hashing and refinement (1..=4).
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Class index (0..4) for the bond-type head.
    pub fn index(self) -> usize {
        self.code() as usize - 1
    }

    /// Integer order of a localized bond; aromatic bonds report 1.
    pub fn integer_order(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_integer(order: u32) -> Option<BondOrder> {
        match order {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Attached hydrogens not represented as graph nodes.
    pub hydrogens: u8,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            charge: 0,
            aromatic: false,
            hydrogens: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    /// Lower endpoint index.
    pub a: usize,
    /// Higher endpoint index.
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond endpoint {0} out of range")]
    OutOfRange(usize),
    #[error("self bond on atom {0}")]
    SelfBond(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("formal charge {0} outside [-4, 4]")]
    Charge(i8),
}

/// A neighbor entry: (neighbor atom, bond index).
pub type Neighbor = (usize, usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl Molecule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.adjacency.push(Vec::new());
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, i: usize, j: usize, order: BondOrder) -> Result<usize, GraphError> {
        let n = self.atoms.len();
        if i >= n {
            return Err(GraphError::OutOfRange(i));
        }
        if j >= n {
            return Err(GraphError::OutOfRange(j));
        }
        if i == j {
            return Err(GraphError::SelfBond(i));
        }
        if self.bond_between(i, j).is_some() {
            return Err(GraphError::DuplicateBond(i.min(j), i.max(j)));
        }
        let idx = self.bonds.len();
        self.bonds.push(Bond {
            a: i.min(j),
            b: i.max(j),
            order,
        });
        insert_sorted(&mut self.adjacency[i], (j, idx));
        insert_sorted(&mut self.adjacency[j], (i, idx));
        Ok(idx)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut Atom {
        &mut self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, b: usize) -> &Bond {
        &self.bonds[b]
    }

    pub fn set_bond_order(&mut self, b: usize, order: BondOrder) {
        self.bonds[b].order = order;
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Neighbors of atom `i`, ascending by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.adjacency[i]
    }

    pub fn bond_between(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency
            .get(i)?
            .binary_search_by_key(&j, |&(n, _)| n)
            .ok()
            .map(|k| self.adjacency[i][k].1)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Number of non-hydrogen neighbors.
    pub fn heavy_degree(&self, i: usize) -> usize {
        self.adjacency[i]
            .iter()
            .filter(|&&(n, _)| self.atoms[n].element != Element::H)
            .count()
    }

    /// Folded hydrogens plus explicit hydrogen neighbors.
    pub fn total_h(&self, i: usize) -> u32 {
        let explicit = self.adjacency[i]
            .iter()
            .filter(|&&(n, _)| self.atoms[n].element == Element::H)
            .count() as u32;
        self.atoms[i].hydrogens as u32 + explicit
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.element != Element::H)
            .count()
    }

    /// Connected-component id per atom, numbered in order of first atom.
    pub fn fragment_ids(&self) -> (Vec<usize>, usize) {
        let n = self.atoms.len();
        let mut ids = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if ids[start] != usize::MAX {
                continue;
            }
            ids[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if ids[v] == usize::MAX {
                        ids[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (ids, count)
    }

    /// Atom lists of each connected fragment, in order of first atom.
    pub fn fragments(&self) -> Vec<Vec<usize>> {
        let (ids, count) = self.fragment_ids();
        let mut out = vec![Vec::new(); count];
        for (atom, &f) in ids.iter().enumerate() {
            out[f].push(atom);
        }
        out
    }

    /// Sub-molecule induced by `atoms` (kept in the given order).
    pub fn subgraph(&self, atoms: &[usize]) -> Molecule {
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut out = Molecule::new();
        for &a in atoms {
            map[a] = out.add_atom(self.atoms[a]);
        }
        for bond in &self.bonds {
            let (x, y) = (map[bond.a], map[bond.b]);
            if x != usize::MAX && y != usize::MAX {
                out.add_bond(x, y, bond.order)
                    .expect("induced bond is valid");
            }
        }
        out
    }

    /// Renumber atoms so that old atom `i` becomes `perm[i]`. Bonds keep
    /// their relative order.
    pub fn permute(&self, perm: &[usize]) -> Molecule {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = vec![Atom::new(Element::C); self.atoms.len()];
        for (old, &new) in perm.iter().enumerate() {
            atoms[new] = self.atoms[old];
        }
        let mut out = Molecule::new();
        for atom in atoms {
            out.add_atom(atom);
        }
        for bond in &self.bonds {
            out.add_bond(perm[bond.a], perm[bond.b], bond.order)
                .expect("permuted bond is valid");
        }
        out
    }

    /// Checks the structural invariants (symmetric adjacency, charge range,
    /// aromatic bonds only between aromatic atoms).
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, atom) in self.atoms.iter().enumerate() {
            if !(-4..=4).contains(&atom.charge) {
                return Err(format!("atom {i}: charge {}", atom.charge));
            }
            for &(j, b) in &self.adjacency[i] {
                if !self.adjacency[j].contains(&(i, b)) {
                    return Err(format!("asymmetric adjacency {i}-{j}"));
                }
            }
        }
        for (k, bond) in self.bonds.iter().enumerate() {
            if bond.a >= bond.b || bond.b >= self.atoms.len() {
                return Err(format!("bond {k}: bad endpoints"));
            }
            if bond.order == BondOrder::Aromatic
                && !(self.atoms[bond.a].aromatic && self.atoms[bond.b].aromatic)
            {
                return Err(format!(
                    "bond {k}: aromatic bond between non-aromatic atoms"
                ));
            }
        }
        Ok(())
    }
}

fn insert_sorted(list: &mut Vec<Neighbor>, entry: Neighbor) {
    let pos = list.partition_point(|&(n, _)| n < entry.0);
    list.insert(pos, entry);
}
