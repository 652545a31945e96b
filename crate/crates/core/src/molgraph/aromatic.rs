//! Aromaticity normalization (rule set v1).
//!
//! A 6-membered ring is aromatized when every ring atom is either already
//! aromatic or carries a double bond to a neighbor on the same ring. A
//! 5-membered ring qualifies when four atoms satisfy that condition and the
//! fifth is a neutral N, O, S or P with only single or aromatic bonds (the
//! lone-pair donor of pyrrole, furan, thiophene). Rings are re-examined until
//! nothing changes, so fused Kekulé systems are picked up ring by ring.
//! Anything else (7-membered rings, exocyclic double bonds) is left alone.

use super::rings::RingInfo;
use super::{BondOrder, Element, Molecule};

/// Returns a copy of `mol` with qualifying Kekulé rings rewritten as aromatic.
pub fn aromatize(mol: &Molecule) -> Molecule {
    let mut out = mol.clone();
    let info = RingInfo::new(mol, 6);
    let rings: Vec<&Vec<usize>> = info
        .cycles
        .iter()
        .filter(|c| c.len() == 5 || c.len() == 6)
        .collect();
    if rings.is_empty() {
        return out;
    }
    let mut done = vec![false; rings.len()];
    loop {
        let mut changed = false;
        for (r, ring) in rings.iter().enumerate() {
            if done[r] {
                continue;
            }
            let bonds = ring_bonds(&out, ring);
            if bonds
                .iter()
                .all(|&b| out.bond(b).order == BondOrder::Aromatic)
            {
                done[r] = true;
                continue;
            }
            if qualifies(&out, ring, &bonds) {
                for &a in ring.iter() {
                    out.atom_mut(a).aromatic = true;
                }
                for &b in &bonds {
                    out.set_bond_order(b, BondOrder::Aromatic);
                }
                done[r] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    out
}

fn ring_bonds(mol: &Molecule, ring: &[usize]) -> Vec<usize> {
    (0..ring.len())
        .map(|k| {
            mol.bond_between(ring[k], ring[(k + 1) % ring.len()])
                .expect("cycle atoms are bonded")
        })
        .collect()
}

fn qualifies(mol: &Molecule, ring: &[usize], bonds: &[usize]) -> bool {
    if bonds
        .iter()
        .any(|&b| mol.bond(b).order == BondOrder::Triple)
    {
        return false;
    }
    let pi: Vec<bool> = ring
        .iter()
        .map(|&a| mol.atom(a).aromatic || has_ring_double(mol, a, bonds))
        .collect();
    // an atom with an exocyclic double bond cannot join
    for &a in ring {
        if mol.atom(a).aromatic {
            continue;
        }
        let doubles = mol
            .neighbors(a)
            .iter()
            .filter(|&&(_, b)| mol.bond(b).order == BondOrder::Double)
            .count();
        if doubles > 1 || (doubles == 1 && !has_ring_double(mol, a, bonds)) {
            return false;
        }
    }
    match ring.len() {
        6 => pi.iter().all(|&p| p),
        5 => {
            let donors: Vec<usize> = (0..5).filter(|&k| !pi[k]).collect();
            if donors.len() != 1 {
                return false;
            }
            let a = ring[donors[0]];
            let atom = mol.atom(a);
            matches!(
                atom.element,
                Element::N | Element::O | Element::S | Element::P
            ) && atom.charge == 0
                && mol.neighbors(a).iter().all(|&(_, b)| {
                    matches!(mol.bond(b).order, BondOrder::Single | BondOrder::Aromatic)
                })
        }
        _ => false,
    }
}

fn has_ring_double(mol: &Molecule, atom: usize, bonds: &[usize]) -> bool {
    bonds.iter().any(|&b| {
        let bond = mol.bond(b);
        bond.order == BondOrder::Double && (bond.a == atom || bond.b == atom)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{parse_smiles, to_smiles};

    fn arom(s: &str) -> String {
        to_smiles(&aromatize(&parse_smiles(s).unwrap()))
    }

    #[test]
    fn kekule_benzene_becomes_aromatic() {
        assert_eq!(arom("C1=CC=CC=C1"), "c1ccccc1");
    }

    #[test]
    fn five_membered_heteroaromatics() {
        assert_eq!(arom("C1=CC=CN1"), "c1ccc[nH]1");
        assert_eq!(arom("C1=CC=CO1"), "c1ccco1");
        assert_eq!(arom("C1=CC=CS1"), "c1cccs1");
    }

    #[test]
    fn fused_kekule_forms() {
        // naphthalene with the shared bond single, then double
        let a = aromatize(&parse_smiles("C1=CC=C2C=CC=CC2=C1").unwrap());
        assert!(a.atoms().iter().all(|x| x.aromatic));
        let b = aromatize(&parse_smiles("C1=CC2=CC=CC=C2C=C1").unwrap());
        assert!(b.atoms().iter().all(|x| x.aromatic));
    }

    #[test]
    fn non_aromatic_rings_are_untouched() {
        assert_eq!(arom("C1CCCCC1"), "C1CCCCC1");
        assert_eq!(arom("O=C1C=CC(=O)C=C1"), "O=C1C=CC(=O)C=C1");
        assert_eq!(arom("C1=CCCC=C1"), "C1=CCCC=C1");
    }
}
