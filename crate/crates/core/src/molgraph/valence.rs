//! Valence table and checks.
//!
//! Allowed valences for a charged atom follow the isoelectronic neighbor:
//! N+ behaves like C, O- like F, S+ like P and so on. Aromatic bonds count
//! as single bonds plus, at most, one extra unit for the atom's share of the
//! delocalized double bond, so an aromatic atom passes when either the lower
//! or the upper count is allowed.

use super::{BondOrder, Element, Molecule};
use serde::Serialize;

const NONE: &[u32] = &[];

/// Allowed total valences (bond orders plus hydrogens) for `element` carrying
/// `charge`.
pub fn allowed_valences(element: Element, charge: i8) -> &'static [u32] {
    use Element::*;
    match (element, charge) {
        (H, 0) => &[1],
        (H, 1) | (H, -1) => &[0],
        (B, 0) => &[3],
        (B, -1) => &[4],
        (B, 1) => &[2],
        (C, 0) => &[4],
        (C, 1) | (C, -1) => &[3],
        (N, 0) => &[3],
        (N, 1) => &[4],
        (N, -1) => &[2],
        (O, 0) => &[2],
        (O, 1) => &[3],
        (O, -1) => &[1],
        (P, 0) => &[3, 5],
        (P, 1) => &[4],
        (P, -1) => &[2],
        (S, 0) => &[2, 4, 6],
        (S, 1) => &[3, 5],
        (S, -1) => &[1],
        (F | Cl | Br | I, 0) => &[1],
        (F | Cl | Br | I, -1) => &[0],
        (F | Cl | Br | I, 1) => &[2],
        _ => NONE,
    }
}

/// Valences used to fill implicit hydrogens on organic-subset atoms.
fn organic_valences(element: Element) -> &'static [u32] {
    use Element::*;
    match element {
        B => &[3],
        C => &[4],
        N => &[3, 5],
        O => &[2],
        P => &[3, 5],
        S => &[2, 4, 6],
        F | Cl | Br | I => &[1],
        H => NONE,
    }
}

/// (sum of localized bond orders with aromatic bonds as 1, aromatic bond count)
pub(crate) fn bond_order_sum(mol: &Molecule, i: usize) -> (u32, u32) {
    let mut sum = 0;
    let mut aromatic = 0;
    for &(_, b) in mol.neighbors(i) {
        let order = mol.bond(b).order;
        sum += order.integer_order();
        if order == BondOrder::Aromatic {
            aromatic += 1;
        }
    }
    (sum, aromatic)
}

/// Implicit hydrogen count an unbracketed atom would receive given its
/// current bonds.
///
/// Aliphatic atoms fill up to the smallest listed valence that is not
/// exceeded. Aromatic atoms only use their lowest valence and reserve one
/// unit for the delocalized double bond (so `c` in benzene gets one H and
/// `n`, `o`, `s` get none).
pub fn default_implicit_h(mol: &Molecule, i: usize) -> u8 {
    let atom = mol.atom(i);
    let valences = organic_valences(atom.element);
    let (sum, n_aromatic) = bond_order_sum(mol, i);
    if atom.aromatic && n_aromatic > 0 {
        let target = valences.first().copied().unwrap_or(0);
        return target.saturating_sub(sum + 1) as u8;
    }
    valences
        .iter()
        .find(|&&v| v >= sum)
        .map(|&v| (v - sum) as u8)
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValenceViolation {
    pub atom: usize,
    pub element: Element,
    pub charge: i8,
    /// Valence with aromatic bonds counted as single bonds.
    pub valence: u32,
    pub allowed: Vec<u32>,
}

/// Per-atom valence check. Returns every offending atom; empty means valid.
pub fn validate_valence(mol: &Molecule) -> Vec<ValenceViolation> {
    let mut out = Vec::new();
    for (i, atom) in mol.atoms().iter().enumerate() {
        let allowed = allowed_valences(atom.element, atom.charge);
        let (sum, n_aromatic) = bond_order_sum(mol, i);
        let low = sum + atom.hydrogens as u32;
        let ok = allowed.contains(&low) || (n_aromatic > 0 && allowed.contains(&(low + 1)));
        if !ok {
            out.push(ValenceViolation {
                atom: i,
                element: atom.element,
                charge: atom.charge,
                valence: low,
                allowed: allowed.to_vec(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn violations(s: &str) -> usize {
        validate_valence(&parse_smiles(s).unwrap()).len()
    }

    #[test]
    fn methane_is_valid() {
        assert_eq!(violations("C"), 0);
    }

    #[test]
    fn pentavalent_carbon_is_flagged_once() {
        let v = validate_valence(&parse_smiles("C(C)(C)(C)(C)C").unwrap());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].atom, 0);
        assert_eq!(v[0].valence, 5);
    }

    #[test]
    fn ammonium_is_valid() {
        assert_eq!(violations("[NH4+]"), 0);
        assert_eq!(violations("C[N+](C)(C)C"), 0);
    }

    #[test]
    fn aromatic_systems_are_valid() {
        for s in [
            "c1ccccc1",
            "c1ccncc1",
            "c1cc[nH]c1",
            "c1ccoc1",
            "c1ccsc1",
            "c1ccc2ccccc2c1",
            "Cn1cccc1",
            "O=c1cccc[nH]1",
            "c1ccc2[nH]ccc2c1",
        ] {
            assert_eq!(violations(s), 0, "{s}");
        }
    }

    #[test]
    fn charged_oxygen_and_halide() {
        assert_eq!(violations("C[O-]"), 0);
        assert_eq!(violations("[Cl-]"), 0);
        assert_eq!(violations("[O-2]"), 1);
    }

    #[test]
    fn sulfur_oxidation_states() {
        assert_eq!(violations("CS(=O)C"), 0);
        assert_eq!(violations("CS(=O)(=O)C"), 0);
        assert_eq!(violations("[SH3]"), 1);
    }

    #[test]
    fn implicit_hydrogens() {
        let m = parse_smiles("CC(=O)Oc1ccccc1").unwrap();
        let h: Vec<u8> = (0..m.atom_count())
            .map(|i| default_implicit_h(&m, i))
            .collect();
        assert_eq!(h, vec![3, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    }
}
