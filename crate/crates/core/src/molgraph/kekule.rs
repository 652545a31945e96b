use super::valence::{allowed_valences, bond_order_sum};
use super::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KekuleError {
    #[error("no Kekulé structure assigns a double bond to aromatic atom {0}")]
    Unmatched(usize),
}

/// Replaces aromatic bonds by alternating single/double bonds.
///
/// Aromatic atoms one unit short of their lowest allowed valence need a
/// double bond; a perfect matching over aromatic bonds among those atoms is
/// found by backtracking (most constrained atom first).
pub fn kekulize(mol: &Molecule) -> Result<Molecule, KekuleError> {
    let n = mol.atom_count();
    let needs: Vec<bool> = (0..n)
        .map(|i| {
            let atom = mol.atom(i);
            if !atom.aromatic {
                return false;
            }
            let (sum, n_arom) = bond_order_sum(mol, i);
            if n_arom == 0 {
                return false;
            }
            let low = sum + atom.hydrogens as u32;
            let target = allowed_valences(atom.element, atom.charge)
                .iter()
                .copied()
                .find(|&v| v >= low);
            target == Some(low + 1)
        })
        .collect();

    let mut partner = vec![usize::MAX; n];
    if !match_all(mol, &needs, &mut partner) {
        let first = (0..n)
            .find(|&i| needs[i] && partner[i] == usize::MAX)
            .unwrap_or(0);
        return Err(KekuleError::Unmatched(first));
    }

    let mut out = mol.clone();
    for k in 0..mol.bond_count() {
        let bond = mol.bond(k);
        if bond.order == BondOrder::Aromatic {
            let order = if partner[bond.a] == bond.b {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
            out.set_bond_order(k, order);
        }
    }
    for i in 0..n {
        out.atom_mut(i).aromatic = false;
    }
    Ok(out)
}

fn candidates(mol: &Molecule, needs: &[bool], partner: &[usize], u: usize) -> Vec<usize> {
    mol.neighbors(u)
        .iter()
        .filter(|&&(v, b)| {
            needs[v] && partner[v] == usize::MAX && mol.bond(b).order == BondOrder::Aromatic
        })
        .map(|&(v, _)| v)
        .collect()
}

fn match_all(mol: &Molecule, needs: &[bool], partner: &mut [usize]) -> bool {
    // most constrained unmatched atom
    let mut best: Option<(usize, Vec<usize>)> = None;
    for u in 0..mol.atom_count() {
        if !needs[u] || partner[u] != usize::MAX {
            continue;
        }
        let c = candidates(mol, needs, partner, u);
        if c.is_empty() {
            return false;
        }
        if best.as_ref().is_none_or(|(_, bc)| c.len() < bc.len()) {
            best = Some((u, c));
        }
    }
    let Some((u, cands)) = best else {
        return true;
    };
    for v in cands {
        partner[u] = v;
        partner[v] = u;
        if match_all(mol, needs, partner) {
            return true;
        }
        partner[u] = usize::MAX;
        partner[v] = usize::MAX;
    }
    false
}
