//! Backtracking graph isomorphism for small molecules. Used as a test oracle.

use super::Molecule;

/// Size limit for [`is_isomorphic`].
pub const MAX_ISO_HEAVY_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IsoError {
    #[error("molecule has {0} heavy atoms; the isomorphism oracle supports at most {MAX_ISO_HEAVY_ATOMS}")]
    TooLarge(usize),
}

type Label = (u8, i8, bool, u8, usize);

fn label(mol: &Molecule, i: usize) -> Label {
    let a = mol.atom(i);
    (
        a.element.atomic_number(),
        a.charge,
        a.aromatic,
        a.hydrogens,
        mol.degree(i),
    )
}

/// Label-preserving (element, charge, aromatic flag, hydrogens) and
/// bond-order-preserving isomorphism test.
pub fn is_isomorphic(a: &Molecule, b: &Molecule) -> Result<bool, IsoError> {
    for m in [a, b] {
        if m.heavy_atom_count() > MAX_ISO_HEAVY_ATOMS {
            return Err(IsoError::TooLarge(m.heavy_atom_count()));
        }
    }
    let n = a.atom_count();
    if n != b.atom_count() || a.bond_count() != b.bond_count() {
        return Ok(false);
    }
    let la: Vec<Label> = (0..n).map(|i| label(a, i)).collect();
    let lb: Vec<Label> = (0..n).map(|i| label(b, i)).collect();
    let (mut sa, mut sb) = (la.clone(), lb.clone());
    sa.sort();
    sb.sort();
    if sa != sb {
        return Ok(false);
    }

    // visit atoms of `a` so that each one (after a fragment's first) has an
    // already-mapped neighbor
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in a.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend(a, b, &la, &lb, &order, 0, &mut map, &mut used))
}

#[allow(clippy::too_many_arguments)]
fn extend(
    a: &Molecule,
    b: &Molecule,
    la: &[Label],
    lb: &[Label],
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let u = order[depth];
    for cand in 0..b.atom_count() {
        if used[cand] || la[u] != lb[cand] {
            continue;
        }
        let consistent = a.neighbors(u).iter().all(|&(v, bond)| {
            let mv = map[v];
            if mv == usize::MAX {
                return true;
            }
            match b.bond_between(cand, mv) {
                Some(bb) => b.bond(bb).order == a.bond(bond).order,
                None => false,
            }
        }) && {
            // mapped neighbors of the candidate must come from neighbors of u
            let mapped_a = a
                .neighbors(u)
                .iter()
                .filter(|&&(v, _)| map[v] != usize::MAX)
                .count();
            let mapped_b = b.neighbors(cand).iter().filter(|&&(w, _)| used[w]).count();
            mapped_a == mapped_b
        };
        if !consistent {
            continue;
        }
        map[u] = cand;
        used[cand] = true;
        if extend(a, b, la, lb, order, depth + 1, map, used) {
            return true;
        }
        map[u] = usize::MAX;
        used[cand] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn iso(x: &str, y: &str) -> bool {
        is_isomorphic(&parse_smiles(x).unwrap(), &parse_smiles(y).unwrap()).unwrap()
    }

    #[test]
    fn self_and_reordered() {
        assert!(iso("CC(=O)Oc1ccccc1C(=O)O", "CC(=O)Oc1ccccc1C(=O)O"));
        assert!(iso("CCO", "OCC"));
        assert!(!iso("CCO", "COC"));
    }

    #[test]
    fn bond_orders_and_labels_matter() {
        assert!(!iso("C=CC", "CCC"));
        assert!(!iso("CC[O-]", "CCO"));
        assert!(!iso("C1CCCCC1", "C1CC1.C1CC1"));
        assert!(iso("C1CC1.CC", "CC.C1CC1"));
    }

    #[test]
    fn size_limit() {
        let big = parse_smiles(&"C".repeat(17)).unwrap();
        assert_eq!(is_isomorphic(&big, &big), Err(IsoError::TooLarge(17)));
    }
}
