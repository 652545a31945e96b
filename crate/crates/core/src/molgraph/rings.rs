use super::Molecule;

/// Ring membership and small simple cycles.
#[derive(Clone, Debug)]
pub struct RingInfo {
    /// Bond lies on some cycle (is not a bridge).
    pub ring_bond: Vec<bool>,
    /// Atom is an endpoint of a ring bond.
    pub ring_atom: Vec<bool>,
    /// Simple cycles up to the requested length, each as an atom list
    /// starting at its smallest atom index.
    pub cycles: Vec<Vec<usize>>,
}

impl RingInfo {
    /// Ring membership only (no cycle enumeration).
    pub fn membership(mol: &Molecule) -> RingInfo {
        Self::new(mol, 0)
    }

    pub fn new(mol: &Molecule, max_cycle_len: usize) -> RingInfo {
        let ring_bond = ring_bonds(mol);
        let mut ring_atom = vec![false; mol.atom_count()];
        for (k, bond) in mol.bonds().iter().enumerate() {
            if ring_bond[k] {
                ring_atom[bond.a] = true;
                ring_atom[bond.b] = true;
            }
        }
        let cycles = if max_cycle_len >= 3 {
            simple_cycles(mol, &ring_bond, max_cycle_len)
        } else {
            Vec::new()
        };
        RingInfo {
            ring_bond,
            ring_atom,
            cycles,
        }
    }

    pub fn has_cycle_of_len(&self, len: usize) -> bool {
        self.cycles.iter().any(|c| c.len() == len)
    }
}

/// Non-bridge bonds, via iterative low-link DFS.
fn ring_bonds(mol: &Molecule) -> Vec<bool> {
    let n = mol.atom_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; mol.bond_count()];
    let mut time = 0;
    // (atom, parent bond, next neighbor position)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (u, parent_bond, ref mut pos)) = stack.last_mut() {
            let nbrs = mol.neighbors(u);
            if *pos < nbrs.len() {
                let (v, b) = nbrs[*pos];
                *pos += 1;
                if b == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    is_bridge.iter().map(|&b| !b).collect()
}

fn simple_cycles(mol: &Molecule, ring_bond: &[bool], max_len: usize) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    let mut path = Vec::with_capacity(max_len);
    let mut on_path = vec![false; mol.atom_count()];
    for start in 0..mol.atom_count() {
        path.push(start);
        on_path[start] = true;
        extend(
            mol,
            ring_bond,
            max_len,
            start,
            &mut path,
            &mut on_path,
            &mut cycles,
        );
        on_path[start] = false;
        path.pop();
    }
    cycles
}

fn extend(
    mol: &Molecule,
    ring_bond: &[bool],
    max_len: usize,
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    cycles: &mut Vec<Vec<usize>>,
) {
    let u = *path.last().unwrap();
    for &(v, b) in mol.neighbors(u) {
        if !ring_bond[b] {
            continue;
        }
        if v == start && path.len() >= 3 {
            // each cycle is seen twice; keep the direction with the smaller second atom
            if path[1] < path[path.len() - 1] {
                cycles.push(path.clone());
            }
            continue;
        }
        if v <= start || on_path[v] || path.len() >= max_len {
            continue;
        }
        path.push(v);
        on_path[v] = true;
        extend(mol, ring_bond, max_len, start, path, on_path, cycles);
        on_path[v] = false;
        path.pop();
    }
}
