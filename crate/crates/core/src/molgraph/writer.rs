//! SMILES writer: depth-first emission guided by an atom ranking.

use super::valence::default_implicit_h;
use super::{BondOrder, Element, Molecule};

/// Writes `mol` in input atom order.
pub fn to_smiles(mol: &Molecule) -> String {
    let ranks: Vec<usize> = (0..mol.atom_count()).collect();
    write_smiles(mol, &ranks)
}

/// Writes `mol` as SMILES. Each fragment starts at its lowest-ranked atom,
/// neighbors are visited in ascending rank, and ring-closure digits are
/// allocated smallest-first.
pub fn write_smiles(mol: &Molecule, ranks: &[usize]) -> String {
    assert_eq!(ranks.len(), mol.atom_count(), "one rank per atom");
    let n = mol.atom_count();
    let mut tree = Tree {
        visited: vec![false; n],
        children: vec![Vec::new(); n],
        opens: vec![Vec::new(); n],
        closes: vec![Vec::new(); n],
        closure_seen: vec![false; mol.bond_count()],
        visit_order: vec![0; n],
        counter: 0,
    };

    let mut sorted_nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            let mut v = mol.neighbors(i).to_vec();
            v.sort_by_key(|&(j, _)| ranks[j]);
            v
        })
        .collect();

    let mut roots: Vec<usize> = Vec::new();
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_by_key(|&i| ranks[i]);
    for &start in &by_rank {
        if !tree.visited[start] {
            roots.push(start);
            tree.build(&mut sorted_nbrs, start, usize::MAX);
        }
    }

    let mut out = String::new();
    let mut digits = Digits::default();
    let mut digit_of = vec![0u32; mol.bond_count()];
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        emit(mol, &tree, root, None, &mut digits, &mut digit_of, &mut out);
    }
    out
}

struct Tree {
    visited: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// Ring bonds opened at an atom: (partner, bond).
    opens: Vec<Vec<(usize, usize)>>,
    /// Ring bonds closed at an atom: (partner, bond).
    closes: Vec<Vec<(usize, usize)>>,
    closure_seen: Vec<bool>,
    visit_order: Vec<usize>,
    counter: usize,
}

impl Tree {
    fn build(&mut self, nbrs: &mut [Vec<(usize, usize)>], u: usize, parent_bond: usize) {
        self.visited[u] = true;
        self.visit_order[u] = self.counter;
        self.counter += 1;
        let list = std::mem::take(&mut nbrs[u]);
        for &(v, b) in &list {
            if b == parent_bond {
                continue;
            }
            if self.visited[v] {
                if !self.closure_seen[b] {
                    self.closure_seen[b] = true;
                    self.opens[v].push((u, b));
                    self.closes[u].push((v, b));
                }
            } else {
                self.children[u].push((v, b));
                self.build(nbrs, v, b);
            }
        }
        nbrs[u] = list;
    }
}

#[derive(Default)]
struct Digits {
    used: Vec<bool>,
}

impl Digits {
    fn take(&mut self) -> u32 {
        let d = match self.used.iter().skip(1).position(|&u| !u) {
            Some(p) => p + 1,
            None => self.used.len().max(1),
        };
        if d >= self.used.len() {
            self.used.resize(d + 1, false);
        }
        self.used[d] = true;
        d as u32
    }

    fn release(&mut self, d: u32) {
        self.used[d as usize] = false;
    }
}

fn push_digit(out: &mut String, d: u32) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push('%');
        out.push_str(&format!("{d:02}"));
    }
}

fn bond_symbol(mol: &Molecule, bond: usize) -> Option<char> {
    let b = mol.bond(bond);
    match b.order {
        BondOrder::Single => (mol.atom(b.a).aromatic && mol.atom(b.b).aromatic).then_some('-'),
        BondOrder::Double => Some('='),
        BondOrder::Triple => Some('#'),
        BondOrder::Aromatic => None,
    }
}

fn emit(
    mol: &Molecule,
    tree: &Tree,
    u: usize,
    parent_bond: Option<usize>,
    digits: &mut Digits,
    digit_of: &mut [u32],
    out: &mut String,
) {
    if let Some(b) = parent_bond {
        if let Some(c) = bond_symbol(mol, b) {
            out.push(c);
        }
    }
    write_atom(mol, u, out);

    let mut closes = tree.closes[u].clone();
    closes.sort_by_key(|&(v, _)| tree.visit_order[v]);
    let mut opens = tree.opens[u].clone();
    opens.sort_by_key(|&(v, _)| tree.visit_order[v]);

    for &(_, b) in &closes {
        push_digit(out, digit_of[b]);
    }
    for &(_, b) in &opens {
        let d = digits.take();
        digit_of[b] = d;
        if let Some(c) = bond_symbol(mol, b) {
            out.push(c);
        }
        push_digit(out, d);
    }
    for &(_, b) in &closes {
        digits.release(digit_of[b]);
    }

    let children = &tree.children[u];
    for (k, &(v, b)) in children.iter().enumerate() {
        let last = k + 1 == children.len();
        if !last {
            out.push('(');
        }
        emit(mol, tree, v, Some(b), digits, digit_of, out);
        if !last {
            out.push(')');
        }
    }
}

fn write_atom(mol: &Molecule, i: usize, out: &mut String) {
    let atom = mol.atom(i);
    let organic = atom.element != Element::H
        && atom.charge == 0
        && (!atom.aromatic || atom.element.can_be_aromatic())
        && atom.hydrogens == default_implicit_h(mol, i);
    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if organic {
        out.push_str(&symbol);
        return;
    }
    out.push('[');
    out.push_str(&symbol);
    match atom.hydrogens {
        0 => {}
        1 => out.push('H'),
        h => out.push_str(&format!("H{h}")),
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
}
