//! SMILES reader.
//!
//! Accepted subset: organic-subset and bracket atoms (hydrogen count and
//! charge), branches, ring closures (`0`-`9`, `%nn`), bond symbols
//! `- = # :`, aromatic lowercase atoms and `.` fragments. Stereo marks
//! (`/ \ @`) and atom classes are read and dropped. Isotopes are rejected.

use super::rings::RingInfo;
use super::valence::default_implicit_h;
use super::{Atom, BondOrder, Element, Molecule};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmilesError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown element '{symbol}' at byte {offset}")]
    UnknownElement { offset: usize, symbol: String },
    #[error("unmatched ring closure {label} opened at byte {offset}")]
    UnmatchedRing { offset: usize, label: u32 },
    #[error("unmatched parenthesis at byte {offset}")]
    UnmatchedParen { offset: usize },
}

impl SmilesError {
    pub fn offset(&self) -> usize {
        match self {
            SmilesError::Syntax { offset, .. }
            | SmilesError::UnknownElement { offset, .. }
            | SmilesError::UnmatchedRing { offset, .. }
            | SmilesError::UnmatchedParen { offset } => *offset,
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> SmilesError {
    SmilesError::Syntax {
        offset,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondSym {
    fn from_byte(c: u8) -> Option<BondSym> {
        match c {
            b'-' | b'/' | b'\\' => Some(BondSym::Single),
            b'=' => Some(BondSym::Double),
            b'#' => Some(BondSym::Triple),
            b':' => Some(BondSym::Aromatic),
            _ => None,
        }
    }

    fn order(self) -> BondOrder {
        match self {
            BondSym::Single => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct OpenRing {
    atom: usize,
    bond: Option<BondSym>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    mol: Molecule,
    /// Atom written without brackets: hydrogens are filled in afterwards.
    implicit: Vec<bool>,
    /// Bonds with their symbol, `None` when left implicit.
    pending: Vec<(usize, usize, Option<BondSym>, usize)>,
    rings: BTreeMap<u32, OpenRing>,
}

/// Parses a SMILES string into a [`Molecule`].
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    if text.is_empty() {
        return Err(syntax(0, "empty input"));
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        mol: Molecule::new(),
        implicit: Vec::new(),
        pending: Vec::new(),
        rings: BTreeMap::new(),
    };
    p.parse_body()?;
    p.finish()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn parse_body(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut bond: Option<(BondSym, usize)> = None;
        // (atom before the branch, offset of '(')
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        // an atom is required next (start, after '(' , after '.', after a bond)
        let mut need_atom = true;

        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() || bond.is_some() || need_atom {
                        return Err(syntax(offset, "branch must follow an atom"));
                    }
                    branches.push((prev, offset));
                    self.pos += 1;
                    need_atom = true;
                }
                b')' => {
                    if bond.is_some() {
                        return Err(syntax(offset, "bond without a following atom"));
                    }
                    if need_atom {
                        return Err(syntax(offset, "empty branch"));
                    }
                    let (p, _) = branches
                        .pop()
                        .ok_or(SmilesError::UnmatchedParen { offset })?;
                    prev = p;
                    self.pos += 1;
                }
                b'.' => {
                    if bond.is_some() || need_atom {
                        return Err(syntax(offset, "dot must follow an atom"));
                    }
                    if !branches.is_empty() {
                        return Err(syntax(offset, "dot inside a branch"));
                    }
                    prev = None;
                    need_atom = true;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if bond.is_some() {
                        return Err(syntax(offset, "two consecutive bond symbols"));
                    }
                    if prev.is_none() {
                        return Err(syntax(offset, "bond must follow an atom"));
                    }
                    bond = Some((BondSym::from_byte(c).unwrap(), offset));
                    self.pos += 1;
                    need_atom = false;
                }
                b'$' => return Err(syntax(offset, "quadruple bonds are not supported")),
                b'0'..=b'9' | b'%' => {
                    let atom = match prev {
                        Some(a) if !need_atom => a,
                        _ => return Err(syntax(offset, "ring closure must follow an atom")),
                    };
                    let label = self.ring_label()?;
                    self.ring_closure(atom, label, bond.take(), offset)?;
                }
                b'[' | b'A'..=b'Z' | b'a'..=b'z' | b'*' => {
                    let atom = self.parse_atom()?;
                    if let Some(p) = prev {
                        let sym = bond.take();
                        self.pending
                            .push((p, atom, sym.map(|s| s.0), sym.map_or(offset, |s| s.1)));
                    }
                    prev = Some(atom);
                    need_atom = false;
                }
                _ => {
                    return Err(syntax(
                        offset,
                        format!("unexpected character '{}'", char::from(c)),
                    ))
                }
            }
        }
        let end = self.text.len();
        if bond.is_some() {
            return Err(syntax(end, "bond without a following atom"));
        }
        if let Some(&(_, offset)) = branches.first() {
            return Err(SmilesError::UnmatchedParen { offset });
        }
        if need_atom {
            return Err(syntax(end, "unexpected end of input"));
        }
        if let Some((&label, open)) = self.rings.iter().next() {
            return Err(SmilesError::UnmatchedRing {
                offset: open.offset,
                label,
            });
        }
        Ok(())
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let offset = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.text.get(self.pos..self.pos + 2);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 2;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => Err(syntax(offset, "'%' must be followed by two digits")),
            }
        } else {
            let d = self.peek().unwrap() - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn ring_closure(
        &mut self,
        atom: usize,
        label: u32,
        bond: Option<(BondSym, usize)>,
        offset: usize,
    ) -> Result<(), SmilesError> {
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(
                    label,
                    OpenRing {
                        atom,
                        bond: bond.map(|b| b.0),
                        offset,
                    },
                );
            }
            Some(open) => {
                if open.atom == atom {
                    return Err(syntax(offset, "ring closure to the same atom"));
                }
                let sym = match (open.bond, bond.map(|b| b.0)) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(syntax(offset, "conflicting ring-closure bond symbols"))
                    }
                    (a, b) => a.or(b),
                };
                if self.pending.iter().any(|&(x, y, _, _)| {
                    (x == open.atom && y == atom) || (x == atom && y == open.atom)
                }) {
                    return Err(syntax(offset, "duplicate bond"));
                }
                self.pending.push((open.atom, atom, sym, offset));
            }
        }
        Ok(())
    }

    fn parse_atom(&mut self) -> Result<usize, SmilesError> {
        let offset = self.pos;
        let c = self.peek().unwrap();
        if c == b'[' {
            return self.parse_bracket_atom();
        }
        let (element, aromatic, len) = match c {
            b'B' if self.text.get(self.pos + 1) == Some(&b'r') => (Element::Br, false, 2),
            b'C' if self.text.get(self.pos + 1) == Some(&b'l') => (Element::Cl, false, 2),
            b'B' => (Element::B, false, 1),
            b'C' => (Element::C, false, 1),
            b'N' => (Element::N, false, 1),
            b'O' => (Element::O, false, 1),
            b'P' => (Element::P, false, 1),
            b'S' => (Element::S, false, 1),
            b'F' => (Element::F, false, 1),
            b'I' => (Element::I, false, 1),
            b'b' => (Element::B, true, 1),
            b'c' => (Element::C, true, 1),
            b'n' => (Element::N, true, 1),
            b'o' => (Element::O, true, 1),
            b'p' => (Element::P, true, 1),
            b's' => (Element::S, true, 1),
            b'H' => return Err(syntax(offset, "hydrogen must be written in brackets")),
            _ => {
                let mut end = self.pos + 1;
                if c.is_ascii_uppercase()
                    && self.text.get(end).is_some_and(|b| b.is_ascii_lowercase())
                {
                    end += 1;
                }
                return Err(SmilesError::UnknownElement {
                    offset,
                    symbol: String::from_utf8_lossy(&self.text[self.pos..end]).into_owned(),
                });
            }
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        let idx = self.mol.add_atom(atom);
        self.implicit.push(true);
        Ok(idx)
    }

    fn parse_bracket_atom(&mut self) -> Result<usize, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        if self.peek().is_some_and(|b| b.is_ascii_digit()) {
            return Err(syntax(self.pos, "isotopes are not supported"));
        }
        let sym_start = self.pos;
        let (element, aromatic) = match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                let mut end = self.pos + 1;
                if self.text.get(end).is_some_and(|b| b.is_ascii_lowercase()) {
                    end += 1;
                }
                let symbol = std::str::from_utf8(&self.text[self.pos..end]).unwrap();
                let element =
                    Element::from_symbol(symbol).ok_or_else(|| SmilesError::UnknownElement {
                        offset: sym_start,
                        symbol: symbol.to_string(),
                    })?;
                self.pos = end;
                (element, false)
            }
            Some(c) if c.is_ascii_lowercase() => {
                let mut end = self.pos + 1;
                if self.text.get(end).is_some_and(|b| b.is_ascii_lowercase()) {
                    end += 1;
                }
                let symbol = std::str::from_utf8(&self.text[self.pos..end]).unwrap();
                let element = match symbol {
                    "b" => Element::B,
                    "c" => Element::C,
                    "n" => Element::N,
                    "o" => Element::O,
                    "p" => Element::P,
                    "s" => Element::S,
                    _ => {
                        return Err(SmilesError::UnknownElement {
                            offset: sym_start,
                            symbol: symbol.to_string(),
                        })
                    }
                };
                self.pos = end;
                (element, true)
            }
            _ => return Err(syntax(self.pos, "expected element symbol")),
        };

        // chirality
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }
        if let Some(two) = self.text.get(self.pos..self.pos + 2) {
            if matches!(two, b"TH" | b"AL" | b"SP" | b"TB" | b"OH")
                && self.text[self.pos - 1] == b'@'
            {
                self.pos += 2;
                while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = match self.read_number() {
                Some(n) if n <= 8 => n as u8,
                Some(_) => return Err(syntax(self.pos, "hydrogen count too large")),
                None => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.read_number() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }
        if !(-4..=4).contains(&charge) {
            return Err(syntax(open, "formal charge outside [-4, 4]"));
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.read_number().is_none() {
                return Err(syntax(self.pos, "atom class must be a number"));
            }
        }

        if self.peek() != Some(b']') {
            return Err(syntax(self.pos, "expected ']'"));
        }
        self.pos += 1;

        let atom = Atom {
            element,
            charge: charge as i8,
            aromatic,
            hydrogens,
        };
        let idx = self.mol.add_atom(atom);
        self.implicit.push(false);
        Ok(idx)
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) && self.pos - start < 3 {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    fn finish(mut self) -> Result<Molecule, SmilesError> {
        for &(a, b, sym, offset) in &self.pending {
            let order = match sym {
                Some(s) => s.order(),
                None if self.mol.atom(a).aromatic && self.mol.atom(b).aromatic => {
                    BondOrder::Aromatic
                }
                None => BondOrder::Single,
            };
            if order == BondOrder::Aromatic
                && !(self.mol.atom(a).aromatic && self.mol.atom(b).aromatic)
            {
                return Err(syntax(offset, "aromatic bond between non-aromatic atoms"));
            }
            self.mol
                .add_bond(a, b, order)
                .map_err(|e| syntax(offset, e.to_string()))?;
        }

        // aromatic bonds outside rings are single bonds (biphenyl-style links)
        let rings = RingInfo::membership(&self.mol);
        for k in 0..self.mol.bond_count() {
            if self.mol.bond(k).order == BondOrder::Aromatic && !rings.ring_bond[k] {
                self.mol.set_bond_order(k, BondOrder::Single);
            }
        }
        for i in 0..self.mol.atom_count() {
            if self.mol.atom(i).aromatic
                && !self
                    .mol
                    .neighbors(i)
                    .iter()
                    .any(|&(_, b)| self.mol.bond(b).order == BondOrder::Aromatic)
            {
                return Err(syntax(
                    0,
                    format!("aromatic atom {i} is not in an aromatic ring"),
                ));
            }
        }
        for i in 0..self.mol.atom_count() {
            if self.implicit[i] {
                let h = default_implicit_h(&self.mol, i);
                self.mol.atom_mut(i).hydrogens = h;
            }
        }
        Ok(self.mol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(m.atom_count(), 1);
        assert_eq!(m.bond_count(), 0);
        assert_eq!(m.atom(0).hydrogens, 4);
    }

    #[test]
    fn benzene() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.atom_count(), 6);
        assert_eq!(m.bond_count(), 6);
        assert!(m.atoms().iter().all(|a| a.aromatic && a.hydrogens == 1));
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(RingInfo::new(&m, 8).cycles.len(), 1);
    }

    #[test]
    fn aspirin_counts() {
        let m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        assert_eq!(m.heavy_atom_count(), 13);
        assert_eq!(m.bond_count(), 13);
    }

    #[test]
    fn bracket_atoms() {
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.atom(0).charge, 1);
        assert_eq!(m.atom(0).hydrogens, 4);
        let m = parse_smiles("[O-]C(=O)C").unwrap();
        assert_eq!(m.atom(0).charge, -1);
        assert_eq!(m.atom(0).hydrogens, 0);
        let m = parse_smiles("[Fe++]").unwrap_err();
        assert!(matches!(m, SmilesError::UnknownElement { .. }));
        assert_eq!(parse_smiles("[N+2]").unwrap().atom(0).charge, 2);
        assert_eq!(parse_smiles("[C--]").unwrap().atom(0).charge, -2);
        assert_eq!(parse_smiles("[nH]1cccc1").unwrap().atom(0).hydrogens, 1);
    }

    #[test]
    fn stereo_is_discarded() {
        let a = parse_smiles("F/C=C/F").unwrap();
        let b = parse_smiles("FC=CF").unwrap();
        assert_eq!(a, b);
        let c = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        let d = parse_smiles("N[CH](C)C(=O)O").unwrap();
        assert_eq!(c, d);
        assert_eq!(parse_smiles("N[C@TH1H](C)O").unwrap().atom(1).hydrogens, 1);
    }

    #[test]
    fn percent_ring_labels() {
        let a = parse_smiles("C%12CCCC%12").unwrap();
        assert_eq!(a.bond_count(), 5);
        let b = parse_smiles("C1CCCC1").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ring_bond_symbol_on_either_side() {
        let a = parse_smiles("C=1CCCC1").unwrap();
        let b = parse_smiles("C1CCCC=1").unwrap();
        assert_eq!(a, b);
        assert!(parse_smiles("C=1CCCC#1").is_err());
    }

    #[test]
    fn dot_fragments() {
        let m = parse_smiles("CC(=O)O.[Cl-]").unwrap();
        assert_eq!(m.fragments().len(), 2);
        assert_eq!(m.atom(4).hydrogens, 0);
    }

    #[test]
    fn biphenyl_link_is_single() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = m.bond_between(5, 6).unwrap();
        assert_eq!(m.bond(link).order, BondOrder::Single);
        assert_eq!(m.atom(5).hydrogens, 0);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse_smiles("C(").unwrap_err(),
            SmilesError::UnmatchedParen { offset: 1 }
        );
        assert_eq!(
            parse_smiles("CC)").unwrap_err(),
            SmilesError::UnmatchedParen { offset: 2 }
        );
        assert_eq!(
            parse_smiles("C1CC").unwrap_err(),
            SmilesError::UnmatchedRing {
                offset: 1,
                label: 1
            }
        );
        assert_eq!(
            parse_smiles("CXC").unwrap_err(),
            SmilesError::UnknownElement {
                offset: 1,
                symbol: "X".into()
            }
        );
        assert_eq!(
            parse_smiles("C[Na]").unwrap_err(),
            SmilesError::UnknownElement {
                offset: 2,
                symbol: "Na".into()
            }
        );
        assert!(matches!(
            parse_smiles("").unwrap_err(),
            SmilesError::Syntax { offset: 0, .. }
        ));
        assert!(matches!(
            parse_smiles("C=").unwrap_err(),
            SmilesError::Syntax { offset: 2, .. }
        ));
        assert!(matches!(
            parse_smiles("C C").unwrap_err(),
            SmilesError::Syntax { offset: 1, .. }
        ));
        assert!(parse_smiles("[13C]").is_err());
        assert!(parse_smiles("()C").is_err());
        assert!(parse_smiles("C()C").is_err());
        assert!(parse_smiles("C11").is_err());
        assert!(parse_smiles("C12CC12").is_err());
        assert!(parse_smiles("c1CCCC1").is_err());
        assert!(parse_smiles("C..C").is_err());
    }
}
