//! SELFIES codec over a restricted alphabet.
//!
//! Tokens: atoms `[X]`, `[-X]`, `[=X]`, `[#X]` for X in B, C, N, O, P, S, F,
//! Cl, Br, I; branches `[Branch1]`/`[Branch2]` and rings `[Ring1]`/`[Ring2]`,
//! each optionally prefixed by `=` or `#`; and `[nop]`. Any token may also be
//! read as an index digit (see `index_value`).
//!
//! Decoding follows the derivation-state rules: every atom has a bonding
//! capacity, the state tracks how much of the previous atom's capacity is
//! left, and bond orders are clipped to what is left. Tokens that would
//! exceed capacity are skipped, which is what makes every token string decode
//! to a valence-valid molecule.

use super::kekule::kekulize;
use super::valence::default_implicit_h;
use super::{Atom, BondOrder, Element, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelfiesError {
    #[error("malformed token stream at byte {0}")]
    Tokenize(usize),
    #[error("token '{0}' is not in the supported alphabet")]
    UnknownToken(String),
    #[error("atom {0} cannot be expressed in the supported alphabet")]
    OutOfAlphabet(usize),
    #[error("molecule has {0} fragments; only single-fragment molecules are encoded")]
    MultiFragment(usize),
    #[error("aromatic system cannot be kekulized")]
    Kekulize,
    #[error("branch or ring span {0} exceeds the two-digit index range")]
    SpanTooLong(usize),
}

/// Index digit order: token text -> value 0..15; everything else reads as 0.
const INDEX_TOKENS: [&str; 16] = [
    "[C]",
    "[Ring1]",
    "[Ring2]",
    "[Branch1]",
    "[=Branch1]",
    "[#Branch1]",
    "[Branch2]",
    "[=Branch2]",
    "[#Branch2]",
    "[O]",
    "[N]",
    "[=N]",
    "[=C]",
    "[#C]",
    "[S]",
    "[P]",
];

const ALPHABET_ELEMENTS: [Element; 10] = [
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
];

fn capacity(e: Element) -> u32 {
    match e {
        Element::B => 3,
        Element::C => 4,
        Element::N => 3,
        Element::O => 2,
        Element::P => 5,
        Element::S => 6,
        Element::F | Element::Cl | Element::Br | Element::I | Element::H => 1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    Atom(u32, Element),
    Branch(u32, usize),
    Ring(u32, usize),
    Nop,
}

fn index_value(text: &str) -> usize {
    INDEX_TOKENS.iter().position(|&t| t == text).unwrap_or(0)
}

fn parse_token(text: &str) -> Result<Token, SelfiesError> {
    let inner = &text[1..text.len() - 1];
    if inner == "nop" {
        return Ok(Token::Nop);
    }
    let (order, rest) = match inner.as_bytes().first() {
        Some(b'=') => (2, &inner[1..]),
        Some(b'#') => (3, &inner[1..]),
        Some(b'-') => (1, &inner[1..]),
        _ => (1, inner),
    };
    let token = match rest {
        "Branch1" => Token::Branch(order, 1),
        "Branch2" => Token::Branch(order, 2),
        "Ring1" => Token::Ring(order, 1),
        "Ring2" => Token::Ring(order, 2),
        sym => match Element::from_symbol(sym) {
            Some(e) if ALPHABET_ELEMENTS.contains(&e) => Token::Atom(order, e),
            _ => return Err(SelfiesError::UnknownToken(text.to_string())),
        },
    };
    Ok(token)
}

fn tokenize(text: &str) -> Result<Vec<(&str, Token)>, SelfiesError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < bytes.len() {
        if bytes[pos] != b'[' {
            return Err(SelfiesError::Tokenize(pos));
        }
        let end = text[pos..]
            .find(']')
            .map(|k| pos + k + 1)
            .ok_or(SelfiesError::Tokenize(pos))?;
        let piece = &text[pos..end];
        if piece[1..].contains('[') {
            return Err(SelfiesError::Tokenize(pos));
        }
        out.push((piece, parse_token(piece)?));
        pos = end;
    }
    Ok(out)
}

struct Decoder<'a> {
    tokens: &'a [(&'a str, Token)],
    pos: usize,
    mol: Molecule,
    /// (earlier atom, later atom, requested order)
    rings: Vec<(usize, usize, u32)>,
}

impl<'a> Decoder<'a> {
    fn read_index(&mut self, digits: usize) -> usize {
        let mut q = 0;
        for _ in 0..digits {
            let v = match self.tokens.get(self.pos) {
                Some((text, _)) => {
                    self.pos += 1;
                    index_value(text)
                }
                None => 0,
            };
            q = q * 16 + v;
        }
        q
    }

    /// Derives up to `budget` tokens (None = until the end), starting from
    /// `prev` with `state` capacity left. Returns tokens consumed.
    fn derive(&mut self, budget: Option<usize>, mut prev: Option<usize>, mut state: u32) -> usize {
        let start = self.pos;
        while self.pos < self.tokens.len() {
            if budget.is_some_and(|b| self.pos - start >= b) {
                break;
            }
            let (_, token) = self.tokens[self.pos];
            self.pos += 1;
            match token {
                Token::Nop => {}
                Token::Atom(order, element) => {
                    let cap = capacity(element);
                    match prev {
                        None => {
                            prev = Some(self.mol.add_atom(Atom::new(element)));
                            state = cap;
                        }
                        Some(_) if state == 0 => {}
                        Some(p) => {
                            let order = order.min(state).min(cap);
                            let a = self.mol.add_atom(Atom::new(element));
                            self.mol
                                .add_bond(p, a, BondOrder::from_integer(order).unwrap())
                                .expect("new atom");
                            prev = Some(a);
                            state = cap - order;
                        }
                    }
                }
                Token::Branch(order, digits) => {
                    if state <= 1 || prev.is_none() {
                        continue;
                    }
                    let q = self.read_index(digits);
                    let init = (state - 1).min(order);
                    let remaining = budget.map(|b| b.saturating_sub(self.pos - start));
                    let len = match remaining {
                        Some(r) => (q + 1).min(r),
                        None => q + 1,
                    };
                    self.derive(Some(len), prev, init);
                    state -= init;
                }
                Token::Ring(order, digits) => {
                    let Some(p) = prev else { continue };
                    if state == 0 {
                        continue;
                    }
                    let q = self.read_index(digits);
                    let target = p.saturating_sub(q + 1);
                    let order = order.min(state);
                    self.rings.push((target, p, order));
                    state -= order;
                }
            }
        }
        self.pos - start
    }

    fn free_valence(&self, i: usize) -> u32 {
        let used: u32 = self
            .mol
            .neighbors(i)
            .iter()
            .map(|&(_, b)| self.mol.bond(b).order.integer_order())
            .sum();
        capacity(self.mol.atom(i).element).saturating_sub(used)
    }

    fn close_rings(&mut self) {
        let rings = std::mem::take(&mut self.rings);
        for (a, b, order) in rings {
            if a == b {
                continue;
            }
            let order = order.min(self.free_valence(a)).min(self.free_valence(b));
            if order == 0 {
                continue;
            }
            match self.mol.bond_between(a, b) {
                Some(k) => {
                    let current = self.mol.bond(k).order.integer_order();
                    let merged = (current + order).min(3);
                    self.mol
                        .set_bond_order(k, BondOrder::from_integer(merged).unwrap());
                }
                None => {
                    self.mol
                        .add_bond(a, b, BondOrder::from_integer(order).unwrap())
                        .expect("distinct atoms");
                }
            }
        }
    }
}

/// Decodes a SELFIES string. Total over the alphabet: any sequence of
/// supported tokens yields a valence-valid molecule (possibly empty).
pub fn decode_selfies(text: &str) -> Result<Molecule, SelfiesError> {
    let tokens = tokenize(text)?;
    let mut dec = Decoder {
        tokens: &tokens,
        pos: 0,
        mol: Molecule::new(),
        rings: Vec::new(),
    };
    dec.derive(None, None, 0);
    dec.close_rings();
    let mut mol = dec.mol;
    for i in 0..mol.atom_count() {
        let h = default_implicit_h(&mol, i);
        mol.atom_mut(i).hydrogens = h;
    }
    Ok(mol)
}

fn atom_token(order: BondOrder, element: Element) -> String {
    let prefix = match order {
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        _ => "",
    };
    format!("[{prefix}{}]", element.symbol())
}

fn prefixed(order: BondOrder, name: &str) -> String {
    match order {
        BondOrder::Double => format!("[={name}]"),
        BondOrder::Triple => format!("[#{name}]"),
        _ => format!("[{name}]"),
    }
}

fn index_tokens(q: usize) -> Result<(usize, Vec<String>), SelfiesError> {
    if q < 16 {
        Ok((1, vec![INDEX_TOKENS[q].to_string()]))
    } else if q < 256 {
        Ok((
            2,
            vec![
                INDEX_TOKENS[q / 16].to_string(),
                INDEX_TOKENS[q % 16].to_string(),
            ],
        ))
    } else {
        Err(SelfiesError::SpanTooLong(q))
    }
}

/// Encodes a single-fragment molecule. Aromatic systems are kekulized first;
/// atoms must be neutral, in the alphabet, and carry exactly the hydrogens a
/// decoder would give them.
pub fn encode_selfies(mol: &Molecule) -> Result<String, SelfiesError> {
    if mol.is_empty() {
        return Ok(String::new());
    }
    let frags = mol.fragments();
    if frags.len() > 1 {
        return Err(SelfiesError::MultiFragment(frags.len()));
    }
    let mol = kekulize(mol).map_err(|_| SelfiesError::Kekulize)?;
    for (i, atom) in mol.atoms().iter().enumerate() {
        let used: u32 = mol
            .neighbors(i)
            .iter()
            .map(|&(_, b)| mol.bond(b).order.integer_order())
            .sum();
        if !ALPHABET_ELEMENTS.contains(&atom.element)
            || atom.charge != 0
            || used > capacity(atom.element)
            || atom.hydrogens != default_implicit_h(&mol, i)
        {
            return Err(SelfiesError::OutOfAlphabet(i));
        }
    }

    // spanning tree in DFS order; derivation index = visit order
    let n = mol.atom_count();
    let mut visit = vec![usize::MAX; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut seen_bond = vec![false; mol.bond_count()];
    let mut counter = 0;
    build(
        &mol,
        0,
        usize::MAX,
        &mut visit,
        &mut counter,
        &mut children,
        &mut closures,
        &mut seen_bond,
    );

    let tokens = emit(&mol, 0, None, &visit, &children, &closures)?;
    Ok(tokens.concat())
}

#[allow(clippy::too_many_arguments)]
fn build(
    mol: &Molecule,
    u: usize,
    parent_bond: usize,
    visit: &mut [usize],
    counter: &mut usize,
    children: &mut [Vec<(usize, usize)>],
    closures: &mut [Vec<(usize, usize)>],
    seen_bond: &mut [bool],
) {
    visit[u] = *counter;
    *counter += 1;
    for &(v, b) in mol.neighbors(u) {
        if b == parent_bond || seen_bond[b] {
            continue;
        }
        if visit[v] != usize::MAX {
            // ring closure written at the later atom `u`
            seen_bond[b] = true;
            closures[u].push((v, b));
        } else {
            seen_bond[b] = true;
            children[u].push((v, b));
            build(mol, v, b, visit, counter, children, closures, seen_bond);
        }
    }
}

fn emit(
    mol: &Molecule,
    u: usize,
    parent_bond: Option<usize>,
    visit: &[usize],
    children: &[Vec<(usize, usize)>],
    closures: &[Vec<(usize, usize)>],
) -> Result<Vec<String>, SelfiesError> {
    let order = parent_bond.map_or(BondOrder::Single, |b| mol.bond(b).order);
    let mut out = vec![atom_token(order, mol.atom(u).element)];
    for &(v, b) in &closures[u] {
        let q = visit[u] - visit[v] - 1;
        let (digits, idx) = index_tokens(q)?;
        let name = if digits == 1 { "Ring1" } else { "Ring2" };
        out.push(prefixed(mol.bond(b).order, name));
        out.extend(idx);
    }
    let kids = &children[u];
    for (k, &(v, b)) in kids.iter().enumerate() {
        let sub = emit(mol, v, Some(b), visit, children, closures)?;
        if k + 1 == kids.len() {
            out.extend(sub);
        } else {
            let (digits, idx) = index_tokens(sub.len() - 1)?;
            let name = if digits == 1 { "Branch1" } else { "Branch2" };
            out.push(prefixed(mol.bond(b).order, name));
            out.extend(idx);
            out.extend(sub);
        }
    }
    Ok(out)
}
