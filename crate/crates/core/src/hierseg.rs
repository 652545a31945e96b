//! Hierarchical segmentation: motif fragmentation and the augmented
//! atom/motif/graph node graph.

use crate::molgraph::{BondOrder, Element, Molecule, RingInfo};
use serde::{Deserialize, Serialize};

/// Decides which bonds are cut when extracting motifs.
pub trait FragmentationRules {
    fn name(&self) -> &'static str;

    /// Whether bond `b` is cut. Only called for single, acyclic bonds.
    fn cuts(&self, mol: &Molecule, rings: &RingInfo, b: usize) -> bool;
}

/// Default rule set. A single acyclic bond between two atoms of heavy degree
/// at least 2 is cut when exactly one endpoint is in a ring, or when it joins
/// a carbon to an acyclic N, O, S or P.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpleBrics;

impl FragmentationRules for SimpleBrics {
    fn name(&self) -> &'static str {
        "simple-brics"
    }

    fn cuts(&self, mol: &Molecule, rings: &RingInfo, b: usize) -> bool {
        let bond = mol.bond(b);
        let (u, v) = (bond.a, bond.b);
        if mol.heavy_degree(u) < 2 || mol.heavy_degree(v) < 2 {
            return false;
        }
        let (ru, rv) = (rings.ring_atom[u], rings.ring_atom[v]);
        if ru != rv {
            return true;
        }
        let hetero = |x: usize, rx: bool| {
            !rx && matches!(
                mol.atom(x).element,
                Element::N | Element::O | Element::S | Element::P
            )
        };
        let carbon = |x: usize| mol.atom(x).element == Element::C;
        (carbon(u) && hetero(v, rv)) || (carbon(v) && hetero(u, ru))
    }
}

/// Looks up a rule set by its name.
pub fn rules_by_name(name: &str) -> Option<Box<dyn FragmentationRules + Send + Sync>> {
    match name {
        "simple-brics" => Some(Box::new(SimpleBrics)),
        _ => None,
    }
}

/// Indices of bonds cut by `rules`, ascending.
pub fn fragment_bonds(mol: &Molecule, rules: &dyn FragmentationRules) -> Vec<usize> {
    let rings = RingInfo::membership(mol);
    (0..mol.bond_count())
        .filter(|&b| {
            mol.bond(b).order == BondOrder::Single
                && !rings.ring_bond[b]
                && rules.cuts(mol, &rings, b)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifPartition {
    pub motif_id: Vec<usize>,
    pub num_motifs: usize,
}

impl MotifPartition {
    /// Atom lists per motif, each ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_motifs];
        for (atom, &m) in self.motif_id.iter().enumerate() {
            out[m].push(atom);
        }
        out
    }
}

/// Connected components after removing `cuts`. Motifs are numbered in order
/// of their lowest atom index.
pub fn build_motifs(mol: &Molecule, cuts: &[usize]) -> MotifPartition {
    let n = mol.atom_count();
    let mut cut = vec![false; mol.bond_count()];
    for &b in cuts {
        cut[b] = true;
    }
    let mut motif_id = vec![usize::MAX; n];
    let mut num_motifs = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if motif_id[start] != usize::MAX {
            continue;
        }
        motif_id[start] = num_motifs;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &(v, b) in mol.neighbors(u) {
                if !cut[b] && motif_id[v] == usize::MAX {
                    motif_id[v] = num_motifs;
                    stack.push(v);
                }
            }
        }
        num_motifs += 1;
    }
    MotifPartition {
        motif_id,
        num_motifs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Atom,
    Motif,
    Graph,
}

/// Input token of a node in the encoder's type table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeToken {
    Element(Element),
    Motif,
    Graph,
    Mask,
}

impl NodeToken {
    pub const COUNT: usize = Element::COUNT + 3;

    pub fn index(self) -> usize {
        match self {
            NodeToken::Element(e) => e.index(),
            NodeToken::Motif => Element::COUNT,
            NodeToken::Graph => Element::COUNT + 1,
            NodeToken::Mask => Element::COUNT + 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Bond(BondOrder),
    /// A bond whose order is hidden from the encoder.
    MaskedBond,
    MotifLink,
    GraphLink,
}

impl EdgeKind {
    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        match self {
            EdgeKind::Bond(o) => o.index(),
            EdgeKind::MotifLink => 4,
            EdgeKind::GraphLink => 5,
            EdgeKind::MaskedBond => 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HierEdge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
}

/// Augmented graph. Nodes are ordered atoms (`0..a`), motifs (`a..a+b`),
/// then the single graph node (`a+b`). Edges: the molecule's bonds in bond
/// order, one motif link per atom, one graph link per motif.
#[derive(Clone, Debug)]
pub struct HierGraph {
    pub mol: Molecule,
    pub partition: MotifPartition,
    pub tokens: Vec<NodeToken>,
    pub edges: Vec<HierEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl HierGraph {
    pub fn a(&self) -> usize {
        self.mol.atom_count()
    }

    pub fn b(&self) -> usize {
        self.partition.num_motifs
    }

    pub fn node_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn graph_node(&self) -> usize {
        self.a() + self.b()
    }

    pub fn motif_node(&self, motif: usize) -> usize {
        self.a() + motif
    }

    pub fn level(&self, node: usize) -> Level {
        if node < self.a() {
            Level::Atom
        } else if node < self.graph_node() {
            Level::Motif
        } else {
            Level::Graph
        }
    }

    /// `(neighbor, edge index)` per node, neighbors ascending.
    pub fn adjacency(&self) -> &[Vec<(usize, usize)>] {
        &self.adjacency
    }

    pub fn count_edges(&self, pred: impl Fn(EdgeKind) -> bool) -> usize {
        self.edges.iter().filter(|e| pred(e.kind)).count()
    }

    /// Rebuilds the adjacency after `edges` were edited in place.
    pub(crate) fn with_edges(mut self, edges: Vec<HierEdge>) -> HierGraph {
        self.adjacency = adjacency_of(self.tokens.len(), &edges);
        self.edges = edges;
        self
    }

    /// Verifies the structural laws; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        let (a, b) = (self.a(), self.b());
        if self.node_count() != a + b + 1 {
            return Err(format!("node count {} != {}", self.node_count(), a + b + 1));
        }
        if self.partition.motif_id.len() != a {
            return Err("partition does not cover every atom".into());
        }
        let mut sizes = vec![0usize; b];
        for &m in &self.partition.motif_id {
            if m >= b {
                return Err(format!("motif id {m} out of range"));
            }
            sizes[m] += 1;
        }
        if sizes.contains(&0) {
            return Err("empty motif".into());
        }
        let mut motif_links = vec![0usize; a];
        let mut graph_links = vec![0usize; b];
        let mut bonds = 0;
        for e in &self.edges {
            match e.kind {
                EdgeKind::Bond(_) | EdgeKind::MaskedBond => {
                    if e.u >= a || e.v >= a {
                        return Err("bond edge touches a non-atom node".into());
                    }
                    bonds += 1;
                }
                EdgeKind::MotifLink => {
                    if e.u >= a || e.v != self.motif_node(self.partition.motif_id[e.u]) {
                        return Err(format!("bad motif link {}-{}", e.u, e.v));
                    }
                    motif_links[e.u] += 1;
                }
                EdgeKind::GraphLink => {
                    if e.u != self.graph_node() || self.level(e.v) != Level::Motif {
                        return Err(format!("bad graph link {}-{}", e.u, e.v));
                    }
                    graph_links[e.v - a] += 1;
                }
            }
        }
        if bonds != self.mol.bond_count() {
            return Err("bond edges do not reproduce the molecule".into());
        }
        if motif_links.iter().any(|&c| c != 1) || graph_links.iter().any(|&c| c != 1) {
            return Err("hierarchy link counts".into());
        }
        let rings = RingInfo::membership(&self.mol);
        for (k, bond) in self.mol.bonds().iter().enumerate() {
            if rings.ring_bond[k]
                && self.partition.motif_id[bond.a] != self.partition.motif_id[bond.b]
            {
                return Err(format!("ring bond {k} split across motifs"));
            }
        }
        Ok(())
    }
}

fn adjacency_of(n: usize, edges: &[HierEdge]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        adj[e.u].push((e.v, k));
        adj[e.v].push((e.u, k));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

pub fn build_hier_graph(mol: &Molecule, partition: &MotifPartition) -> HierGraph {
    let a = mol.atom_count();
    let b = partition.num_motifs;
    let mut tokens: Vec<NodeToken> = mol
        .atoms()
        .iter()
        .map(|atom| NodeToken::Element(atom.element))
        .collect();
    tokens.extend(std::iter::repeat_n(NodeToken::Motif, b));
    tokens.push(NodeToken::Graph);

    let mut edges: Vec<HierEdge> = mol
        .bonds()
        .iter()
        .map(|bond| HierEdge {
            u: bond.a,
            v: bond.b,
            kind: EdgeKind::Bond(bond.order),
        })
        .collect();
    edges.extend((0..a).map(|i| HierEdge {
        u: i,
        v: a + partition.motif_id[i],
        kind: EdgeKind::MotifLink,
    }));
    edges.extend((0..b).map(|m| HierEdge {
        u: a + b,
        v: a + m,
        kind: EdgeKind::GraphLink,
    }));

    HierGraph {
        mol: mol.clone(),
        partition: partition.clone(),
        adjacency: adjacency_of(tokens.len(), &edges),
        tokens,
        edges,
    }
}

pub fn segment(mol: &Molecule, rules: &dyn FragmentationRules) -> HierGraph {
    let cuts = fragment_bonds(mol, rules);
    build_hier_graph(mol, &build_motifs(mol, &cuts))
}
