mod common;

use common::{medium_molecule, permutation};
use hiermol::hierseg::{segment, EdgeKind, NodeToken, SimpleBrics};
use hiermol::molgraph::{parse_smiles, RingInfo};
use proptest::prelude::*;
use std::collections::BTreeSet;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_is_exact(mol in medium_molecule()) {
        let hg = segment(&mol, &SimpleBrics);
        let members = hg.partition.members();
        prop_assert_eq!(members.iter().map(Vec::len).sum::<usize>(), mol.atom_count());
        prop_assert!(members.iter().all(|m| !m.is_empty()));
        prop_assert_eq!(hg.partition.motif_id.len(), mol.atom_count());
    }

    #[test]
    fn edge_counts_follow_the_hierarchy(mol in medium_molecule()) {
        let hg = segment(&mol, &SimpleBrics);
        prop_assert_eq!(hg.count_edges(|k| k == EdgeKind::MotifLink), hg.a());
        prop_assert_eq!(hg.count_edges(|k| k == EdgeKind::GraphLink), hg.b());
        prop_assert_eq!(hg.node_count(), hg.a() + hg.b() + 1);
        prop_assert!(hg.check().is_ok());
    }

    #[test]
    fn ring_bonds_stay_inside_a_motif(mol in medium_molecule()) {
        let hg = segment(&mol, &SimpleBrics);
        let rings = RingInfo::membership(&mol);
        for (k, b) in mol.bonds().iter().enumerate() {
            if rings.ring_bond[k] {
                prop_assert_eq!(hg.partition.motif_id[b.a], hg.partition.motif_id[b.b]);
            }
        }
    }

    #[test]
    fn segmentation_is_permutation_equivariant(mol in medium_molecule(), seed in any::<u64>()) {
        let perm = permutation(mol.atom_count(), seed);
        let a = segment(&mol, &SimpleBrics);
        let b = segment(&mol.permute(&perm), &SimpleBrics);
        let mapped: BTreeSet<Vec<usize>> = a
            .partition
            .members()
            .into_iter()
            .map(|m| {
                let mut v: Vec<usize> = m.into_iter().map(|i| perm[i]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let direct: BTreeSet<Vec<usize>> = b.partition.members().into_iter().collect();
        prop_assert_eq!(mapped, direct);
    }
}

#[test]
fn node_order_is_atoms_motifs_graph() {
    let hg = segment(
        &parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap(),
        &SimpleBrics,
    );
    assert_eq!((hg.a(), hg.b()), (13, 4));
    assert!(hg.tokens[..13]
        .iter()
        .all(|t| matches!(t, NodeToken::Element(_))));
    assert!(hg.tokens[13..17].iter().all(|t| *t == NodeToken::Motif));
    assert_eq!(hg.tokens[17], NodeToken::Graph);
    assert_eq!(hg.graph_node(), 17);
}

#[test]
fn single_atom_molecule() {
    let hg = segment(&parse_smiles("C").unwrap(), &SimpleBrics);
    assert_eq!((hg.a(), hg.b()), (1, 1));
    assert_eq!(hg.edges.len(), 2);
}
