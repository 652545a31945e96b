mod common;

use common::{medium_molecule, molecule};
use hiermol::encoder::{
    encode, encode_batch, init_params, BatchedFeatures, GnnDims, LevelFeatures,
};
use hiermol::fusion::{
    export_tokens, import_tokens, project, project_batch, reduce, reduce_all, reduce_batch,
    reduce_hierarchical, ProjectorParams, Reduction,
};
use hiermol::hierseg::{segment, Level, SimpleBrics};
use ndarray::{Array1, Axis};
use proptest::prelude::*;

fn rel_err(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let diff = (a - b).mapv(|x| x * x).sum().sqrt();
    diff / b.mapv(|x| x * x).sum().sqrt().max(1e-12)
}

fn features(seed: u64) -> LevelFeatures<f64> {
    let hg = segment(&molecule(seed, 3, 30), &SimpleBrics);
    encode(&hg, &init_params(seed, GnnDims::new(10, 2)))
}

const MODES: [Reduction; 6] = [
    Reduction::None,
    Reduction::Hierarchical,
    Reduction::All,
    Reduction::Level(Level::Atom),
    Reduction::Level(Level::Motif),
    Reduction::Level(Level::Graph),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_commutes_with_mean_pooling(seed in any::<u64>()) {
        let f = features(seed);
        let p = ProjectorParams::<f64>::init(seed, 10, 7);
        let pooled = reduce_all(&project(&f, &p).unwrap()).tokens.row(0).to_owned();
        let raw_mean = f.stacked().mean_axis(Axis(0)).unwrap();
        prop_assert!(rel_err(&pooled, &p.apply_vec(raw_mean.view())) <= 1e-5);
    }

    #[test]
    fn all_is_the_weighted_hierarchical_mean(seed in any::<u64>()) {
        let f = features(seed);
        let (a, b) = (f.a() as f64, f.b() as f64);
        let h = reduce_hierarchical(&f).unwrap().tokens;
        let weighted = (&h.row(0) * a + &h.row(1) * b + &h.row(2)) / (a + b + 1.0);
        prop_assert!(rel_err(&reduce_all(&f).tokens.row(0).to_owned(), &weighted) <= 1e-5);
    }

    #[test]
    fn token_counts_follow_the_mode(mol in medium_molecule()) {
        let hg = segment(&mol, &SimpleBrics);
        let f = encode(&hg, &init_params::<f64>(0, GnnDims::new(6, 1)));
        for mode in MODES {
            let bundle = reduce(&f, mode).unwrap();
            prop_assert_eq!(bundle.k(), mode.token_count(hg.a(), hg.b()));
            prop_assert_eq!(bundle.level_ids.len(), bundle.k());
        }
    }

    #[test]
    fn padding_never_changes_tokens(extra_a in 0usize..6, extra_b in 0usize..4, seed in any::<u64>()) {
        let hgs: Vec<_> = (0..4).map(|i| segment(&molecule(seed.wrapping_add(i), 3, 20), &SimpleBrics)).collect();
        let p = init_params::<f64>(seed, GnnDims::new(6, 2));
        let singles: Vec<LevelFeatures<f64>> = hgs.iter().map(|h| encode(h, &p)).collect();
        let max_a = hgs.iter().map(|h| h.a()).max().unwrap();
        let max_b = hgs.iter().map(|h| h.b()).max().unwrap();
        let mut padded = BatchedFeatures::pad_to(&singles, max_a + extra_a, max_b + extra_b);
        // write garbage into every padded slot
        let (n, ra, _) = padded.node.dim();
        for i in 0..n {
            for r in 0..ra {
                if !padded.node_mask[[i, r]] {
                    padded.node.index_axis_mut(Axis(0), i).row_mut(r).fill(1e6);
                }
            }
            for r in 0..padded.motif.dim().1 {
                if !padded.motif_mask[[i, r]] {
                    padded.motif.index_axis_mut(Axis(0), i).row_mut(r).fill(-1e6);
                }
            }
        }
        for mode in MODES {
            let batched = reduce_batch(&padded, mode).unwrap();
            for (i, f) in singles.iter().enumerate() {
                prop_assert_eq!(&batched[i], &reduce(f, mode).unwrap());
            }
        }
    }
}

#[test]
fn projected_batch_matches_single_projection() {
    let hgs: Vec<_> = (0..5)
        .map(|s| segment(&molecule(s, 3, 25), &SimpleBrics))
        .collect();
    let params = init_params::<f64>(2, GnnDims::new(8, 2));
    let proj = ProjectorParams::<f64>::init(5, 8, 12);
    let batch = project_batch(&encode_batch(&hgs, &params), &proj).unwrap();
    for (i, hg) in hgs.iter().enumerate() {
        let single = project(&encode(hg, &params), &proj).unwrap();
        for mode in MODES {
            let got = &reduce_batch(&batch, mode).unwrap()[i];
            let want = reduce(&single, mode).unwrap();
            assert_eq!(got.level_ids, want.level_ids);
            for (x, y) in got.tokens.iter().zip(&want.tokens) {
                assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0), "{mode:?}");
            }
        }
    }
    assert!(project(&encode(&hgs[0], &params), &ProjectorParams::init(0, 9, 4)).is_err());
}

#[test]
fn token_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let hg = segment(&molecule(1, 10, 20), &SimpleBrics);
    let f = encode(&hg, &init_params::<f32>(0, GnnDims::new(8, 2)));
    let proj = ProjectorParams::<f32>::init(0, 8, 16);
    for (k, mode) in MODES.into_iter().enumerate() {
        let bundle = reduce(&project(&f, &proj).unwrap(), mode).unwrap();
        let path = dir.path().join(format!("t{k}.bin"));
        export_tokens(&bundle, &path).unwrap();
        assert_eq!(import_tokens(&path).unwrap(), bundle);
    }
}
