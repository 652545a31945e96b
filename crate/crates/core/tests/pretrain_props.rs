mod common;

use common::medium_molecule;
use hiermol::encoder::{encode, GnnDims};
use hiermol::hierseg::{segment, SimpleBrics};
use hiermol::numeric::Blocks;
use hiermol::pretrain::losses::{
    contrastive_from_scores, contrastive_with_grad, derangement, softmax_xent,
};
use hiermol::pretrain::{
    loss_atom_type, loss_bond_type, loss_contrastive, loss_counts, loss_link, smooth_l1, train,
    LossWeights, Model, Sample, TrainConfig, TrainItem, ATOM_CLASSES,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_loss_is_non_negative(mol in medium_molecule(), seed in any::<u64>()) {
        let hg = segment(&mol, &SimpleBrics);
        let model: Model<f64> = Model::init(seed, GnnDims::new(12, 2), 6);
        let s: Sample<f64> = Sample::new(&hg, 0.3, seed, None);
        let f = encode(&s.masked.graph, &model.gnn);
        prop_assert!(loss_link(&f, &hg) >= 0.0);
        prop_assert!(loss_atom_type(&f, &s.targets, &model.heads).unwrap() >= 0.0);
        if !s.targets.bonds.is_empty() {
            prop_assert!(loss_bond_type(&f, &s.targets, &model.heads).unwrap() >= 0.0);
        }
        let (an, bn) = loss_counts(&f, &s.targets, &model.heads);
        prop_assert!(an >= 0.0 && bn >= 0.0);
    }

    #[test]
    fn contrastive_loss_is_non_negative(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Array2::from_shape_fn((n, 5), |(i, j)| ((i * 7 + j * 3) as f64 * 0.37 + seed as f64 * 1e-9).sin());
        let t = Array2::from_shape_fn((n, 4), |(i, j)| ((i + 2 * j) as f64).cos());
        let model: Model<f64> = Model::init(seed, GnnDims::new(5, 1), 4);
        let l = loss_contrastive(&g, &t, &model.heads, seed).unwrap();
        prop_assert!(l >= 0.0 && l.is_finite());
        let p = derangement(n, &mut rng);
        prop_assert!(p.iter().enumerate().all(|(i, &j)| i != j));
    }

    #[test]
    fn smooth_l1_is_continuous_and_even(r in -10.0f64..10.0) {
        prop_assert_eq!(smooth_l1(r), smooth_l1(-r));
        prop_assert!(smooth_l1(r) >= 0.0);
        prop_assert!(smooth_l1(r) <= 0.5 * r * r + 1e-12);
    }
}

#[test]
fn smooth_l1_branches_meet_at_one() {
    let below = smooth_l1(1.0f64 - 1e-13);
    let above = smooth_l1(1.0f64 + 1e-13);
    assert!((below - 0.5).abs() < 1e-12 && (above - 0.5).abs() < 1e-12);
}

#[test]
fn uniform_logits_cost_log_k() {
    let (l, _) = softmax_xent(Array1::<f64>::zeros(ATOM_CLASSES).view(), 3);
    assert!((l - (ATOM_CLASSES as f64).ln()).abs() < 1e-12);
    let (l, _) = softmax_xent(Array1::<f64>::zeros(4).view(), 0);
    assert!((l - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn contrastive_limits() {
    let zero = contrastive_from_scores(&[0.0f64; 5], &[0.0; 5], &[0.0; 5]);
    assert!((zero - 1.5 * 2f64.ln()).abs() < 1e-12);
    let separated = contrastive_from_scores(&[60.0f64; 5], &[-60.0; 5], &[-60.0; 5]);
    assert!(separated < 1e-20);
}

#[test]
fn contrastive_spread_over_derangements() {
    let n = 8;
    let mol = Array2::from_shape_fn((n, 6), |(i, j)| ((3 * i + j) as f64).sin());
    let text = Array2::from_shape_fn((n, 6), |(i, j)| ((i + 5 * j) as f64).cos());
    let losses: Vec<f64> = (0..50)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let pt = derangement(n, &mut rng);
            let pm = derangement(n, &mut rng);
            contrastive_with_grad(&mol, &text, &pt, &pm).0
        })
        .collect();
    let (lo, hi) = losses
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pt = derangement(n, &mut rng);
    let pm = derangement(n, &mut rng);
    let swapped = contrastive_with_grad(&mol, &text, &pm, &pt).0;
    let base = contrastive_with_grad(&mol, &text, &pt, &pm).0;
    assert!((swapped - base).abs() <= hi - lo + 1e-12);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let hgs: Vec<_> = (0..4)
        .map(|s| segment(&common::molecule(s, 5, 15), &SimpleBrics))
        .collect();
    let items: Vec<TrainItem> = hgs
        .into_iter()
        .map(|graph| TrainItem { graph, text: None })
        .collect();
    let cfg = TrainConfig {
        d_gnn: 8,
        layers: 2,
        d_text: 4,
        lr: 0.0,
        batch_size: 2,
        epochs: 2,
        weights: LossWeights {
            contrastive: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let trained = train(&items, &cfg, |_, _| {}).unwrap().checkpoint.model;
    let fresh: Model<f32> = Model::init(cfg.seed, cfg.dims(), cfg.d_text);
    for (a, b) in trained.blocks().iter().zip(fresh.blocks()) {
        assert_eq!(a.data, b.data, "{}", a.name);
    }
}
