//! Batch objective: forward, per-term losses, and reverse-mode gradients.
//!
//! Self-supervised terms are summed over the samples of a batch; the
//! contrastive term is already a batch mean. Per-sample gradients are
//! computed in parallel in fixed windows and summed in sample order, so the
//! result does not depend on the number of worker threads.

use super::heads::{Heads, Model};
use super::losses::{
    atom_type_with_grad, bond_type_with_grad, contrastive_with_grad, counts_with_grad, derangement,
    link_with_grad, SslTargets,
};
use super::{LossReport, LossWeights, PretrainError};
use crate::encoder::{
    backward, encode_with_cache, mask_atoms, ForwardCache, LevelFeatures, MaskedGraph,
};
use crate::hierseg::HierGraph;
use crate::numeric::{c, Blocks, Real};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples whose gradients are held in memory at once.
const GRAD_WINDOW: usize = 8;

/// One training example: a masked graph, its labels and an optional text
/// vector for the contrastive term.
#[derive(Clone, Debug)]
pub struct Sample<T> {
    pub masked: MaskedGraph,
    pub targets: SslTargets,
    pub text: Option<Array1<T>>,
}

impl<T: Real> Sample<T> {
    pub fn new(hg: &HierGraph, mask_ratio: f64, mask_seed: u64, text: Option<Array1<T>>) -> Self {
        let masked = mask_atoms(hg, mask_ratio, mask_seed);
        let targets = SslTargets::from_masked(&masked);
        Sample {
            masked,
            targets,
            text,
        }
    }
}

struct Forward<T> {
    features: LevelFeatures<T>,
    cache: ForwardCache<T>,
    d_features: LevelFeatures<T>,
    d_heads: Option<Heads<T>>,
    terms: [f64; 5],
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite conversion")
}

fn sample_forward<T: Real>(
    model: &Model<T>,
    s: &Sample<T>,
    w: &LossWeights,
    want_grad: bool,
) -> Forward<T> {
    let hg = &s.masked.graph;
    let (features, cache) = encode_with_cache(hg, &model.gnn);
    let mut d_features = LevelFeatures::zeros(features.a(), features.b(), features.dim());
    let mut d_heads = want_grad.then(|| {
        let mut h = model.heads.clone();
        h.fill_zero();
        h
    });
    let heads = &model.heads;

    let (link, g) = link_with_grad(&features.node_mat, hg);
    if want_grad && w.link != 0.0 {
        d_features.node_mat.scaled_add(c(w.link), &g);
    }

    let at = if s.targets.atoms.is_empty() {
        T::zero()
    } else {
        let grads = match (&mut d_heads, want_grad && w.atom_type != 0.0) {
            (Some(dh), true) => Some((&mut d_features.node_mat, dh, c(w.atom_type))),
            _ => None,
        };
        atom_type_with_grad(&features.node_mat, &s.targets, heads, grads).expect("non-empty")
    };
    let bt = if s.targets.bonds.is_empty() {
        T::zero()
    } else {
        let grads = match (&mut d_heads, want_grad && w.bond_type != 0.0) {
            (Some(dh), true) => Some((&mut d_features.node_mat, dh, c(w.bond_type))),
            _ => None,
        };
        bond_type_with_grad(&features.node_mat, &s.targets, heads, grads).expect("non-empty")
    };
    let grads = d_heads.as_mut().map(|dh| (&mut d_features.graph_vec, dh));
    let (an, bn) = counts_with_grad(
        &features.graph_vec,
        &s.targets,
        heads,
        (c(w.atom_count), c(w.bond_count)),
        grads,
    );

    Forward {
        features,
        cache,
        d_features,
        d_heads,
        terms: [to_f64(link), to_f64(at), to_f64(bt), to_f64(an), to_f64(bn)],
    }
}

/// Loss report for a batch, and the gradient of `report.total` with respect
/// to every parameter when `want_grad` is set. `seed` draws the contrastive
/// negatives.
pub fn batch_objective<T: Real>(
    model: &Model<T>,
    batch: &[Sample<T>],
    weights: &LossWeights,
    seed: u64,
    want_grad: bool,
) -> Result<(LossReport, Option<Model<T>>), PretrainError> {
    weights.validate()?;
    if batch.is_empty() {
        return Err(PretrainError::EmptyBatch);
    }
    let mut fwd: Vec<Forward<T>> = batch
        .par_iter()
        .map(|s| sample_forward(model, s, weights, want_grad))
        .collect();

    let mut report = LossReport::default();
    for f in &fwd {
        report.link += f.terms[0];
        report.atom_type += f.terms[1];
        report.bond_type += f.terms[2];
        report.atom_count += f.terms[3];
        report.bond_count += f.terms[4];
    }

    let mut d_text_map = None;
    let texts: Option<Vec<&Array1<T>>> = batch.iter().map(|s| s.text.as_ref()).collect();
    if let (Some(texts), true) = (texts, batch.len() >= 2) {
        let n = batch.len();
        let d = model.gnn.dims.d;
        let mut x = Array2::zeros((n, d));
        let mut t = Array2::zeros((n, model.heads.d_text()));
        for i in 0..n {
            x.row_mut(i).assign(&fwd[i].features.graph_vec);
            t.row_mut(i).assign(texts[i]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perm_text = derangement(n, &mut rng);
        let perm_mol = derangement(n, &mut rng);
        let mapped = x.dot(&model.heads.text_map);
        let (loss, d_mapped) = contrastive_with_grad(&mapped, &t, &perm_text, &perm_mol);
        report.contrastive = to_f64(loss);
        if want_grad && weights.contrastive != 0.0 {
            let d_mapped = d_mapped * c::<T>(weights.contrastive);
            d_text_map = Some(x.t().dot(&d_mapped));
            let dx = d_mapped.dot(&model.heads.text_map.t());
            for (i, f) in fwd.iter_mut().enumerate() {
                f.d_features.graph_vec += &dx.row(i);
            }
        }
    }
    report.total = report.weighted_total(weights);
    if !report.total.is_finite() {
        return Err(PretrainError::NonFinite);
    }
    if !want_grad {
        return Ok((report, None));
    }

    let mut grad = model.zeros_like();
    for (start, window) in fwd
        .chunks(GRAD_WINDOW)
        .enumerate()
        .map(|(k, w)| (k * GRAD_WINDOW, w))
    {
        let parts: Vec<_> = window
            .par_iter()
            .enumerate()
            .map(|(k, f)| {
                let mut g = model.gnn.zeros_like();
                backward(
                    &batch[start + k].masked.graph,
                    &model.gnn,
                    &f.cache,
                    &f.d_features,
                    &mut g,
                );
                g
            })
            .collect();
        for (g, f) in parts.iter().zip(window) {
            grad.gnn.add_assign_from(g);
            grad.heads
                .add_assign_from(f.d_heads.as_ref().expect("head grads"));
        }
    }
    if let Some(dm) = d_text_map {
        grad.heads.text_map += &dm;
    }
    Ok((report, Some(grad)))
}
