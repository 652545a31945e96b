//! Central finite-difference check of the reverse-mode gradients.

use super::heads::Model;
use super::objective::{batch_objective, Sample};
use super::{LossWeights, PretrainError};
use crate::numeric::Blocks;
use serde::Serialize;

/// Denominator floor for the relative error of near-zero gradients.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct BlockCheck {
    pub name: String,
    pub len: usize,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    /// `|g - g_fd| / max(|g|, |g_fd|, REL_FLOOR)` over the whole block.
    pub rel_error: f64,
    pub max_abs_diff: f64,
}

/// Compares analytic and finite-difference gradients for every block.
pub fn gradient_check(
    model: &Model<f64>,
    batch: &[Sample<f64>],
    weights: &LossWeights,
    seed: u64,
    h: f64,
) -> Result<Vec<BlockCheck>, PretrainError> {
    let (_, grad) = batch_objective(model, batch, weights, seed, true)?;
    let grad = grad.expect("gradient requested");
    let mut probe = model.clone();
    let loss_at = |probe: &Model<f64>| -> Result<f64, PretrainError> {
        Ok(batch_objective(probe, batch, weights, seed, false)?.0.total)
    };

    let shapes: Vec<(String, usize)> = model
        .blocks()
        .iter()
        .map(|b| (b.name.clone(), b.data.len()))
        .collect();
    let analytic = grad.blocks();
    let mut out = Vec::with_capacity(shapes.len());
    for (k, (name, len)) in shapes.into_iter().enumerate() {
        let mut numeric = vec![0.0; len];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = model.blocks()[k].data[i];
            probe.blocks_mut()[k].data[i] = orig + h;
            let plus = loss_at(&probe)?;
            probe.blocks_mut()[k].data[i] = orig - h;
            let minus = loss_at(&probe)?;
            probe.blocks_mut()[k].data[i] = orig;
            *slot = (plus - minus) / (2.0 * h);
        }
        let a = analytic[k].data;
        let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
        let an = norm(&mut a.iter().copied());
        let nn = norm(&mut numeric.iter().copied());
        let dn = norm(&mut a.iter().zip(&numeric).map(|(x, y)| x - y));
        let max_abs_diff = a
            .iter()
            .zip(&numeric)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        out.push(BlockCheck {
            name,
            len,
            analytic_norm: an,
            numeric_norm: nn,
            rel_error: dn / an.max(nn).max(REL_FLOOR),
            max_abs_diff,
        });
    }
    Ok(out)
}
