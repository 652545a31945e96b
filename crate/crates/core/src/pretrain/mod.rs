//! Self-supervised and contrastive pretraining of the encoder.

mod config;
pub mod gradcheck;
mod heads;
pub mod losses;
mod objective;
mod train;

pub use config::{ConfigError, TrainConfig};
pub use heads::{Heads, Model, ATOM_CLASSES, BOND_CLASSES};
pub use losses::{
    loss_atom_type, loss_bond_type, loss_contrastive, loss_counts, loss_link, smooth_l1, SslTargets,
};
pub use objective::{batch_objective, Sample};
pub use train::{
    load_checkpoint, masked_atom_accuracy, sample_atom_accuracy, save_checkpoint, train,
    train_from, Checkpoint, TrainItem, TrainOutcome,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PretrainError {
    #[error("no masked {0}s to score")]
    EmptyMask(&'static str),
    #[error("contrastive loss needs at least 2 samples, got {0}")]
    BatchTooSmall(usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("loss weight '{0}' is negative")]
    NegativeWeight(&'static str),
    #[error("loss is not finite")]
    NonFinite,
    #[error("training diverged at step {0}")]
    Diverged(usize),
    #[error("sample {0} has no text vector but the contrastive weight is non-zero")]
    MissingText(usize),
    #[error("text vector {index} has dimension {got}, expected {expected}")]
    TextDim {
        index: usize,
        got: usize,
        expected: usize,
    },
}

/// Per-term loss weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub link: f64,
    pub atom_type: f64,
    pub bond_type: f64,
    pub atom_count: f64,
    pub bond_count: f64,
    pub contrastive: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            link: 1.0,
            atom_type: 1.0,
            bond_type: 1.0,
            atom_count: 1.0,
            bond_count: 1.0,
            contrastive: 1.0,
        }
    }
}

impl LossWeights {
    pub fn zero() -> Self {
        LossWeights {
            link: 0.0,
            atom_type: 0.0,
            bond_type: 0.0,
            atom_count: 0.0,
            bond_count: 0.0,
            contrastive: 0.0,
        }
    }

    fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("link", self.link),
            ("atom_type", self.atom_type),
            ("bond_type", self.bond_type),
            ("atom_count", self.atom_count),
            ("bond_count", self.bond_count),
            ("contrastive", self.contrastive),
        ]
    }

    pub fn validate(&self) -> Result<(), PretrainError> {
        match self.named().iter().find(|(_, w)| !(*w >= 0.0)) {
            Some((name, _)) => Err(PretrainError::NegativeWeight(name)),
            None => Ok(()),
        }
    }
}

/// Loss values for one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub link: f64,
    pub atom_type: f64,
    pub bond_type: f64,
    pub atom_count: f64,
    pub bond_count: f64,
    pub contrastive: f64,
    pub total: f64,
}

impl LossReport {
    pub fn terms(&self) -> [f64; 6] {
        [
            self.link,
            self.atom_type,
            self.bond_type,
            self.atom_count,
            self.bond_count,
            self.contrastive,
        ]
    }

    /// Weighted sum of the terms. Zero-weight terms are skipped rather than
    /// multiplied, so an infinite excluded term cannot poison the total.
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        self.terms()
            .iter()
            .zip(w.named())
            .filter(|(_, (_, wk))| *wk != 0.0)
            .map(|(t, (_, wk))| t * wk)
            .sum()
    }
}

/// Weighted total of a report; rejects negative weights.
pub fn total_loss(report: &LossReport, weights: &LossWeights) -> Result<f64, PretrainError> {
    weights.validate()?;
    Ok(report.weighted_total(weights))
}
