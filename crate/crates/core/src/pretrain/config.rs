//! Training configuration as flat `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//!
//! | key | default |
//! |---|---|
//! | `seed` | 0 |
//! | `d_gnn` | 300 |
//! | `layers` | 5 |
//! | `hidden` | 2 * d_gnn |
//! | `d_text` | 256 |
//! | `lr` | 0.001 |
//! | `beta1`, `beta2`, `adam_eps` | 0.9, 0.999, 1e-8 |
//! | `batch_size` | 32 |
//! | `mask_ratio` | 0.15 |
//! | `epochs` | 1 |
//! | `max_steps` | 0 (no limit) |
//! | `w_link`, `w_atom_type`, `w_bond_type`, `w_atom_count`, `w_bond_count`, `w_contrastive` | 1.0 |

use super::LossWeights;
use crate::encoder::GnnDims;
use std::fmt::Write;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for '{key}'")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub d_gnn: usize,
    pub layers: usize,
    /// `None` means `2 * d_gnn`.
    pub hidden: Option<usize>,
    pub d_text: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub mask_ratio: f64,
    pub epochs: usize,
    pub max_steps: usize,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            d_gnn: 300,
            layers: 5,
            hidden: None,
            d_text: 256,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            mask_ratio: 0.15,
            epochs: 1,
            max_steps: 0,
            weights: LossWeights::default(),
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl TrainConfig {
    pub fn dims(&self) -> GnnDims {
        GnnDims {
            d: self.d_gnn,
            layers: self.layers,
            hidden: self.hidden.unwrap_or(2 * self.d_gnn),
        }
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let w = &mut self.weights;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "d_gnn" => self.d_gnn = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "hidden" => self.hidden = Some(parse(key, value)?),
            "d_text" => self.d_text = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "adam_eps" => self.adam_eps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "mask_ratio" => self.mask_ratio = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "w_link" => w.link = parse(key, value)?,
            "w_atom_type" => w.atom_type = parse(key, value)?,
            "w_bond_type" => w.bond_type = parse(key, value)?,
            "w_atom_count" => w.atom_count = parse(key, value)?,
            "w_bond_count" => w.bond_count = parse(key, value)?,
            "w_contrastive" => w.contrastive = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = TrainConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let w = &self.weights;
        let mut s = String::new();
        let hidden = self.hidden.unwrap_or(2 * self.d_gnn);
        for (k, v) in [
            ("seed", self.seed.to_string()),
            ("d_gnn", self.d_gnn.to_string()),
            ("layers", self.layers.to_string()),
            ("hidden", hidden.to_string()),
            ("d_text", self.d_text.to_string()),
            ("lr", self.lr.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("adam_eps", self.adam_eps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("mask_ratio", self.mask_ratio.to_string()),
            ("epochs", self.epochs.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("w_link", w.link.to_string()),
            ("w_atom_type", w.atom_type.to_string()),
            ("w_bond_type", w.bond_type.to_string()),
            ("w_atom_count", w.atom_count.to_string()),
            ("w_bond_count", w.bond_count.to_string()),
            ("w_contrastive", w.contrastive.to_string()),
        ] {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.d_gnn == 0 || self.hidden == Some(0) {
            return bad("d_gnn and hidden must be positive");
        }
        if self.d_text == 0 {
            return bad("d_text must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..=1.0).contains(&self.mask_ratio) {
            return bad("mask_ratio must lie in [0, 1]");
        }
        if !(self.lr >= 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return bad("lr must be >= 0 and betas in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        self.weights
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = TrainConfig::default();
        c.set("lr", "0.01").unwrap();
        c.set("w_contrastive", "0").unwrap();
        let back = TrainConfig::parse_text(&c.to_text()).unwrap();
        assert_eq!(back.lr, 0.01);
        assert_eq!(back.weights.contrastive, 0.0);
        assert_eq!(back.dims(), c.dims());
    }

    #[test]
    fn errors() {
        assert_eq!(
            TrainConfig::parse_text("nope = 1"),
            Err(ConfigError::UnknownKey("nope".into()))
        );
        assert_eq!(
            TrainConfig::parse_text("# c\n\nseed 3"),
            Err(ConfigError::Syntax { line: 3 })
        );
        assert!(TrainConfig::parse_text("w_link = -1").is_err());
        assert!(TrainConfig::parse_text("seed = x").is_err());
    }
}
