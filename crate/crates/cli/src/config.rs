//! Run configuration: defaults, then a `key = value` file, then `--set`
//! pairs, then dedicated flags.

use hiermol::dataprep::{CleanConfig, OnError};
use hiermol::fusion::Reduction;
use hiermol::hierseg::rules_by_name;
use hiermol::metrics::MolFormat;
use hiermol::pretrain::{ConfigError, TrainConfig};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub d_llm: usize,
    pub reduction: Reduction,
    pub rules: String,
    pub workers: usize,
    pub on_error: OnError,
    pub clean: CleanConfig,
    pub align_steps: usize,
    pub align_lr: f64,
    pub format: MolFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            d_llm: 2048,
            reduction: Reduction::None,
            rules: "simple-brics".into(),
            workers: 0,
            on_error: OnError::Skip,
            clean: CleanConfig::default(),
            align_steps: 500,
            align_lr: 1e-3,
            format: MolFormat::Smiles,
        }
    }
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    }
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, ConfigError> {
    value.parse().map_err(|_| bad(key, value))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "d_llm" => self.d_llm = parse(key, value)?,
            "reduction" => self.reduction = parse(key, value)?,
            "rules" => {
                if rules_by_name(value).is_none() {
                    return Err(bad(key, value));
                }
                self.rules = value.into();
            }
            "workers" => self.workers = parse(key, value)?,
            "on_error" => self.on_error = parse(key, value)?,
            "min_heavy_atoms" => self.clean.min_heavy_atoms = parse(key, value)?,
            "keep_largest_fragment" => self.clean.keep_largest_fragment = parse(key, value)?,
            "align_steps" => self.align_steps = parse(key, value)?,
            "align_lr" => self.align_lr = parse(key, value)?,
            "format" => self.format = parse(key, value)?,
            _ => self.train.set(key, value)?,
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate()?;
        if self.d_llm == 0 {
            return Err(ConfigError::Invalid("d_llm must be positive".into()));
        }
        if self.clean.min_heavy_atoms == 0 {
            return Err(ConfigError::Invalid(
                "min_heavy_atoms must be at least 1".into(),
            ));
        }
        if !(self.align_lr >= 0.0) {
            return Err(ConfigError::Invalid("align_lr must be >= 0".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering() {
        let mut c = RunConfig::default();
        c.apply_text("# run\nd_llm = 64\nreduction = hier\nlr = 0.01\n")
            .unwrap();
        c.set("reduction", "graph").unwrap();
        assert_eq!(c.d_llm, 64);
        assert_eq!(c.reduction.to_string(), "graph");
        assert_eq!(c.train.lr, 0.01);
        assert!(c.set("rules", "nope").is_err());
        assert!(c.set("bogus", "1").is_err());
    }
}
