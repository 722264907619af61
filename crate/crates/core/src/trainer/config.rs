use serde::{Deserialize, Serialize};

use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::matcher::AblationConfig;

/// Optimization and input settings. Model width defaults suit a small CPU budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub negatives: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub ablation: AblationConfig,
    pub context_cap: usize,
    pub persona_cap: usize,
    pub clip_norm: f64,
    pub valid_candidates: usize,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_width: usize,
    pub max_positions: usize,
    pub min_freq: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            negatives: 15,
            batch_size: 16,
            learning_rate: 1e-3,
            epochs: 30,
            seed: 0,
            ablation: AblationConfig::full(),
            context_cap: 6,
            persona_cap: 10,
            clip_norm: 1.0,
            valid_candidates: 20,
            d_model: 32,
            layers: 1,
            heads: 2,
            ff_width: 64,
            max_positions: 64,
            min_freq: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("training: {m}")));
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if self.context_cap == 0 {
            return bad("context_cap must be positive");
        }
        if self.valid_candidates == 0 {
            return bad("valid_candidates must be positive");
        }
        self.ablation.validate()?;
        self.encoder_config(3).validate()
    }

    pub fn encoder_config(&self, vocab_size: usize) -> EncoderConfig {
        EncoderConfig {
            vocab_size,
            d_model: self.d_model,
            layers: self.layers,
            heads: self.heads,
            ff_width: self.ff_width,
            max_positions: self.max_positions,
            segments: 2,
        }
    }
}
