// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a GPT-2-style decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    /// Hidden width of each MLP; `4 * d_model` unless overridden.
    pub d_mlp: usize,
    pub vocab_size: usize,
    pub max_context: usize,
    pub layernorm_epsilon: f32,
    pub tie_unembedding: bool,
}

impl ModelConfig {
    pub fn new(n_layers: usize, n_heads: usize, d_model: usize, vocab_size: usize, max_context: usize) -> Self {
        Self {
            n_layers,
            n_heads,
            d_model,
            d_mlp: 4 * d_model,
            vocab_size,
            max_context,
            layernorm_epsilon: 1e-5,
            tie_unembedding: false,
        }
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("d_mlp", self.d_mlp),
            ("vocab_size", self.vocab_size),
            ("max_context", self.max_context),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(self.layernorm_epsilon > 0.0) {
            return Err(Error::Config("layernorm_epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indivisible_heads() {
        let cfg = ModelConfig::new(2, 3, 8, 10, 16);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn default_mlp_width_is_four_times_model() {
        assert_eq!(ModelConfig::new(1, 2, 16, 5, 8).d_mlp, 64);
    }
}
