use super::ModelError;
use serde::{Deserialize, Serialize};

/// Shape of one encoder-decoder model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub heads: usize,
    pub vocab_size: usize,
    pub dropout: f64,
    pub max_positions: usize,
}

impl ModelConfig {
    /// 2+2 layers at d=64: the default toy shape.
    pub fn base_toy(vocab_size: usize) -> Self {
        Self {
            enc_layers: 2,
            dec_layers: 2,
            d_model: 64,
            d_ff: 256,
            heads: 4,
            vocab_size,
            dropout: 0.1,
            max_positions: 256,
        }
    }

    /// Deep-encoder/shallow-decoder shape in miniature.
    pub fn deep_toy(vocab_size: usize) -> Self {
        Self {
            enc_layers: 4,
            dec_layers: 1,
            d_model: 48,
            d_ff: 192,
            heads: 4,
            vocab_size,
            dropout: 0.1,
            max_positions: 256,
        }
    }

    pub fn preset(name: &str, vocab_size: usize) -> Result<Self, ModelError> {
        match name {
            "base-toy" => Ok(Self::base_toy(vocab_size)),
            "deep-toy" => Ok(Self::deep_toy(vocab_size)),
            other => Err(ModelError::Config(format!("unknown preset '{other}'"))),
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("enc_layers", self.enc_layers),
            ("dec_layers", self.dec_layers),
            ("d_model", self.d_model),
            ("d_ff", self.d_ff),
            ("heads", self.heads),
            ("vocab_size", self.vocab_size),
            ("max_positions", self.max_positions),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be >= 1")));
            }
        }
        if self.d_model % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "d_model {} not divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Sinusoidal position row: pe[2i] = sin(pos / 10000^(2i/d)), pe[2i+1] = cos.
pub(crate) fn positional_encoding_row(pos: usize, d: usize, out: &mut [f64]) {
    for i in 0..d / 2 {
        let rate = 1.0 / 10000f64.powf(2.0 * i as f64 / d as f64);
        out[2 * i] = (pos as f64 * rate).sin();
        out[2 * i + 1] = (pos as f64 * rate).cos();
    }
    if d % 2 == 1 {
        let i = d / 2;
        let rate = 1.0 / 10000f64.powf(2.0 * i as f64 / d as f64);
        out[d - 1] = (pos as f64 * rate).sin();
    }
}
