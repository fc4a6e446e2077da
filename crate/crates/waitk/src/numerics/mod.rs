//! Dense f64 tensor math with reverse-mode differentiation, the Adam
//! optimizer on named parameter maps, and a finite-difference gradient
//! checker. Everything above this module computes on these pieces.

mod adam;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{finite_diff_check, GradCheckOptions};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

use std::collections::BTreeMap;
use thiserror::Error;

/// Named weight tensors. BTreeMap so iteration order (and therefore
/// serialization and RNG consumption order) is stable.
pub type NamedTensors = BTreeMap<String, Tensor>;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{op}: shape mismatch ({lhs:?} vs {rhs:?})")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
    #[error("finite-difference step must be > 0, got {0}")]
    InvalidStep(f64),
    #[error("loss function is not deterministic ({first} vs {second})")]
    NonDeterministicLoss { first: f64, second: f64 },
    #[error("loss evaluation failed: {0}")]
    LossEval(String),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
}

/// Numerically stable softmax: max is subtracted before exponentiation.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if v.is_empty() {
        return Err(NumericsError::EmptyInput("softmax"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::NonFinite { op: "softmax" });
    }
    let mut out = vec![0.0; v.len()];
    softmax_into(v, &mut out);
    Ok(out)
}

pub(crate) fn softmax_into(v: &[f64], out: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        let e = (x - max).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// log(sum(exp(v))) with max subtraction.
pub fn logsumexp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + v.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// gain * (x - mean) / sqrt(var + eps) + bias, with population variance.
pub fn layer_norm(
    x: &[f64],
    gain: &[f64],
    bias: &[f64],
    eps: f64,
) -> Result<Vec<f64>, NumericsError> {
    if x.len() != gain.len() || x.len() != bias.len() {
        return Err(NumericsError::ShapeMismatch {
            op: "layer_norm",
            lhs: vec![x.len()],
            rhs: vec![gain.len(), bias.len()],
        });
    }
    if x.is_empty() {
        return Err(NumericsError::EmptyInput("layer_norm"));
    }
    if eps <= 0.0 {
        return Err(NumericsError::InvalidStep(eps));
    }
    let mut out = vec![0.0; x.len()];
    layer_norm_into(x, gain, bias, eps, &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite { op: "layer_norm" });
    }
    Ok(out)
}

pub(crate) fn layer_norm_into(x: &[f64], gain: &[f64], bias: &[f64], eps: f64, out: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    for i in 0..x.len() {
        out[i] = gain[i] * (x[i] - mean) * inv + bias[i];
    }
}
