use super::{ModelConfig, ModelError};
use crate::numerics::{NamedTensors, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The full set of named weight tensors of one model, together with the
/// config that determines the name set. The target embedding doubles as the
/// output projection (weight tying), so no separate projection tensor exists.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    config: ModelConfig,
    tensors: NamedTensors,
}

impl Parameters {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensors(&self) -> &NamedTensors {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut NamedTensors {
        &mut self.tensors
    }

    pub(crate) fn get(&self, name: &str) -> &Tensor {
        self.tensors
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} missing"))
    }

    /// Rebuild from raw tensors, validating names and shapes against the config.
    pub fn from_tensors(config: ModelConfig, tensors: NamedTensors) -> Result<Self, ModelError> {
        config.validate()?;
        for (name, shape) in expected_tensors(&config) {
            match tensors.get(&name) {
                None => return Err(ModelError::SignatureMismatch(format!("missing {name}"))),
                Some(t) if t.shape() != shape.as_slice() => {
                    return Err(ModelError::SignatureMismatch(format!(
                        "{name}: shape {:?}, expected {:?}",
                        t.shape(),
                        shape
                    )))
                }
                _ => {}
            }
        }
        if tensors.len() != expected_tensors(&config).len() {
            return Err(ModelError::SignatureMismatch(format!(
                "{} tensors, expected {}",
                tensors.len(),
                expected_tensors(&config).len()
            )));
        }
        Ok(Self { config, tensors })
    }

    pub fn same_signature(&self, other: &Parameters) -> bool {
        self.config == other.config
    }
}

/// Tensor names and shapes determined by the config, in a fixed order
/// (initialization draws random values in exactly this order).
pub fn expected_tensors(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = config.d_model;
    let ff = config.d_ff;
    let v = config.vocab_size;
    let mut out: Vec<(String, Vec<usize>)> = vec![
        ("src_embed".into(), vec![v, d]),
        ("tgt_embed".into(), vec![v, d]),
    ];
    let push_attn = |out: &mut Vec<(String, Vec<usize>)>, prefix: &str| {
        for w in ["wq", "wk", "wv", "wo"] {
            out.push((format!("{prefix}.{w}"), vec![d, d]));
        }
        for b in ["bq", "bk", "bv", "bo"] {
            out.push((format!("{prefix}.{b}"), vec![d]));
        }
    };
    let push_norm = |out: &mut Vec<(String, Vec<usize>)>, prefix: &str| {
        out.push((format!("{prefix}.gain"), vec![d]));
        out.push((format!("{prefix}.bias"), vec![d]));
    };
    let push_ffn = |out: &mut Vec<(String, Vec<usize>)>, prefix: &str| {
        out.push((format!("{prefix}.w1"), vec![d, ff]));
        out.push((format!("{prefix}.b1"), vec![ff]));
        out.push((format!("{prefix}.w2"), vec![ff, d]));
        out.push((format!("{prefix}.b2"), vec![d]));
    };
    for l in 0..config.enc_layers {
        push_attn(&mut out, &format!("enc.{l}.attn"));
        push_norm(&mut out, &format!("enc.{l}.attn_norm"));
        push_ffn(&mut out, &format!("enc.{l}.ffn"));
        push_norm(&mut out, &format!("enc.{l}.ffn_norm"));
    }
    push_norm(&mut out, "enc_norm");
    for l in 0..config.dec_layers {
        push_attn(&mut out, &format!("dec.{l}.self_attn"));
        push_norm(&mut out, &format!("dec.{l}.self_norm"));
        push_attn(&mut out, &format!("dec.{l}.cross_attn"));
        push_norm(&mut out, &format!("dec.{l}.cross_norm"));
        push_ffn(&mut out, &format!("dec.{l}.ffn"));
        push_norm(&mut out, &format!("dec.{l}.ffn_norm"));
    }
    push_norm(&mut out, "dec_norm");
    out
}

/// Xavier-uniform initialization, deterministic in (config, seed).
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<Parameters, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = NamedTensors::new();
    for (name, shape) in expected_tensors(config) {
        // Norm gains start at one, every other 1-D tensor (biases) at zero,
        // matrices Xavier-uniform.
        let t = if name.ends_with(".gain") {
            Tensor::new(shape.clone(), vec![1.0; shape.iter().product()])?
        } else if shape.len() == 1 {
            Tensor::zeros(shape)
        } else {
            let (fan_in, fan_out) = (shape[0], shape[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> = (0..shape.iter().product())
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            Tensor::new(shape, data)?
        };
        tensors.insert(name, t);
    }
    Ok(Parameters {
        config: config.clone(),
        tensors,
    })
}

/// Elementwise arithmetic mean of checkpoints sharing one signature.
pub fn average_checkpoints(list: &[Parameters]) -> Result<Parameters, ModelError> {
    let first = list.first().ok_or(ModelError::EmptyCheckpointList)?;
    for p in &list[1..] {
        if !first.same_signature(p) {
            return Err(ModelError::SignatureMismatch(
                "checkpoints built from different configs".into(),
            ));
        }
    }
    let n = list.len() as f64;
    let mut tensors = NamedTensors::new();
    let mut column = vec![0.0f64; list.len()];
    for (name, t0) in first.tensors() {
        for p in list {
            let t = p.tensors().get(name).ok_or_else(|| {
                ModelError::SignatureMismatch(format!("missing tensor {name}"))
            })?;
            if t.shape() != t0.shape() {
                return Err(ModelError::SignatureMismatch(format!(
                    "tensor {name}: shapes differ"
                )));
            }
        }
        let mut acc = vec![0.0; t0.len()];
        for (i, a) in acc.iter_mut().enumerate() {
            // Sort the addends so the mean is bit-identical under any
            // permutation of the checkpoint list.
            for (c, p) in column.iter_mut().zip(list) {
                *c = p.tensors()[name].data()[i];
            }
            column.sort_unstable_by(f64::total_cmp);
            // All-equal fast path keeps averaging of identical checkpoints
            // bit-exact (summing would round, e.g. 3*0.1/3 != 0.1).
            *a = if column[0].to_bits() == column[column.len() - 1].to_bits() {
                column[0]
            } else {
                column.iter().sum::<f64>() / n
            };
        }
        tensors.insert(name.clone(), Tensor::new(t0.shape().to_vec(), acc)?);
    }
    Ok(Parameters {
        config: first.config.clone(),
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            enc_layers: 1,
            dec_layers: 1,
            d_model: 8,
            d_ff: 16,
            heads: 2,
            vocab_size: 11,
            dropout: 0.0,
            max_positions: 32,
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_params(&cfg(), 5).unwrap();
        let b = init_params(&cfg(), 5).unwrap();
        assert_eq!(a, b);
        let c = init_params(&cfg(), 6).unwrap();
        assert!(a.tensors().iter().any(|(n, t)| c.tensors()[n] != *t));
    }

    #[test]
    fn zero_vocab_config_is_error() {
        let mut c = cfg();
        c.vocab_size = 0;
        assert!(init_params(&c, 1).is_err());
    }

    #[test]
    fn norm_gains_start_at_one_biases_at_zero() {
        let p = init_params(&cfg(), 1).unwrap();
        assert!(p.get("enc_norm.gain").data().iter().all(|&v| v == 1.0));
        assert!(p.get("enc_norm.bias").data().iter().all(|&v| v == 0.0));
        assert!(p.get("enc.0.attn.bq").data().iter().all(|&v| v == 0.0));
        assert!(p.get("enc.0.ffn.b1").data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn averaging_identical_checkpoints_is_identity() {
        let p = init_params(&cfg(), 3).unwrap();
        let avg = average_checkpoints(&[p.clone(), p.clone(), p.clone()]).unwrap();
        assert_eq!(avg, p);
    }

    #[test]
    fn averaging_two_values_hand_case() {
        let mut a = init_params(&cfg(), 3).unwrap();
        let mut b = a.clone();
        a.tensors_mut().get_mut("src_embed").unwrap().data_mut()[0] = 1.0;
        b.tensors_mut().get_mut("src_embed").unwrap().data_mut()[0] = 3.0;
        let avg = average_checkpoints(&[a, b]).unwrap();
        assert_eq!(avg.get("src_embed").data()[0], 2.0);
    }

    #[test]
    fn averaging_rejects_mismated_shapes_and_empty_lists() {
        assert!(matches!(
            average_checkpoints(&[]),
            Err(ModelError::EmptyCheckpointList)
        ));
        let p = init_params(&cfg(), 1).unwrap();
        let mut other_cfg = cfg();
        other_cfg.d_ff = 8;
        let q = init_params(&other_cfg, 1).unwrap();
        assert!(average_checkpoints(&[p, q]).is_err());
    }

    #[test]
    fn permutation_of_inputs_commutes_bit_exactly() {
        let a = init_params(&cfg(), 1).unwrap();
        let b = init_params(&cfg(), 2).unwrap();
        let c = init_params(&cfg(), 3).unwrap();
        let x = average_checkpoints(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let y = average_checkpoints(&[c, a, b]).unwrap();
        assert_eq!(x, y);
    }
}
