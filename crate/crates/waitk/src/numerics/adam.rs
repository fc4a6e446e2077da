use super::{NamedTensors, NumericsError, Tensor};

/// Adam with bias correction over named parameter maps, driven by the
/// inverse-square-root warmup schedule
/// `lr(s) = base_lr * min(s^-0.5, s * warmup^-1.5)`.
#[derive(Clone, Debug)]
pub struct AdamState {
    step: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    base_lr: f64,
    warmup_steps: u64,
    m: NamedTensors,
    v: NamedTensors,
}

impl AdamState {
    pub fn new(base_lr: f64, warmup_steps: u64) -> Self {
        Self {
            step: 0,
            beta1: 0.9,
            beta2: 0.98,
            epsilon: 1e-9,
            base_lr,
            warmup_steps: warmup_steps.max(1),
            m: NamedTensors::new(),
            v: NamedTensors::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Learning rate used for update step `s` (1-based).
    pub fn learning_rate(&self, s: u64) -> f64 {
        let s = s.max(1) as f64;
        let w = self.warmup_steps as f64;
        self.base_lr * (s.powf(-0.5)).min(s * w.powf(-1.5))
    }

    /// In-place update; moments are allocated lazily on the first call.
    pub fn apply(
        &mut self,
        params: &mut NamedTensors,
        grads: &NamedTensors,
    ) -> Result<(), NumericsError> {
        let s = self.step + 1;
        let lr = self.learning_rate(s);
        let bc1 = 1.0 - self.beta1.powi(s as i32);
        let bc2 = 1.0 - self.beta2.powi(s as i32);
        for (name, p) in params.iter_mut() {
            let g = grads
                .get(name)
                .ok_or_else(|| NumericsError::UnknownParameter(name.clone()))?;
            if g.shape() != p.shape() {
                return Err(NumericsError::ShapeMismatch {
                    op: "adam_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if !g.all_finite() {
                return Err(NumericsError::NonFinite { op: "adam_step" });
            }
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.shape().to_vec()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.shape().to_vec()));
            if m.shape() != p.shape() || v.shape() != p.shape() {
                return Err(NumericsError::ShapeMismatch {
                    op: "adam_step",
                    lhs: p.shape().to_vec(),
                    rhs: m.shape().to_vec(),
                });
            }
            let (pd, md, vd, gd) = (p.data_mut(), m.data_mut(), v.data_mut(), g.data());
            for i in 0..pd.len() {
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * gd[i];
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * gd[i] * gd[i];
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        self.step = s;
        Ok(())
    }
}

/// Functional form: returns updated copies and the advanced state.
pub fn adam_step(
    params: &NamedTensors,
    grads: &NamedTensors,
    state: &AdamState,
) -> Result<(NamedTensors, AdamState), NumericsError> {
    let mut params = params.clone();
    let mut state = state.clone();
    state.apply(&mut params, grads)?;
    Ok((params, state))
}
