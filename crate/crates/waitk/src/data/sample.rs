use super::DataError;
use rand::distributions::{Distribution, WeightedIndex};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SourceSpec {
    pub name: String,
    pub size: usize,
}

/// Multi-source sampling plan: weights proportional to (N_s / sum N)^(1/T).
/// T = 1 is size-proportional; large T flattens towards uniform.
#[derive(Clone, Debug)]
pub struct SamplingSpec {
    sources: Vec<SourceSpec>,
    temperature: f64,
    total: usize,
}

impl SamplingSpec {
    pub fn new(
        sources: Vec<SourceSpec>,
        temperature: f64,
        total: usize,
    ) -> Result<Self, DataError> {
        if !(temperature > 0.0) {
            return Err(DataError::InvalidArgument(format!(
                "temperature must be > 0, got {temperature}"
            )));
        }
        if sources.is_empty() {
            return Err(DataError::InvalidArgument("no sources".into()));
        }
        if let Some(bad) = sources.iter().find(|s| s.size == 0) {
            return Err(DataError::InvalidArgument(format!(
                "source '{}' is empty",
                bad.name
            )));
        }
        Ok(Self {
            sources,
            temperature,
            total,
        })
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Normalized sampling weights.
    pub fn weights(&self) -> Vec<f64> {
        let sum: f64 = self.sources.iter().map(|s| s.size as f64).sum();
        let mut w: Vec<f64> = self
            .sources
            .iter()
            .map(|s| (s.size as f64 / sum).powf(1.0 / self.temperature))
            .collect();
        let z: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= z;
        }
        w
    }
}

/// Realized per-source counts: `total` multinomial draws from the weights.
/// Deterministic for a fixed rng seed.
pub fn temperature_sample(spec: &SamplingSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let dist = WeightedIndex::new(spec.weights()).expect("weights validated positive");
    let mut counts = vec![0usize; spec.sources().len()];
    for _ in 0..spec.total() {
        counts[dist.sample(rng)] += 1;
    }
    counts
}
