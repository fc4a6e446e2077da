use super::{NamedTensors, NumericsError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Coordinates to sample (clamped to the parameter count).
    pub samples: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { samples: 50, seed: 0 }
    }
}

/// Compare analytic gradients against central finite differences on randomly
/// sampled coordinates and return the worst relative error.
///
/// `loss_fn` must be deterministic: it is evaluated twice at the base point
/// and any bit-level disagreement is an error. The relative-error denominator
/// is floored at 1e-6 so coordinates with near-zero gradients are judged by
/// the absolute difference instead of amplified rounding noise.
pub fn finite_diff_check<F>(
    loss_fn: F,
    params: &NamedTensors,
    h: f64,
    opts: GradCheckOptions,
) -> Result<f64, NumericsError>
where
    F: Fn(&NamedTensors) -> Result<(f64, NamedTensors), NumericsError>,
{
    if !(h > 0.0) {
        return Err(NumericsError::InvalidStep(h));
    }
    let (base, grads) = loss_fn(params)?;
    let (repeat, _) = loss_fn(params)?;
    if base.to_bits() != repeat.to_bits() {
        return Err(NumericsError::NonDeterministicLoss {
            first: base,
            second: repeat,
        });
    }

    // Flatten the coordinate space in name order.
    let mut coords: Vec<(String, usize)> = Vec::new();
    let total: usize = params.values().map(|t| t.len()).sum();
    let take = opts.samples.min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let picked = rand::seq::index::sample(&mut rng, total, take);
    let mut sorted: Vec<usize> = picked.into_iter().collect();
    sorted.sort_unstable();
    {
        let mut offset = 0usize;
        let mut it = sorted.iter().peekable();
        for (name, t) in params.iter() {
            while let Some(&&flat) = it.peek() {
                if flat < offset + t.len() {
                    coords.push((name.clone(), flat - offset));
                    it.next();
                } else {
                    break;
                }
            }
            offset += t.len();
        }
    }

    let mut work = params.clone();
    let mut max_rel = 0.0f64;
    for (name, idx) in coords {
        let orig = work[&name].data()[idx];
        work.get_mut(&name).expect("named").data_mut()[idx] = orig + h;
        let (plus, _) = loss_fn(&work)?;
        work.get_mut(&name).expect("named").data_mut()[idx] = orig - h;
        let (minus, _) = loss_fn(&work)?;
        work.get_mut(&name).expect("named").data_mut()[idx] = orig;

        let numeric = (plus - minus) / (2.0 * h);
        let analytic = grads
            .get(&name)
            .ok_or_else(|| NumericsError::UnknownParameter(name.clone()))?
            .data()[idx];
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic - numeric).abs() / denom);
    }
    Ok(max_rel)
}
