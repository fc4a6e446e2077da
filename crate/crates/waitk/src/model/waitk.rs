use super::ModelError;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// The latency knob: read k source tokens up front, then alternate.
/// `Unbounded` is full-sentence translation (k = infinity).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaitK {
    Bounded(usize),
    Unbounded,
}

impl WaitK {
    pub fn bounded(k: usize) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidWaitK("k must be >= 1".into()));
        }
        Ok(WaitK::Bounded(k))
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, WaitK::Unbounded)
    }
}

impl fmt::Display for WaitK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaitK::Bounded(k) => write!(f, "{k}"),
            WaitK::Unbounded => write!(f, "inf"),
        }
    }
}

impl FromStr for WaitK {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "INF" | "unbounded" | "full" => Ok(WaitK::Unbounded),
            other => {
                let k: usize = other
                    .parse()
                    .map_err(|_| ModelError::InvalidWaitK(other.to_string()))?;
                WaitK::bounded(k)
            }
        }
    }
}

// Reports carry k as a string ("3" or "inf") so CSV and JSON agree exactly.
impl Serialize for WaitK {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WaitK {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Number of source tokens visible when predicting target step `t` (1-based):
/// min(k + t - 1, src_len).
pub fn visible_sources(k: WaitK, t: usize, src_len: usize) -> Result<usize, ModelError> {
    if t == 0 {
        return Err(ModelError::InvalidTargetStep);
    }
    Ok(match k {
        WaitK::Unbounded => src_len,
        WaitK::Bounded(k) => k.saturating_add(t - 1).min(src_len),
    })
}

/// Training-time distribution of k: one value drawn uniformly per batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultipathRange {
    k_min: usize,
    k_max: usize,
}

impl MultipathRange {
    pub fn new(k_min: usize, k_max: usize) -> Result<Self, ModelError> {
        if k_min == 0 || k_min > k_max {
            return Err(ModelError::InvalidWaitK(format!(
                "need 1 <= k_min <= k_max, got [{k_min}, {k_max}]"
            )));
        }
        Ok(Self { k_min, k_max })
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(self.k_min..=self.k_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_cases() {
        assert_eq!(visible_sources(WaitK::Bounded(3), 1, 10).unwrap(), 3);
        assert_eq!(visible_sources(WaitK::Bounded(5), 20, 8).unwrap(), 8);
        assert_eq!(visible_sources(WaitK::Unbounded, 1, 7).unwrap(), 7);
    }

    #[test]
    fn zero_step_is_error() {
        assert!(visible_sources(WaitK::Bounded(3), 0, 10).is_err());
    }

    #[test]
    fn monotone_in_k_and_t_bounded_by_src_len() {
        for src_len in 0..=64usize {
            for k in 1..=12usize {
                for t in 1..=64usize {
                    let v = visible_sources(WaitK::Bounded(k), t, src_len).unwrap();
                    assert_eq!(v, (k + t - 1).min(src_len));
                    assert!(v <= src_len);
                    if k > 1 {
                        let prev = visible_sources(WaitK::Bounded(k - 1), t, src_len).unwrap();
                        assert!(v >= prev);
                    }
                    if t > 1 {
                        let prev = visible_sources(WaitK::Bounded(k), t - 1, src_len).unwrap();
                        assert!(v >= prev);
                    }
                }
            }
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        assert_eq!("7".parse::<WaitK>().unwrap(), WaitK::Bounded(7));
        assert_eq!("inf".parse::<WaitK>().unwrap(), WaitK::Unbounded);
        assert_eq!(WaitK::Bounded(3).to_string(), "3");
        assert_eq!(WaitK::Unbounded.to_string(), "inf");
        assert!("0".parse::<WaitK>().is_err());
        assert!("abc".parse::<WaitK>().is_err());
    }

    #[test]
    fn range_validation() {
        assert!(MultipathRange::new(3, 9).is_ok());
        assert!(MultipathRange::new(0, 5).is_err());
        assert!(MultipathRange::new(7, 3).is_err());
    }
}
