use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::rng::{substream, uniform_below, Domain};
use crate::codec::QPattern;

/// How a distorted component picks its new color.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Uniform over the `q - 1` colors other than the original.
    #[default]
    DistinctColor,
    /// Uniform over all `q` colors; a component may keep its color.
    Uniform,
}

/// Distortion level, master seed and replacement rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub b: f64,
    pub seed: u64,
    pub model: NoiseModel,
}

impl NoiseSpec {
    pub fn new(b: f64, seed: u64) -> Self {
        Self {
            b,
            seed,
            model: NoiseModel::DistinctColor,
        }
    }

    /// `round(b N)`.
    pub fn distorted_count(&self, pattern_len: usize) -> usize {
        distorted_count(self.b, pattern_len)
    }

    /// Distorted copy of `x` for the given trial; deterministic in `(seed, trial)`.
    pub fn distort(&self, x: &QPattern, trial: u64) -> QPattern {
        let mut rng = substream(self.seed, Domain::Noise, 0, trial);
        distort_with(x, self.b, self.model, &mut rng)
    }
}

pub(crate) fn distorted_count(b: f64, pattern_len: usize) -> usize {
    ((b.clamp(0.0, 1.0) * pattern_len as f64).round() as usize).min(pattern_len)
}

/// Replaces `round(b N)` distinct positions, chosen by a partial Fisher-Yates shuffle.
pub(crate) fn distort_with<R: RngCore>(
    x: &QPattern,
    b: f64,
    model: NoiseModel,
    rng: &mut R,
) -> QPattern {
    let len = x.len();
    let q = x.q() as u64;
    let d = distorted_count(b, len);
    let mut symbols = x.symbols().to_vec();
    let mut order: Vec<u32> = (0..len as u32).collect();
    for t in 0..d {
        let pick = t + uniform_below(rng, (len - t) as u64) as usize;
        order.swap(t, pick);
        let pos = order[t] as usize;
        let original = symbols[pos] as u64;
        let color = match model {
            NoiseModel::DistinctColor => {
                let c = uniform_below(rng, q - 1);
                if c >= original {
                    c + 1
                } else {
                    c
                }
            }
            NoiseModel::Uniform => uniform_below(rng, q),
        };
        symbols[pos] = color as u32;
    }
    QPattern::new(symbols, x.q()).expect("distortion stays inside the alphabet")
}
