//! Shared fixtures for the benchmarks.

use qvam_core::{random_patterns, Dimensions, KeyScheme, KeyVector, NoiseSpec, QPattern};

/// A random pattern set, its index keys and a batch of distorted probes.
pub struct Fixture {
    pub patterns: Vec<QPattern>,
    pub keys: Vec<KeyVector>,
    pub probes: Vec<QPattern>,
}

impl Fixture {
    pub fn new(pattern_len: usize, q: u32, count: u64, b: f64) -> Self {
        let patterns = random_patterns(pattern_len, q, count, 1).expect("valid fixture shape");
        let dims = Dimensions::new(pattern_len, count, q).expect("valid fixture shape");
        let keys = KeyScheme::Index.assign(&dims).expect("keys fit");
        let noise = NoiseSpec::new(b, 2);
        let probes = (0..64)
            .map(|t| noise.distort(&patterns[t % patterns.len()], t as u64))
            .collect();
        Self {
            patterns,
            keys,
            probes,
        }
    }
}
