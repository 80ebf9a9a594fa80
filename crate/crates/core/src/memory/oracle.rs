//! Matrix-free recall straight from the stored patterns.
//!
//! Substituting the Hebbian counts into the local field gives, for output `i`
//! and color `k`,
//!
//! ```text
//! proj[k] = q * Σ_{μ : y_μi = k} (O_μ - [x_μi = X_i])  -  N * c_i[k]
//! ```
//!
//! with `O_μ` the overlap between the probe and pattern `μ` and the bracket
//! present only when the diagonal block is excluded and `i < N`. This path
//! never builds a weight block, so it doubles as the reference the weight
//! path is checked against and as a low-memory engine.

use crate::codec::{decode_key, Dimensions, KeyVector, QPattern};
use crate::error::Result;

use super::{validate_training_set, Identification, OpCount, Recall, TrainOptions};

/// Number of positions where `x` and `z` carry the same color.
pub fn overlap(x: &QPattern, z: &QPattern) -> Result<usize> {
    z.conforms(x.len(), x.q())?;
    Ok(x.symbols()
        .iter()
        .zip(z.symbols())
        .filter(|(a, b)| a == b)
        .count())
}

/// Stored patterns and keys, recalled by overlap voting.
#[derive(Debug, Clone)]
pub struct MatrixFreeMemory {
    dims: Dimensions,
    exclude_diagonal: bool,
    patterns: Vec<QPattern>,
    keys: Vec<KeyVector>,
    bias: Vec<Vec<i64>>,
}

impl MatrixFreeMemory {
    pub fn new(patterns: Vec<QPattern>, keys: Vec<KeyVector>) -> Result<Self> {
        Self::with_options(patterns, keys, TrainOptions::default())
    }

    pub fn with_options(
        patterns: Vec<QPattern>,
        keys: Vec<KeyVector>,
        options: TrainOptions,
    ) -> Result<Self> {
        let dims = validate_training_set(&patterns, &keys)?;
        let mut bias = vec![vec![0i64; dims.q() as usize]; dims.key_len()];
        for key in &keys {
            for (i, &k) in key.digits().iter().enumerate() {
                bias[i][k as usize] += 1;
            }
        }
        Ok(Self {
            dims,
            exclude_diagonal: options.exclude_diagonal,
            patterns,
            keys,
            bias,
        })
    }

    pub fn patterns(&self) -> &[QPattern] {
        &self.patterns
    }

    pub fn keys(&self) -> &[KeyVector] {
        &self.keys
    }

    fn run(&self, x: &QPattern, ops: &mut OpCount) -> Result<Identification> {
        x.conforms(self.dims.pattern_len(), self.dims.q())?;
        let big_n = self.dims.pattern_len() as i64;
        let q = self.dims.q() as i64;

        let overlaps = self
            .patterns
            .iter()
            .map(|p| overlap(x, p).map(|o| o as i64))
            .collect::<Result<Vec<_>>>()?;
        ops.accumulations += (self.patterns.len() * x.len()) as u64;

        let mut digits = Vec::with_capacity(self.dims.key_len());
        let mut margins = Vec::with_capacity(self.dims.key_len());
        for i in 0..self.dims.key_len() {
            let mut votes = vec![0i64; q as usize];
            for ((p, key), &o) in self.patterns.iter().zip(&self.keys).zip(&overlaps) {
                let skip = self.exclude_diagonal && i < x.len() && p.symbols()[i] == x.symbols()[i];
                votes[key.digits()[i] as usize] += o - skip as i64;
            }
            ops.accumulations += self.patterns.len() as u64;

            let proj: Vec<i64> = votes
                .iter()
                .zip(&self.bias[i])
                .map(|(&v, &c)| q * v - big_n * c)
                .collect();
            ops.bias_subtractions += q as u64;

            // First maximum wins; runner-up is the best of the rest.
            let top = *proj.iter().max().expect("q >= 2");
            let winner = proj.iter().position(|&v| v == top).expect("max exists");
            ops.comparisons += q as u64 - 1;
            let second = proj
                .iter()
                .enumerate()
                .filter_map(|(k, &v)| (k != winner).then_some(v))
                .max()
                .expect("q >= 2");
            digits.push(winner as u32);
            margins.push(top - second);
        }

        let key = KeyVector::new(digits, self.dims.q())?;
        let index = decode_key(&key);
        Ok(Identification {
            valid: index < self.dims.pattern_count(),
            key,
            index,
            margins,
        })
    }
}

impl Recall for MatrixFreeMemory {
    fn dims(&self) -> &Dimensions {
        &self.dims
    }

    fn identify(&self, x: &QPattern) -> Result<Identification> {
        self.run(x, &mut OpCount::default())
    }

    fn identify_counted(&self, x: &QPattern) -> Result<(Identification, OpCount)> {
        let mut ops = OpCount::default();
        let id = self.run(x, &mut ops)?;
        Ok((id, ops))
    }
}

/// Overlap-vote identification with the default diagonal exclusion.
pub fn oracle_identify(
    patterns: &[QPattern],
    keys: &[KeyVector],
    x: &QPattern,
) -> Result<Identification> {
    oracle_identify_with(patterns, keys, x, TrainOptions::default())
}

pub fn oracle_identify_with(
    patterns: &[QPattern],
    keys: &[KeyVector],
    x: &QPattern,
    options: TrainOptions,
) -> Result<Identification> {
    MatrixFreeMemory::with_options(patterns.to_vec(), keys.to_vec(), options)?.identify(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &[u32], q: u32) -> QPattern {
        QPattern::new(s.to_vec(), q).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let x = pat(&[0, 1, 2, 3], 4);
        assert_eq!(overlap(&x, &x).unwrap(), 4);
        assert_eq!(overlap(&x, &pat(&[1, 2, 3, 0], 4)).unwrap(), 0);
        assert_eq!(overlap(&x, &pat(&[0, 1, 0, 0], 4)).unwrap(), 2);
        assert!(overlap(&x, &pat(&[0, 1, 0], 4)).is_err());
        assert!(overlap(&x, &pat(&[0, 1, 0, 0], 5)).is_err());
    }

    #[test]
    fn stored_pattern_recalls_its_key() {
        let ps = [pat(&[0, 1, 2, 3, 0, 1], 4), pat(&[3, 3, 1, 0, 2, 2], 4)];
        let keys = [
            KeyVector::new(vec![2, 1], 4).unwrap(),
            KeyVector::new(vec![0, 3], 4).unwrap(),
        ];
        for (p, k) in ps.iter().zip(&keys) {
            assert_eq!(&oracle_identify(&ps, &keys, p).unwrap().key, k);
        }
    }

    #[test]
    fn duplicate_patterns_vote_together() {
        // Two copies of the same pattern, keys (1,0) and (0,1), q = 2, N = 3.
        // Overlap 3 for both. Digit 0 skips position 0 (match) -> votes 2 each;
        // colors tie at 2*2 - 3*1 = 1, so color 0 wins with margin 0. Same for digit 1.
        let p = pat(&[1, 0, 1], 2);
        let ps = [p.clone(), p.clone()];
        let keys = [
            KeyVector::new(vec![1, 0], 2).unwrap(),
            KeyVector::new(vec![0, 1], 2).unwrap(),
        ];
        let id = oracle_identify(&ps, &keys, &p).unwrap();
        assert_eq!(id.key.digits(), &[0, 0]);
        assert_eq!(id.margins, vec![0, 0]);
        assert_eq!(id.index, 0);
    }

    #[test]
    fn counts_scan_cost() {
        let ps = [pat(&[0, 1, 2], 3), pat(&[2, 1, 0], 3)];
        let mem = MatrixFreeMemory::new(
            ps.to_vec(),
            vec![
                KeyVector::new(vec![0], 3).unwrap(),
                KeyVector::new(vec![1], 3).unwrap(),
            ],
        )
        .unwrap();
        let (_, ops) = mem.identify_counted(&ps[0]).unwrap();
        assert_eq!(ops.accumulations, 2 * 3 + 2);
        assert_eq!(ops.bias_subtractions, 3);
        assert_eq!(ops.comparisons, 2);
    }
}
