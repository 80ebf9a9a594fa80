//! Two-layer vector perceptron: Hebbian training and single-pass recall.
//!
//! Output neuron `i` is tied to input neuron `j` by a `q x q` count block
//! `T_ij[a][b] = #{μ : y_μi = e_a, x_μj = e_b}`. The local field on output `i`
//! is reported pre-multiplied by `q`, so every projection is an exact integer:
//!
//! ```text
//! proj[k] = q * Σ_j T_ij[k][X_j]  -  N * c_i[k]
//! ```
//!
//! where `c_i[k]` counts the stored keys whose digit `i` equals `k`.

mod oracle;

use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{decode_key, Dimensions, KeyScheme, KeyVector, QPattern};
use crate::error::{QvamError, Result};

pub use oracle::{oracle_identify, oracle_identify_with, overlap, MatrixFreeMemory};

/// Training switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainOptions {
    /// Zero the block coupling output `i` to input `i` (the `1 - δ_ij` factor).
    pub exclude_diagonal: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            exclude_diagonal: true,
        }
    }
}

/// Scaled projections `q·(h_i · e_k)` of one output neuron's local field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldVector {
    pub proj: Vec<i64>,
}

/// Result of one recall pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Identification {
    pub key: KeyVector,
    pub index: u64,
    /// `index < M`; a decoded index past the stored range means the probe was misidentified.
    pub valid: bool,
    /// Winner minus runner-up projection per digit. Zero marks a tie.
    pub margins: Vec<i64>,
}

/// Instrumented operation tally for one recall pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCount {
    pub accumulations: u64,
    pub bias_subtractions: u64,
    pub comparisons: u64,
}

pub(crate) trait Tally {
    fn accumulate(&mut self, n: u64);
    fn bias(&mut self, n: u64);
    fn compare(&mut self, n: u64);
}

impl Tally for () {
    #[inline(always)]
    fn accumulate(&mut self, _: u64) {}
    #[inline(always)]
    fn bias(&mut self, _: u64) {}
    #[inline(always)]
    fn compare(&mut self, _: u64) {}
}

impl Tally for OpCount {
    fn accumulate(&mut self, n: u64) {
        self.accumulations += n;
    }
    fn bias(&mut self, n: u64) {
        self.bias_subtractions += n;
    }
    fn compare(&mut self, n: u64) {
        self.comparisons += n;
    }
}

/// Anything that maps a probe pattern to an identification.
pub trait Recall: Sync {
    fn dims(&self) -> &Dimensions;

    fn identify(&self, x: &QPattern) -> Result<Identification>;

    fn identify_counted(&self, x: &QPattern) -> Result<(Identification, OpCount)>;
}

/// Read-only view of one `q x q` block `T_ij`.
#[derive(Debug, Clone, Copy)]
pub struct WeightBlock<'a> {
    // Stored input-color major: cells[b * q + a].
    cells: &'a [u32],
    q: usize,
}

impl WeightBlock<'_> {
    /// Number of patterns with key color `a` at this output and input color `b` at this input.
    pub fn get(&self, a: u32, b: u32) -> u32 {
        self.cells[b as usize * self.q + a as usize]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().map(|&c| c as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }
}

/// Trained perceptron memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HebbNetwork {
    dims: Dimensions,
    exclude_diagonal: bool,
    // Index ((i * N + j) * q + input_color) * q + key_color.
    counts: Vec<u32>,
    // Index i * q + k.
    bias: Vec<u32>,
}

/// Checks a training set and returns its shape.
pub(crate) fn validate_training_set(
    patterns: &[QPattern],
    keys: &[KeyVector],
) -> Result<Dimensions> {
    let first = patterns.first().ok_or(QvamError::Empty)?;
    if keys.len() != patterns.len() {
        return Err(QvamError::LengthMismatch {
            expected: patterns.len(),
            actual: keys.len(),
        });
    }
    let (pattern_len, q) = (first.len(), first.q());
    let key_len = keys[0].len();
    for p in patterns {
        p.conforms(pattern_len, q)?;
    }
    for k in keys {
        if k.q() != q {
            return Err(QvamError::AlphabetMismatch {
                expected: q,
                actual: k.q(),
            });
        }
        if k.len() != key_len {
            return Err(QvamError::LengthMismatch {
                expected: key_len,
                actual: k.len(),
            });
        }
    }
    let m = patterns.len() as u64;
    if m >= u32::MAX as u64 {
        return Err(QvamError::Overflow(format!(
            "{m} patterns overflow 32-bit counts"
        )));
    }
    let field_bound = q as u128 * pattern_len as u128 * m as u128;
    if field_bound > i64::MAX as u128 / 2 {
        return Err(QvamError::Overflow(format!(
            "q*N*M = {field_bound} overflows 64-bit fields"
        )));
    }
    Dimensions::with_key_len(pattern_len, m, q, key_len)
}

/// Index of the largest projection (smallest index on ties) and its lead over the runner-up.
fn select<T: Tally>(proj: &[i64], tally: &mut T) -> (u32, i64) {
    let mut best = 0;
    for k in 1..proj.len() {
        if proj[k] > proj[best] {
            best = k;
        }
    }
    tally.compare(proj.len() as u64 - 1);
    let runner_up = proj
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != best)
        .map(|(_, &v)| v)
        .max()
        .expect("q >= 2");
    (best as u32, proj[best] - runner_up)
}

impl HebbNetwork {
    /// Trains on `patterns` with explicit `keys`.
    pub fn train(patterns: &[QPattern], keys: &[KeyVector]) -> Result<Self> {
        Self::train_with(patterns, keys, TrainOptions::default())
    }

    /// Trains with pattern `μ` keyed by `encode_key(μ)`.
    pub fn train_indexed(patterns: &[QPattern]) -> Result<Self> {
        let first = patterns.first().ok_or(QvamError::Empty)?;
        let dims = Dimensions::new(first.len(), patterns.len() as u64, first.q())?;
        let keys = KeyScheme::Index.assign(&dims)?;
        Self::train(patterns, &keys)
    }

    pub fn train_with(
        patterns: &[QPattern],
        keys: &[KeyVector],
        options: TrainOptions,
    ) -> Result<Self> {
        let dims = validate_training_set(patterns, keys)?;
        let mut net = Self::empty(dims, options);
        for (x, y) in patterns.iter().zip(keys) {
            net.add_pair(x, y);
        }
        Ok(net)
    }

    /// Same result as [`HebbNetwork::train_with`], with the count grids built
    /// per worker and summed.
    pub fn train_parallel(
        patterns: &[QPattern],
        keys: &[KeyVector],
        options: TrainOptions,
    ) -> Result<Self> {
        let dims = validate_training_set(patterns, keys)?;
        let workers = rayon::current_num_threads().max(1);
        let chunk = patterns.len().div_ceil(workers);
        let partials = patterns
            .par_chunks(chunk)
            .zip(keys.par_chunks(chunk))
            .map(|(ps, ks)| {
                let mut net = Self::empty(dims, options);
                for (x, y) in ps.iter().zip(ks) {
                    net.add_pair(x, y);
                }
                net
            })
            .collect::<Vec<_>>();
        let mut net = Self::empty(dims, options);
        for part in &partials {
            net.add_counts(part);
        }
        Ok(net)
    }

    fn empty(dims: Dimensions, options: TrainOptions) -> Self {
        let (n, big_n, q) = (dims.key_len(), dims.pattern_len(), dims.q() as usize);
        Self {
            dims,
            exclude_diagonal: options.exclude_diagonal,
            counts: vec![0; n * big_n * q * q],
            bias: vec![0; n * q],
        }
    }

    fn add_pair(&mut self, x: &QPattern, y: &KeyVector) {
        let (big_n, q) = (self.dims.pattern_len(), self.dims.q() as usize);
        for (i, &a) in y.digits().iter().enumerate() {
            self.bias[i * q + a as usize] += 1;
            for (j, &b) in x.symbols().iter().enumerate() {
                if self.exclude_diagonal && i == j {
                    continue;
                }
                self.counts[((i * big_n + j) * q + b as usize) * q + a as usize] += 1;
            }
        }
    }

    fn add_counts(&mut self, other: &Self) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        for (c, o) in self.bias.iter_mut().zip(&other.bias) {
            *c += o;
        }
    }

    /// Folds another network trained on a disjoint pattern set into this one.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        let (a, b) = (&self.dims, &other.dims);
        if a.pattern_len() != b.pattern_len() || a.key_len() != b.key_len() || a.q() != b.q() {
            return Err(QvamError::InvalidDimensions(
                "cannot merge networks of different shapes".into(),
            ));
        }
        if self.exclude_diagonal != other.exclude_diagonal {
            return Err(QvamError::InvalidDimensions(
                "cannot merge networks with different diagonal handling".into(),
            ));
        }
        let m = a.pattern_count() + b.pattern_count();
        if m >= u32::MAX as u64 {
            return Err(QvamError::Overflow(format!(
                "{m} patterns overflow 32-bit counts"
            )));
        }
        self.dims = Dimensions::with_key_len(a.pattern_len(), m, a.q(), a.key_len())?;
        self.add_counts(other);
        Ok(())
    }

    /// Rebuilds a network from raw counts and checks the mass invariants.
    ///
    /// `blocks` is in `(i, j, a, b)` row-major order, `bias` in `(i, k)` order.
    pub fn from_parts(
        dims: Dimensions,
        exclude_diagonal: bool,
        blocks: &[u32],
        bias: &[u32],
    ) -> Result<Self> {
        let (n, big_n, q) = (dims.key_len(), dims.pattern_len(), dims.q() as usize);
        let bad = |reason: String| QvamError::Format {
            format: "network",
            reason,
        };
        if blocks.len() != n * big_n * q * q || bias.len() != n * q {
            return Err(bad("count grid sizes do not match dimensions".into()));
        }
        let mut net = Self::empty(dims, TrainOptions { exclude_diagonal });
        for i in 0..n {
            for j in 0..big_n {
                let src = &blocks[(i * big_n + j) * q * q..][..q * q];
                for a in 0..q {
                    for b in 0..q {
                        net.counts[((i * big_n + j) * q + b) * q + a] = src[a * q + b];
                    }
                }
            }
        }
        net.bias.copy_from_slice(bias);
        net.check_mass().map_err(bad)?;
        Ok(net)
    }

    /// Block counts in `(i, j, a, b)` row-major order.
    pub fn blocks_row_major(&self) -> Vec<u32> {
        let (n, big_n, q) = (self.dims.key_len(), self.dims.pattern_len(), self.q());
        let mut out = vec![0; self.counts.len()];
        for i in 0..n {
            for j in 0..big_n {
                let base = (i * big_n + j) * q * q;
                for a in 0..q {
                    for b in 0..q {
                        out[base + a * q + b] = self.counts[base + b * q + a];
                    }
                }
            }
        }
        out
    }

    fn check_mass(&self) -> std::result::Result<(), String> {
        let m = self.dims.pattern_count();
        for i in 0..self.dims.key_len() {
            let total: u64 = self.bias_counts(i).iter().map(|&c| c as u64).sum();
            if total != m {
                return Err(format!(
                    "bias counts of output {i} sum to {total}, expected {m}"
                ));
            }
            for j in 0..self.dims.pattern_len() {
                let block = self.block(i, j);
                if self.is_excluded(i, j) {
                    if !block.is_zero() {
                        return Err(format!("diagonal block ({i}, {j}) is not zero"));
                    }
                } else if block.total() != m {
                    return Err(format!(
                        "block ({i}, {j}) holds {}, expected {m}",
                        block.total()
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    pub fn exclude_diagonal(&self) -> bool {
        self.exclude_diagonal
    }

    fn q(&self) -> usize {
        self.dims.q() as usize
    }

    fn is_excluded(&self, i: usize, j: usize) -> bool {
        self.exclude_diagonal && i == j
    }

    /// Block `T_ij` (zero-based indices).
    pub fn block(&self, i: usize, j: usize) -> WeightBlock<'_> {
        let q = self.q();
        let start = (i * self.dims.pattern_len() + j) * q * q;
        WeightBlock {
            cells: &self.counts[start..start + q * q],
            q,
        }
    }

    /// `c_i[k]`: stored keys whose digit `i` is `k`.
    pub fn bias_counts(&self, i: usize) -> &[u32] {
        let q = self.q();
        &self.bias[i * q..(i + 1) * q]
    }

    /// Sum of all block entries plus bias counts; a cheap fingerprint for logs.
    pub fn checksum(&self) -> u64 {
        self.counts
            .iter()
            .chain(&self.bias)
            .map(|&c| c as u64)
            .sum()
    }

    fn check_probe(&self, x: &QPattern) -> Result<()> {
        x.conforms(self.dims.pattern_len(), self.dims.q())
    }

    /// Raw count sums `Σ_j T_ij[k][X_j]` for output `i`, written into `acc`.
    fn accumulate<T: Tally>(&self, x: &QPattern, i: usize, acc: &mut [u64], tally: &mut T) {
        let (big_n, q) = (self.dims.pattern_len(), self.q());
        acc.fill(0);
        let neuron = &self.counts[i * big_n * q * q..(i + 1) * big_n * q * q];
        for (j, &b) in x.symbols().iter().enumerate() {
            if self.is_excluded(i, j) {
                continue;
            }
            let row = &neuron[(j * q + b as usize) * q..][..q];
            for (a, &c) in acc.iter_mut().zip(row) {
                *a += c as u64;
            }
            tally.accumulate(q as u64);
        }
    }

    fn project<T: Tally>(
        &self,
        i: usize,
        acc: &[u64],
        scale: i64,
        proj: &mut [i64],
        tally: &mut T,
    ) {
        let big_n = self.dims.pattern_len() as i64;
        let q = self.dims.q() as i64;
        for ((p, &a), &c) in proj.iter_mut().zip(acc).zip(self.bias_counts(i)) {
            *p = scale * (q * a as i64 - big_n * c as i64);
        }
        tally.bias(acc.len() as u64);
    }

    /// Local field on output `i` (zero-based), scaled by `q`.
    pub fn local_field(&self, x: &QPattern, i: usize) -> Result<FieldVector> {
        self.check_probe(x)?;
        if i >= self.dims.key_len() {
            return Err(QvamError::InvalidDimensions(format!(
                "output index {i} out of range 0..{}",
                self.dims.key_len()
            )));
        }
        let mut acc = vec![0; self.q()];
        let mut proj = vec![0; self.q()];
        self.accumulate(x, i, &mut acc, &mut ());
        self.project(i, &acc, 1, &mut proj, &mut ());
        Ok(FieldVector { proj })
    }

    fn recall<T: Tally>(&self, x: &QPattern, scale: i64, tally: &mut T) -> Result<Identification> {
        self.check_probe(x)?;
        let n = self.dims.key_len();
        let mut acc = vec![0; self.q()];
        let mut proj = vec![0; self.q()];
        let mut digits = Vec::with_capacity(n);
        let mut margins = Vec::with_capacity(n);
        for i in 0..n {
            self.accumulate(x, i, &mut acc, tally);
            self.project(i, &acc, scale, &mut proj, tally);
            let (k, margin) = select(&proj, tally);
            digits.push(k);
            margins.push(margin);
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

impl Recall for HebbNetwork {
    fn dims(&self) -> &Dimensions {
        &self.dims
    }

    fn identify(&self, x: &QPattern) -> Result<Identification> {
        self.recall(x, 1, &mut ())
    }

    fn identify_counted(&self, x: &QPattern) -> Result<(Identification, OpCount)> {
        let mut ops = OpCount::default();
        let id = self.recall(x, 1, &mut ops)?;
        Ok((id, ops))
    }
}
