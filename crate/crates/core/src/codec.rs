//! Patterns, keys and the q-ary bookkeeping around them.
//!
//! A symbol `k` stands for the basis vector `e_k` of `R^q`. Nothing in this
//! crate materializes one-hot vectors: every inner product between basis
//! vectors reduces to an equality test between two indices.

use serde::{Deserialize, Serialize};

use crate::error::{QvamError, Result};

/// Largest alphabet accepted anywhere in the crate (`2^30`, the widest binary chunk).
pub const MAX_Q: u32 = 1 << 30;

/// A single color index, i.e. the basis vector `e_k` with `k = value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QSymbol(pub u32);

impl QSymbol {
    pub fn value(self) -> u32 {
        self.0
    }
}

impl From<u32> for QSymbol {
    fn from(v: u32) -> Self {
        QSymbol(v)
    }
}

fn check_alphabet(q: u32) -> Result<()> {
    if !(2..=MAX_Q).contains(&q) {
        return Err(QvamError::InvalidAlphabet(q as u64));
    }
    Ok(())
}

fn check_symbols(symbols: &[u32], q: u32) -> Result<()> {
    match symbols.iter().position(|&s| s >= q) {
        Some(position) => Err(QvamError::SymbolOutOfRange {
            position,
            symbol: symbols[position],
            q,
        }),
        None => Ok(()),
    }
}

/// An N-component pattern over a q-letter alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QPattern {
    symbols: Vec<u32>,
    q: u32,
}

impl QPattern {
    pub fn new(symbols: Vec<u32>, q: u32) -> Result<Self> {
        check_alphabet(q)?;
        if symbols.is_empty() {
            return Err(QvamError::InvalidDimensions(
                "a pattern needs at least one component".into(),
            ));
        }
        check_symbols(&symbols, q)?;
        Ok(Self { symbols, q })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn symbol(&self, j: usize) -> QSymbol {
        QSymbol(self.symbols[j])
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn into_symbols(self) -> Vec<u32> {
        self.symbols
    }

    /// Checks that `self` has length `n` and alphabet `q`.
    pub fn conforms(&self, n: usize, q: u32) -> Result<()> {
        if self.q != q {
            return Err(QvamError::AlphabetMismatch {
                expected: q,
                actual: self.q,
            });
        }
        if self.symbols.len() != n {
            return Err(QvamError::LengthMismatch {
                expected: n,
                actual: self.symbols.len(),
            });
        }
        Ok(())
    }
}

/// An identifier written as `n` base-q digits, least significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyVector {
    digits: Vec<u32>,
    q: u32,
}

impl KeyVector {
    /// Builds a key from raw digits. `q^n` must fit in a `u64` so the key
    /// always decodes to a representable index.
    pub fn new(digits: Vec<u32>, q: u32) -> Result<Self> {
        check_alphabet(q)?;
        if digits.is_empty() {
            return Err(QvamError::InvalidDimensions(
                "a key needs at least one digit".into(),
            ));
        }
        key_space(q, digits.len())?;
        check_symbols(&digits, q)?;
        Ok(Self { digits, q })
    }

    /// Base-q expansion of `m` over `n` digits.
    pub fn from_index(m: u64, q: u32, n: usize) -> Result<Self> {
        check_alphabet(q)?;
        let space = key_space(q, n)?;
        if n == 0 || m >= space {
            return Err(QvamError::KeyOutOfRange {
                index: m,
                q,
                digits: n,
            });
        }
        let base = q as u64;
        let mut rest = m;
        let digits = (0..n)
            .map(|_| {
                let d = (rest % base) as u32;
                rest /= base;
                d
            })
            .collect();
        Ok(Self { digits, q })
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn digit(&self, i: usize) -> QSymbol {
        QSymbol(self.digits[i])
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn q(&self) -> u32 {
        self.q
    }
}

/// `q^n`, or an error when it does not fit in 64 bits.
fn key_space(q: u32, n: usize) -> Result<u64> {
    u32::try_from(n)
        .ok()
        .and_then(|n| (q as u64).checked_pow(n))
        .ok_or_else(|| QvamError::InvalidDimensions(format!("{q}^{n} keys do not fit in 64 bits")))
}

/// Number of base-q digits needed to name every index in `0..m`.
pub fn required_digits(m: u64, q: u32) -> Result<usize> {
    check_alphabet(q)?;
    if m < 1 {
        return Err(QvamError::Empty);
    }
    let base = q as u64;
    let mut rest = m - 1;
    let mut n = 1;
    while rest >= base {
        rest /= base;
        n += 1;
    }
    Ok(n)
}

/// `encode_key(m)` under the key length and alphabet recorded in `dims`.
pub fn encode_key(m: u64, dims: &Dimensions) -> Result<KeyVector> {
    KeyVector::from_index(m, dims.q, dims.key_len)
}

/// `k_1 q^0 + k_2 q^1 + ... + k_n q^(n-1)`.
pub fn decode_key(key: &KeyVector) -> u64 {
    let base = key.q as u64;
    key.digits
        .iter()
        .rev()
        .fold(0u64, |acc, &d| acc * base + d as u64)
}

/// Network shape: pattern length `N`, key length `n`, pattern count `M`, alphabet `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimensions {
    pattern_len: usize,
    key_len: usize,
    pattern_count: u64,
    q: u32,
}

impl Dimensions {
    /// Shape with the minimal key length for `pattern_count` patterns.
    pub fn new(pattern_len: usize, pattern_count: u64, q: u32) -> Result<Self> {
        let key_len = required_digits(pattern_count, q)?;
        Self::with_key_len(pattern_len, pattern_count, q, key_len)
    }

    /// Shape with an explicit key length, which must still cover every index.
    pub fn with_key_len(
        pattern_len: usize,
        pattern_count: u64,
        q: u32,
        key_len: usize,
    ) -> Result<Self> {
        check_alphabet(q)?;
        if pattern_len < 1 {
            return Err(QvamError::InvalidDimensions("N must be at least 1".into()));
        }
        if pattern_count < 1 {
            return Err(QvamError::Empty);
        }
        let minimum = required_digits(pattern_count, q)?;
        if key_len < minimum {
            return Err(QvamError::InvalidDimensions(format!(
                "key length {key_len} cannot index {pattern_count} patterns over q = {q} (need {minimum})"
            )));
        }
        key_space(q, key_len)?;
        Ok(Self {
            pattern_len,
            key_len,
            pattern_count,
            q,
        })
    }

    pub fn pattern_len(&self) -> usize {
        self.pattern_len
    }

    pub fn key_len(&self) -> usize {
        self.key_len
    }

    pub fn pattern_count(&self) -> u64 {
        self.pattern_count
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// `q^n`, the number of distinct keys.
    pub fn key_space(&self) -> u64 {
        (self.q as u64).pow(self.key_len as u32)
    }
}

/// How pattern positions are turned into keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyScheme {
    /// Pattern `μ` is keyed by the base-q expansion of `μ` itself.
    #[default]
    Index,
    /// Digit `i` is the running sum (mod q) of the first `i` base-q digits of `μ`.
    /// Bijective on `0..q^n`, and every digit position sees each color
    /// `floor(M/q)` or `ceil(M/q)` times, whatever `M` is.
    Balanced,
}

impl KeyScheme {
    pub fn key_for(self, mu: u64, dims: &Dimensions) -> Result<KeyVector> {
        let plain = encode_key(mu, dims)?;
        match self {
            KeyScheme::Index => Ok(plain),
            KeyScheme::Balanced => {
                let q = dims.q as u64;
                let mut running = 0u64;
                let digits = plain
                    .digits
                    .iter()
                    .map(|&d| {
                        running = (running + d as u64) % q;
                        running as u32
                    })
                    .collect();
                Ok(KeyVector { digits, q: dims.q })
            }
        }
    }

    /// Inverse of [`KeyScheme::key_for`].
    pub fn index_of(self, key: &KeyVector) -> u64 {
        match self {
            KeyScheme::Index => decode_key(key),
            KeyScheme::Balanced => {
                let q = key.q;
                let mut previous = 0u32;
                let digits = key
                    .digits
                    .iter()
                    .map(|&d| {
                        let plain = (d + q - previous) % q;
                        previous = d;
                        plain
                    })
                    .collect();
                decode_key(&KeyVector { digits, q })
            }
        }
    }

    /// Keys for patterns `0..M`.
    pub fn assign(self, dims: &Dimensions) -> Result<Vec<KeyVector>> {
        (0..dims.pattern_count)
            .map(|mu| self.key_for(mu, dims))
            .collect()
    }
}

/// A raw bit string fed through [`map_binary`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    bits: Vec<bool>,
}

impl BinaryVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters, ignoring whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(QvamError::Format {
                    format: "binary vector",
                    reason: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn check_chunk(r: u32) -> Result<()> {
    if !(1..=30).contains(&r) {
        return Err(QvamError::InvalidChunkWidth(r));
    }
    Ok(())
}

/// Packs consecutive `r`-bit chunks (MSB first) into symbols over `q = 2^r`.
pub fn map_binary(v: &BinaryVector, r: u32) -> Result<QPattern> {
    check_chunk(r)?;
    let width = r as usize;
    if v.is_empty() || v.len() % width != 0 {
        return Err(QvamError::InvalidDimensions(format!(
            "binary length {} is not a positive multiple of chunk width {r}",
            v.len()
        )));
    }
    let symbols = v
        .bits
        .chunks_exact(width)
        .map(|chunk| chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
        .collect();
    QPattern::new(symbols, 1 << r)
}

/// Inverse of [`map_binary`].
pub fn unmap_binary(p: &QPattern, r: u32) -> Result<BinaryVector> {
    check_chunk(r)?;
    if p.q() != 1 << r {
        return Err(QvamError::AlphabetMismatch {
            expected: 1 << r,
            actual: p.q(),
        });
    }
    let bits = p
        .symbols()
        .iter()
        .flat_map(|&s| (0..r).rev().map(move |shift| (s >> shift) & 1 == 1))
        .collect();
    Ok(BinaryVector::new(bits))
}
