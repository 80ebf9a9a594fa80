//! Closed-form performance estimates for the perceptron memory.
//!
//! All quantities are driven by the effective dimension `N_e = N (1 - b)^2`:
//!
//! * identification error `P = n sqrt(M / (π N_e)) exp(-N_e q² / (4M))`
//! * capacity `M_max = N_e q² / (4 |ln P0|)`
//! * critical distortion `b_max = 1 - 2 sqrt(M) / (q sqrt(N))`
//! * output layer size `n_max = 2 + ln N_e / ln q`

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::codec::{required_digits, Dimensions};
use crate::error::{QvamError, Result};

/// Parameter bundle for the closed-form estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryInput {
    /// Pattern length `N`.
    pub pattern_len: u64,
    /// Stored pattern count `M`.
    pub pattern_count: u64,
    pub q: u32,
    /// Distortion fraction `b`.
    pub b: f64,
    /// Key length `n`; `None` means the minimal digit count for `M`.
    pub key_len: Option<usize>,
    /// Target error probability `P0` used by [`capacity`].
    pub p0: f64,
}

impl TheoryInput {
    pub fn new(pattern_len: u64, pattern_count: u64, q: u32, b: f64) -> Self {
        Self {
            pattern_len,
            pattern_count,
            q,
            b,
            key_len: None,
            p0: 0.01,
        }
    }

    pub fn with_key_len(mut self, n: usize) -> Self {
        self.key_len = Some(n);
        self
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(QvamError::InvalidAlphabet(self.q as u64));
        }
        if self.pattern_len < 1 {
            return Err(QvamError::InvalidDimensions("N must be at least 1".into()));
        }
        if self.pattern_count < 1 {
            return Err(QvamError::Empty);
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(QvamError::InvalidDistortion(self.b));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(QvamError::InvalidProbability(self.p0));
        }
        Ok(())
    }

    /// `n`, defaulting to the minimal digit count.
    pub fn resolved_key_len(&self) -> Result<usize> {
        match self.key_len {
            Some(n) => Ok(n),
            None => required_digits(self.pattern_count, self.q),
        }
    }

    pub fn effective_dim(&self) -> f64 {
        effective_dim(self.pattern_len as f64, self.b)
    }
}

/// `N (1 - b)^2`.
pub fn effective_dim(pattern_len: f64, b: f64) -> f64 {
    pattern_len * (1.0 - b) * (1.0 - b)
}

/// An asymptotic estimate together with its value clamped into a valid range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub raw: f64,
    pub clamped: f64,
}

impl Estimate {
    fn unit(raw: f64) -> Self {
        Self {
            raw,
            clamped: raw.clamp(0.0, 1.0),
        }
    }
}

/// Error probability estimate with a validity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub raw: f64,
    pub clamped: f64,
    /// `raw <= 0.5`; outside this the asymptotic formula is not trustworthy.
    pub in_regime: bool,
}

/// Probability of misidentifying a probe with distortion `t.b`.
pub fn error_probability(t: &TheoryInput) -> Result<ErrorEstimate> {
    t.validate()?;
    let ne = t.effective_dim();
    if ne <= 0.0 {
        return Err(QvamError::NoSignal);
    }
    let n = t.resolved_key_len()? as f64;
    let m = t.pattern_count as f64;
    let q = t.q as f64;
    let raw = n * (m / (PI * ne)).sqrt() * (-ne * q * q / (4.0 * m)).exp();
    let Estimate { raw, clamped } = Estimate::unit(raw);
    Ok(ErrorEstimate {
        raw,
        clamped,
        in_regime: raw <= 0.5,
    })
}

/// Largest pattern count identified with error below `t.p0` at distortion `t.b`.
pub fn capacity(t: &TheoryInput) -> Result<f64> {
    t.validate()?;
    let ne = t.effective_dim();
    if ne <= 0.0 {
        return Err(QvamError::NoSignal);
    }
    Ok(capacity_for(ne, t.q, t.p0))
}

/// `N_e q² / (4 |ln P0|)`, with `N_e` supplied directly.
pub fn capacity_for(effective_dim: f64, q: u32, p0: f64) -> f64 {
    let q = q as f64;
    effective_dim * q * q / (4.0 * p0.ln().abs())
}

/// Distortion level beyond which recall collapses.
pub fn critical_distortion(pattern_len: f64, pattern_count: f64, q: u32) -> Estimate {
    Estimate::unit(1.0 - 2.0 * pattern_count.sqrt() / (q as f64 * pattern_len.sqrt()))
}

/// Output layer size estimate and its ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputLayerSize {
    pub estimate: f64,
    pub neurons: u64,
}

pub fn max_output_neurons(effective_dim: f64, q: u32) -> Result<OutputLayerSize> {
    if q < 2 {
        return Err(QvamError::InvalidAlphabet(q as u64));
    }
    if effective_dim.is_nan() || effective_dim < 1.0 {
        return Err(QvamError::InvalidDimensions(format!(
            "effective dimension {effective_dim} is below 1"
        )));
    }
    let estimate = 2.0 + effective_dim.ln() / (q as f64).ln();
    Ok(OutputLayerSize {
        estimate,
        neurons: estimate.ceil() as u64,
    })
}

/// Analytic operation counts per probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    /// `n N q` accumulations for one recall pass.
    pub perceptron: u64,
    /// `N M` symbol comparisons for an exhaustive scan.
    pub direct_scan: u64,
}

pub fn op_counts(dims: &Dimensions) -> OpCounts {
    let big_n = dims.pattern_len() as u64;
    OpCounts {
        perceptron: dims.key_len() as u64 * big_n * dims.q() as u64,
        direct_scan: big_n * dims.pattern_count(),
    }
}
