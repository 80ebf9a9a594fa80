use serde::Serialize;

use crate::codec::QPattern;
use crate::error::{QvamError, Result};

/// Outcome of an exhaustive nearest-pattern scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanResult {
    pub index: usize,
    pub overlap: usize,
    /// Symbol comparisons performed; always `N * M`.
    pub comparisons: u64,
}

/// Index of the stored pattern with the largest overlap with `x`, ties to the smallest index.
pub fn baseline_scan_identify(patterns: &[QPattern], x: &QPattern) -> Result<ScanResult> {
    if patterns.is_empty() {
        return Err(QvamError::Empty);
    }
    let mut best = ScanResult {
        index: 0,
        overlap: 0,
        comparisons: 0,
    };
    for (mu, p) in patterns.iter().enumerate() {
        p.conforms(x.len(), x.q())?;
        let mut agree = 0;
        for (a, b) in x.symbols().iter().zip(p.symbols()) {
            agree += (a == b) as usize;
        }
        best.comparisons += x.len() as u64;
        if mu == 0 || agree > best.overlap {
            best.index = mu;
            best.overlap = agree;
        }
    }
    Ok(best)
}
