//! Monte Carlo reliability estimation and operation-count comparison.
//!
//! A trial picks a stored pattern uniformly, distorts it, recalls it and
//! counts an error whenever the recalled key differs from the stored one
//! (which covers decoded indices past `M`). Trials are independent and each
//! one draws from its own substream, so a sweep reproduces bit for bit under
//! any thread count.

mod baseline;
mod noise;
pub mod rng;

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{error_probability, TheoryInput};
use crate::codec::{Dimensions, KeyScheme, KeyVector, QPattern};
use crate::error::{QvamError, Result};
use crate::memory::{HebbNetwork, MatrixFreeMemory, Recall, TrainOptions};

pub use baseline::{baseline_scan_identify, ScanResult};
pub use noise::{NoiseModel, NoiseSpec};
use rng::{substream, uniform_below, Domain};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Header of the sweep CSV.
pub const CSV_HEADER: &str = "b,trials,errors,reliability_measured,reliability_theory,wilson_halfwidth,perceptron_ops,baseline_ops";

/// Recall engine used by the harness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Trained count blocks.
    #[default]
    Weights,
    /// Overlap voting over the stored patterns.
    MatrixFree,
}

/// `M` uniform random patterns of length `N` over `q` colors.
pub fn random_patterns(pattern_len: usize, q: u32, count: u64, seed: u64) -> Result<Vec<QPattern>> {
    (0..count)
        .map(|mu| {
            let mut rng = substream(seed, Domain::Patterns, 0, mu);
            let symbols = (0..pattern_len)
                .map(|_| uniform_below(&mut rng, q as u64) as u32)
                .collect();
            QPattern::new(symbols, q)
        })
        .collect()
}

/// Half-width of the 95% Wilson score interval for `successes / trials`.
pub fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// One point of a reliability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub b: f64,
    pub trials: u64,
    pub errors: u64,
    pub reliability_measured: f64,
    /// `1 - P` from the closed-form error estimate; 0 when there is no signal.
    pub reliability_theory: f64,
    pub wilson_halfwidth: f64,
    /// Whether the closed-form estimate is inside its regime (`raw P <= 0.5`).
    pub theory_in_regime: bool,
    /// Accumulations spent by the recall engine on one probe.
    pub perceptron_ops: u64,
    /// Comparisons spent by the exhaustive scan on one probe; 0 when the baseline is off.
    pub baseline_ops: u64,
}

impl CurvePoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{},{},{:.6},{:.6},{:.6},{},{}",
            self.b,
            self.trials,
            self.errors,
            self.reliability_measured,
            self.reliability_theory,
            self.wilson_halfwidth,
            self.perceptron_ops,
            self.baseline_ops
        )
    }
}

/// Writes the header and one row per point.
pub fn write_csv<W: Write>(mut out: W, points: &[CurvePoint]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(out, "{}", p.csv_row())?;
    }
    Ok(())
}

/// A trained engine plus everything needed to score trials against it.
pub struct Harness<'a> {
    engine: Box<dyn Recall + 'a>,
    patterns: &'a [QPattern],
    keys: Vec<KeyVector>,
    model: NoiseModel,
    baseline: bool,
}

impl<'a> Harness<'a> {
    /// Wraps an already trained engine; `keys[μ]` must be the key it was trained with.
    pub fn new(
        engine: Box<dyn Recall + 'a>,
        patterns: &'a [QPattern],
        keys: Vec<KeyVector>,
    ) -> Result<Self> {
        if patterns.len() != keys.len() {
            return Err(QvamError::LengthMismatch {
                expected: patterns.len(),
                actual: keys.len(),
            });
        }
        if patterns.is_empty() {
            return Err(QvamError::Empty);
        }
        if engine.dims().pattern_count() != patterns.len() as u64 {
            return Err(QvamError::InvalidDimensions(
                "engine and pattern set disagree on M".into(),
            ));
        }
        Ok(Self {
            engine,
            patterns,
            keys,
            model: NoiseModel::default(),
            baseline: false,
        })
    }

    /// Trains the selected engine on `patterns` with keys from `scheme`.
    pub fn build(
        patterns: &'a [QPattern],
        key_len: Option<usize>,
        scheme: KeyScheme,
        engine: Engine,
        options: TrainOptions,
    ) -> Result<Self> {
        let first = patterns.first().ok_or(QvamError::Empty)?;
        let m = patterns.len() as u64;
        let dims = match key_len {
            Some(n) => Dimensions::with_key_len(first.len(), m, first.q(), n)?,
            None => Dimensions::new(first.len(), m, first.q())?,
        };
        let keys = scheme.assign(&dims)?;
        let engine: Box<dyn Recall> = match engine {
            Engine::Weights => Box::new(HebbNetwork::train_with(patterns, &keys, options)?),
            Engine::MatrixFree => Box::new(MatrixFreeMemory::with_options(
                patterns.to_vec(),
                keys.clone(),
                options,
            )?),
        };
        Self::new(engine, patterns, keys)
    }

    pub fn with_noise_model(mut self, model: NoiseModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_baseline(mut self, enabled: bool) -> Self {
        self.baseline = enabled;
        self
    }

    pub fn dims(&self) -> &Dimensions {
        self.engine.dims()
    }

    pub fn engine(&self) -> &dyn Recall {
        self.engine.as_ref()
    }

    /// Stored index and distorted probe for one trial.
    pub fn probe(&self, seed: u64, b: f64, point: u64, trial: u64) -> (usize, QPattern) {
        let mut rng = substream(seed, Domain::Trials, point, trial);
        let mu = uniform_below(&mut rng, self.patterns.len() as u64) as usize;
        let probe = noise::distort_with(&self.patterns[mu], b, self.model, &mut rng);
        (mu, probe)
    }

    fn trial_failed(&self, seed: u64, b: f64, point: u64, trial: u64) -> Result<bool> {
        let (mu, probe) = self.probe(seed, b, point, trial);
        let id = self.engine.identify(&probe)?;
        Ok(id.key != self.keys[mu])
    }

    /// Estimates reliability at distortion `b` from `trials` independent trials.
    pub fn run_point(&self, b: f64, trials: u64, seed: u64, point: u64) -> Result<CurvePoint> {
        if !(0.0..=1.0).contains(&b) {
            return Err(QvamError::InvalidDistortion(b));
        }
        if trials == 0 {
            return Err(QvamError::InvalidDimensions(
                "trials must be at least 1".into(),
            ));
        }
        let errors = (0..trials as usize)
            .into_par_iter()
            .with_min_len(64)
            .map(|t| self.trial_failed(seed, b, point, t as u64).map(u64::from))
            .try_reduce(|| 0, |a, c| Ok(a + c))?;

        let (_, sample) = self.probe(seed, b, point, 0);
        let (_, ops) = self.engine.identify_counted(&sample)?;
        let baseline_ops = if self.baseline {
            baseline_scan_identify(self.patterns, &sample)?.comparisons
        } else {
            0
        };

        let dims = self.dims();
        let theory = TheoryInput::new(dims.pattern_len() as u64, dims.pattern_count(), dims.q(), b)
            .with_key_len(dims.key_len());
        let (reliability_theory, theory_in_regime) = match error_probability(&theory) {
            Ok(p) => (1.0 - p.clamped, p.in_regime),
            Err(QvamError::NoSignal) => (0.0, false),
            Err(e) => return Err(e),
        };

        let successes = trials - errors;
        Ok(CurvePoint {
            b,
            trials,
            errors,
            reliability_measured: successes as f64 / trials as f64,
            reliability_theory,
            wilson_halfwidth: wilson_halfwidth(successes, trials),
            theory_in_regime,
            perceptron_ops: ops.accumulations,
            baseline_ops,
        })
    }

    /// Runs every grid point in order; point `k` uses substream index `k`.
    pub fn sweep(&self, grid: &[f64], trials: u64, seed: u64) -> Result<Vec<CurvePoint>> {
        grid.iter()
            .enumerate()
            .map(|(k, &b)| self.run_point(b, trials, seed, k as u64))
            .collect()
    }
}

/// Reliability at distortion `b` for a weight network trained with index keys.
pub fn run_point(
    net: &HebbNetwork,
    patterns: &[QPattern],
    b: f64,
    trials: u64,
    seed: u64,
) -> Result<CurvePoint> {
    let keys = KeyScheme::Index.assign(net.dims())?;
    Harness::new(Box::new(net.clone()), patterns, keys)?.run_point(b, trials, seed, 0)
}

/// Full description of a synthetic sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pattern_len: usize,
    pub pattern_count: u64,
    pub q: u32,
    pub key_len: Option<usize>,
    pub b_start: f64,
    pub b_end: f64,
    pub steps: usize,
    pub trials: u64,
    pub seed: u64,
    pub engine: Engine,
    pub baseline: bool,
    pub noise: NoiseModel,
    pub keys: KeyScheme,
    pub exclude_diagonal: bool,
}

impl ExperimentConfig {
    pub fn new(pattern_len: usize, pattern_count: u64, q: u32) -> Self {
        Self {
            pattern_len,
            pattern_count,
            q,
            key_len: None,
            b_start: 0.0,
            b_end: 0.0,
            steps: 1,
            trials: 1000,
            seed: 0,
            engine: Engine::Weights,
            baseline: true,
            noise: NoiseModel::DistinctColor,
            keys: KeyScheme::Index,
            exclude_diagonal: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(QvamError::InvalidDimensions(
                "steps must be at least 1".into(),
            ));
        }
        if self.trials < 1 {
            return Err(QvamError::InvalidDimensions(
                "trials must be at least 1".into(),
            ));
        }
        for b in [self.b_start, self.b_end] {
            if !(0.0..=1.0).contains(&b) {
                return Err(QvamError::InvalidDistortion(b));
            }
        }
        if self.b_start > self.b_end {
            return Err(QvamError::InvalidDimensions(format!(
                "b grid runs backwards ({} > {})",
                self.b_start, self.b_end
            )));
        }
        match self.key_len {
            Some(n) => Dimensions::with_key_len(self.pattern_len, self.pattern_count, self.q, n)?,
            None => Dimensions::new(self.pattern_len, self.pattern_count, self.q)?,
        };
        Ok(())
    }

    /// Uniform grid from `b_start` to `b_end` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.b_start];
        }
        let span = self.b_end - self.b_start;
        (0..self.steps)
            .map(|k| self.b_start + span * k as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn patterns(&self) -> Result<Vec<QPattern>> {
        random_patterns(self.pattern_len, self.q, self.pattern_count, self.seed)
    }

    pub fn harness<'a>(&self, patterns: &'a [QPattern]) -> Result<Harness<'a>> {
        let options = TrainOptions {
            exclude_diagonal: self.exclude_diagonal,
        };
        Ok(
            Harness::build(patterns, self.key_len, self.keys, self.engine, options)?
                .with_noise_model(self.noise)
                .with_baseline(self.baseline),
        )
    }
}

/// Generates the configured pattern set and sweeps it.
pub fn sweep_noise(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let patterns = cfg.patterns()?;
    sweep_noise_on(cfg, &patterns)
}

/// Sweeps an existing pattern set; the configured shape fields are ignored.
pub fn sweep_noise_on(cfg: &ExperimentConfig, patterns: &[QPattern]) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    cfg.harness(patterns)?
        .sweep(&cfg.grid(), cfg.trials, cfg.seed)
}

/// One row of the engine comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub b: f64,
    pub perceptron_ops: u64,
    pub baseline_ops: u64,
    pub perceptron_median_ns: u64,
    pub baseline_median_ns: u64,
}

/// Operation counts and timings for the weight engine against the exhaustive scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineComparison {
    pub rows: Vec<ComparisonRow>,
}

impl EngineComparison {
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>8}  {:>14}  {:>14}  {:>12}  {:>12}  {}\n",
            "b", "perceptron_ops", "baseline_ops", "percep_ns", "scan_ns", "stack_search"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>8.3}  {:>14}  {:>14}  {:>12}  {:>12}  not implemented (no published specification)\n",
                r.b, r.perceptron_ops, r.baseline_ops, r.perceptron_median_ns, r.baseline_median_ns
            ));
        }
        s
    }
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Instrumented counts and median wall-clock per probe at each grid point.
///
/// Timing uses at most 101 probes per point; the counts are exact.
pub fn compare_engines(cfg: &ExperimentConfig) -> Result<EngineComparison> {
    cfg.validate()?;
    let patterns = cfg.patterns()?;
    let harness = ExperimentConfig {
        engine: Engine::Weights,
        ..cfg.clone()
    }
    .harness(&patterns)?;
    let probes = cfg.trials.min(101);
    let rows = cfg
        .grid()
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            let mut perceptron_ops = None;
            let mut baseline_ops = None;
            let mut t_percep = Vec::with_capacity(probes as usize);
            let mut t_scan = Vec::with_capacity(probes as usize);
            for t in 0..probes {
                let (_, probe) = harness.probe(cfg.seed, b, k as u64, t);
                let start = Instant::now();
                let (_, ops) = harness.engine().identify_counted(&probe)?;
                t_percep.push(start.elapsed().as_nanos() as u64);
                let start = Instant::now();
                let scan = baseline_scan_identify(&patterns, &probe)?;
                t_scan.push(start.elapsed().as_nanos() as u64);
                perceptron_ops.get_or_insert(ops.accumulations);
                baseline_ops.get_or_insert(scan.comparisons);
            }
            Ok(ComparisonRow {
                b,
                perceptron_ops: perceptron_ops.unwrap_or(0),
                baseline_ops: baseline_ops.unwrap_or(0),
                perceptron_median_ns: median(t_percep),
                baseline_median_ns: median(t_scan),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EngineComparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_closed_form() {
        // p = 0.9, n = 100: z/(1+z²/n) * sqrt(p(1-p)/n + z²/(4n²))
        let z = Z95;
        let expect = z / (1.0 + z * z / 100.0) * (0.09 / 100.0 + z * z / 40000.0).sqrt();
        assert!((wilson_halfwidth(90, 100) - expect).abs() < 1e-15);
        assert!(wilson_halfwidth(100, 100) > 0.0);
    }

    #[test]
    fn grid_shapes() {
        let mut cfg = ExperimentConfig::new(10, 4, 4);
        cfg.b_start = 0.2;
        assert_eq!(cfg.grid(), vec![0.2]);
        cfg.b_start = 0.0;
        cfg.b_end = 0.95;
        cfg.steps = 20;
        let g = cfg.grid();
        assert_eq!(g.len(), 20);
        assert!((g[19] - 0.95).abs() < 1e-15 && (g[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(10, 4, 4);
        assert!(cfg.validate().is_ok());
        cfg.steps = 0;
        assert!(cfg.validate().is_err());
        cfg.steps = 2;
        cfg.b_start = 0.5;
        cfg.b_end = 0.4;
        assert!(cfg.validate().is_err());
        cfg.b_end = 1.5;
        assert!(cfg.validate().is_err());
        cfg.b_end = 0.6;
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_trial_counts_zero_or_one() {
        let mut cfg = ExperimentConfig::new(20, 30, 4);
        cfg.trials = 1;
        cfg.b_start = 0.6;
        cfg.b_end = 0.6;
        let pts = sweep_noise(&cfg).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].errors <= 1);
    }

    #[test]
    fn csv_formatting() {
        let p = CurvePoint {
            b: 0.05,
            trials: 10,
            errors: 1,
            reliability_measured: 0.9,
            reliability_theory: 1.0 / 3.0,
            wilson_halfwidth: 0.125,
            theory_in_regime: true,
            perceptron_ops: 2400,
            baseline_ops: 20000,
        };
        assert_eq!(
            p.csv_row(),
            "0.050000,10,1,0.900000,0.333333,0.125000,2400,20000"
        );
        let mut buf = Vec::new();
        write_csv(&mut buf, &[p]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(CSV_HEADER));
    }

    #[test]
    fn comparison_table_marks_stack_column() {
        let mut cfg = ExperimentConfig::new(16, 10, 4);
        cfg.trials = 3;
        let cmp = compare_engines(&cfg).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].baseline_ops, 160);
        assert!(cmp.to_table().contains("not implemented"));
    }
}
