//! q-valued vector perceptron associative memory.
//!
//! Patterns are length-`N` strings over `q` colors; each stored pattern is
//! bound to an `n`-digit base-`q` key. Training accumulates Hebbian count
//! blocks, recall computes one local field per key digit and picks the
//! strongest color, and the decoded digits name the stored pattern.
//!
//! ```
//! use qvam_core::{HebbNetwork, QPattern, Recall};
//!
//! let patterns = vec![
//!     QPattern::new(vec![0, 1, 2, 3, 0, 1], 4).unwrap(),
//!     QPattern::new(vec![3, 2, 1, 0, 3, 2], 4).unwrap(),
//! ];
//! let net = HebbNetwork::train_indexed(&patterns).unwrap();
//! let id = net.identify(&patterns[1]).unwrap();
//! assert_eq!(id.index, 1);
//! assert!(id.valid);
//! ```

pub mod analysis;
pub mod codec;
pub mod error;
pub mod experiment;
pub mod format;
pub mod memory;

pub use analysis::{
    capacity, critical_distortion, effective_dim, error_probability, max_output_neurons, op_counts,
    ErrorEstimate, Estimate, OpCounts, OutputLayerSize, TheoryInput,
};
pub use codec::{
    decode_key, encode_key, map_binary, required_digits, unmap_binary, BinaryVector, Dimensions,
    KeyScheme, KeyVector, QPattern, QSymbol,
};
pub use error::{QvamError, Result};
pub use experiment::{
    baseline_scan_identify, compare_engines, random_patterns, run_point, sweep_noise,
    sweep_noise_on, CurvePoint, Engine, EngineComparison, ExperimentConfig, Harness, NoiseModel,
    NoiseSpec, ScanResult,
};
pub use memory::{
    oracle_identify, oracle_identify_with, overlap, FieldVector, HebbNetwork, Identification,
    MatrixFreeMemory, OpCount, Recall, TrainOptions, WeightBlock,
};
