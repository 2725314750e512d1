//! Adaptive variable-length number format for low-bit neural network
//! inference, with the surrounding toolchain: tensor quantization, a
//! bit-exact emulator of the mixed-precision hardware datapath, a
//! tile-level latency model of the systolic-array accelerator, and a
//! layer-wise mixed-precision search.
//!
//! A code word is a sign bit (optional) followed by a run-length coded
//! magnitude: the count of leading 1s picks the binade, the remaining bits
//! are mantissa. Precision tapers as magnitude grows, which matches the
//! bell-shaped tensor distributions of trained networks far better than a
//! uniform integer grid at the same width.
//!
//! # Modules
//!
//! - [`format`] — code spaces, decode/encode, value enumeration, nearest-value
//!   scalar quantization
//! - [`quant`] — per-tensor scaling, (fake-)quantization, the normalized RMSE
//!   metric
//! - [`pe`] — functional model of the datapath: LOD decoder, write-back
//!   encoder, fused 2-bit-slice multiplier, exponent adder, exact MAC
//! - [`latency`] — systolic-array latency model with tiling-schedule
//!   enumeration and per-layer optimal latency
//! - [`search`] — speedup-constrained and error-constrained greedy searches
//!   plus an exhaustive oracle for small models
//! - [`io`] — model descriptors, tensor manifests and blobs, hardware
//!   configs, assignments, reports
//! - [`cli`] — the `dybit` binary: `table`, `quantize`, `simulate`, `search`
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example value_table        # print code tables, show tapering
//! cargo run --example quantize_tensor    # tensor quantization + error vs INT4
//! cargo run --example datapath_mac       # decoder/multiplier/MAC walkthrough
//! cargo run --example latency_model      # per-mode latency of sample layers
//! cargo run --example precision_search   # both search strategies on a toy model
//! cargo run --example model_roundtrip    # file formats end to end
//! ```
//!
//! # Quick start
//!
//! ```
//! use dybit::format::FormatSpec;
//! use dybit::quant::{fake_quantize, rmse, TensorF32};
//!
//! let spec = FormatSpec::signed(4).unwrap();
//! let t = TensorF32::from_vec(vec![0.1, -0.4, 0.9, 2.0]).unwrap();
//! let q = fake_quantize(&t, &spec).unwrap();
//! let err = rmse(&t, &q).unwrap();
//! assert!(err.rmse < 0.2);
//! ```

pub mod cli;
pub mod error;
pub mod format;
pub mod io;
pub mod latency;
pub mod pe;
pub mod quant;
pub mod search;

pub use error::{Error, Result};
pub use format::{DecodedFields, DyBitCode, FormatSpec};
pub use latency::{HwConfig, LatencyReport, LayerShape, Tiling};
pub use pe::{HwDecoded, PrecisionMode};
pub use quant::{QuantMetrics, QuantizedTensor, TensorF32};
pub use search::{QuantAssignment, SearchConstraint, SearchResult};
