//! Analytical tile-level latency model of the systolic-array accelerator.
//!
//! The array is a fixed `N x N` grid of mixed-precision PEs. Running at
//! `P1 x P2`-bit precision fuses multiple multiplies per PE, which scales
//! the array to an effective `(8/P1)N x (8/P2)N` grid; data still flows
//! through the physical `N x N` fabric, so pipeline fill/drain stays
//! `2N - 1` cycles regardless of mode.
//!
//! A GEMM layer is covered by rectangular tiles sized to fit the input
//! feature, weight, and output feature buffers. Each tile streams its K
//! extent through the array (output stationary, partial sums held in the
//! output buffer as f32), while DRAM transfers overlap compute under
//! double buffering, so a tile costs `max(compute, transfer)` cycles. The
//! per-layer latency is the minimum over the enumerated tiling schedules
//! of the summed tile costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pe::PrecisionMode;

/// Partial sums are kept in f32 while a tile accumulates.
pub const OF_BITS_PER_ELEMENT: u64 = 32;

/// Accelerator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HwConfig {
    /// PEs per side of the physical array (at 8x8-bit mode).
    pub array_dim: u64,
    pub if_buffer_bytes: u64,
    pub w_buffer_bytes: u64,
    pub of_buffer_bytes: u64,
    pub dram_bandwidth_bytes_per_cycle: f64,
    /// Clock, used only to convert cycle counts for reporting.
    pub frequency_mhz: f64,
}

impl HwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.array_dim == 0
            || self.if_buffer_bytes == 0
            || self.w_buffer_bytes == 0
            || self.of_buffer_bytes == 0
        {
            return Err(Error::InvalidInput(
                "array dimension and buffer sizes must be positive".into(),
            ));
        }
        if !self.dram_bandwidth_bytes_per_cycle.is_finite()
            || self.dram_bandwidth_bytes_per_cycle <= 0.0
        {
            return Err(Error::InvalidInput("dram bandwidth must be positive".into()));
        }
        if !self.frequency_mhz.is_finite() || self.frequency_mhz <= 0.0 {
            return Err(Error::InvalidInput("frequency must be positive".into()));
        }
        Ok(())
    }

    /// Cycle count converted to milliseconds at the configured clock.
    pub fn cycles_to_ms(&self, cycles: u64) -> f64 {
        cycles as f64 / (self.frequency_mhz * 1e3)
    }
}

/// GEMM-equivalent dimensions of one layer (convolutions are lowered
/// before they reach the simulator).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub gemm_m: u64,
    pub gemm_n: u64,
    pub gemm_k: u64,
}

impl LayerShape {
    pub fn new(name: impl Into<String>, m: u64, n: u64, k: u64) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(Error::InvalidInput(format!(
                "layer dimensions must be positive, got ({m}, {n}, {k})"
            )));
        }
        Ok(LayerShape { name: name.into(), gemm_m: m, gemm_n: n, gemm_k: k })
    }
}

/// One tile of a GEMM cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tiling {
    pub tile_m: u64,
    pub tile_n: u64,
    pub tile_k: u64,
}

impl Tiling {
    fn volume(&self) -> u128 {
        self.tile_m as u128 * self.tile_n as u128 * self.tile_k as u128
    }
}

/// Per-layer latency outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLatency {
    pub name: String,
    pub w_bits: u32,
    pub a_bits: u32,
    pub cycles: u64,
    pub tiling: Tiling,
}

/// Whole-model latency outcome; layers appear in model order and the total
/// is their serialized sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub layers: Vec<LayerLatency>,
    pub total_cycles: u64,
}

/// Virtual array dimensions in the given mode: `(8/a_bits)N` rows (the
/// activation side) by `(8/w_bits)N` columns (the weight side).
pub fn effective_array(hw: &HwConfig, mode: PrecisionMode) -> (u64, u64) {
    (
        (8 / mode.a_bits) as u64 * hw.array_dim,
        (8 / mode.w_bits) as u64 * hw.array_dim,
    )
}

fn tile_bits(tile: &Tiling, mode: PrecisionMode) -> (u64, u64, u64) {
    let if_bits = tile.tile_m * tile.tile_k * mode.a_bits as u64;
    let w_bits = tile.tile_k * tile.tile_n * mode.w_bits as u64;
    let of_bits = tile.tile_m * tile.tile_n * OF_BITS_PER_ELEMENT;
    (if_bits, w_bits, of_bits)
}

/// Whether a tile's three footprints fit the three buffers at the mode's
/// bits per element.
pub fn tile_fits(tile: &Tiling, hw: &HwConfig, mode: PrecisionMode) -> bool {
    let (if_bits, w_bits, of_bits) = tile_bits(tile, mode);
    if_bits <= hw.if_buffer_bytes * 8
        && w_bits <= hw.w_buffer_bytes * 8
        && of_bits <= hw.of_buffer_bytes * 8
}

/// Candidate edge lengths for one dimension: multiples of the physical
/// array dimension, clamped to the layer extent. The physical dimension
/// divides every effective dimension, so the grid is alignment-compatible
/// with every mode.
fn dim_candidates(extent: u64, array_dim: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = array_dim;
    while c < extent {
        out.push(c);
        c += array_dim;
    }
    out.push(extent);
    out
}

/// All buffer-feasible tilings of a layer in the given mode, smallest
/// first along each dimension. Errors when even the minimal tile exceeds a
/// buffer.
pub fn enumerate_tilings(
    layer: &LayerShape,
    hw: &HwConfig,
    mode: PrecisionMode,
) -> Result<Vec<Tiling>> {
    hw.validate()?;
    let cand_m = dim_candidates(layer.gemm_m, hw.array_dim);
    let cand_n = dim_candidates(layer.gemm_n, hw.array_dim);
    let cand_k = dim_candidates(layer.gemm_k, hw.array_dim);

    let mut out = Vec::new();
    for &tm in &cand_m {
        // Footprints grow monotonically with each tile dimension, so once
        // the smallest companion dims overflow there is nothing larger to
        // find.
        let probe = Tiling { tile_m: tm, tile_n: cand_n[0], tile_k: cand_k[0] };
        let (if_bits, _, of_bits) = tile_bits(&probe, mode);
        if if_bits > hw.if_buffer_bytes * 8 || of_bits > hw.of_buffer_bytes * 8 {
            break;
        }
        for &tk in &cand_k {
            let probe = Tiling { tile_m: tm, tile_n: cand_n[0], tile_k: tk };
            let (if_bits, w_bits, _) = tile_bits(&probe, mode);
            if if_bits > hw.if_buffer_bytes * 8 || w_bits > hw.w_buffer_bytes * 8 {
                break;
            }
            for &tn in &cand_n {
                let tile = Tiling { tile_m: tm, tile_n: tn, tile_k: tk };
                if !tile_fits(&tile, hw, mode) {
                    break;
                }
                out.push(tile);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Capacity {
            layer: layer.name.clone(),
            detail: format!(
                "no tiling fits buffers (if={}, w={}, of={} bytes) at mode {}",
                hw.if_buffer_bytes, hw.w_buffer_bytes, hw.of_buffer_bytes, mode
            ),
        });
    }
    Ok(out)
}

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Cycles for one tile: output-stationary compute streams the tile's K
/// extent through the array once per effective-array pass, paying the
/// physical pipeline fill/drain each pass; DRAM traffic overlaps compute
/// under double buffering, so the tile costs whichever side dominates.
pub fn tile_latency(tile: &Tiling, hw: &HwConfig, mode: PrecisionMode) -> Result<u64> {
    hw.validate()?;
    if tile.tile_m == 0 || tile.tile_n == 0 || tile.tile_k == 0 {
        return Err(Error::InvalidValue("tile dimensions must be positive".into()));
    }
    if !tile_fits(tile, hw, mode) {
        return Err(Error::InvalidValue(format!(
            "tile {}x{}x{} exceeds buffer capacity at mode {}",
            tile.tile_m, tile.tile_n, tile.tile_k, mode
        )));
    }
    let (rows, cols) = effective_array(hw, mode);
    let fill_drain = 2 * hw.array_dim - 1;
    let compute = div_ceil(tile.tile_m, rows)
        * div_ceil(tile.tile_n, cols)
        * (tile.tile_k + fill_drain);

    let (if_bits, w_bits, of_bits) = tile_bits(tile, mode);
    let bytes = (if_bits + w_bits + of_bits) as f64 / 8.0;
    let transfer = (bytes / hw.dram_bandwidth_bytes_per_cycle).ceil() as u64;

    Ok(compute.max(transfer))
}

/// Summed tile cost of covering the layer with a uniform tiling,
/// remainder blocks included at their actual (smaller) sizes.
fn cover_cycles(
    layer: &LayerShape,
    tiling: &Tiling,
    hw: &HwConfig,
    mode: PrecisionMode,
) -> Result<u64> {
    let splits = |extent: u64, tile: u64| {
        let mut parts = vec![(tile, extent / tile)];
        if !extent.is_multiple_of(tile) {
            parts.push((extent % tile, 1));
        }
        parts
    };
    let mut total: u64 = 0;
    for &(sm, cm) in &splits(layer.gemm_m, tiling.tile_m) {
        for &(sn, cn) in &splits(layer.gemm_n, tiling.tile_n) {
            for &(sk, ck) in &splits(layer.gemm_k, tiling.tile_k) {
                if cm == 0 || cn == 0 || ck == 0 {
                    continue;
                }
                let block = Tiling { tile_m: sm, tile_n: sn, tile_k: sk };
                total += cm * cn * ck * tile_latency(&block, hw, mode)?;
            }
        }
    }
    Ok(total)
}

/// True when `(cost, tiling)` should replace the current best under the
/// deterministic tie rule: lower cost, then larger tile volume, then
/// lexicographically smaller dimensions.
fn improves(cost: u64, tiling: &Tiling, best: &Option<(u64, Tiling)>) -> bool {
    match best {
        None => true,
        Some((bc, bt)) => {
            cost < *bc
                || (cost == *bc && tiling.volume() > bt.volume())
                || (cost == *bc
                    && tiling.volume() == bt.volume()
                    && (tiling.tile_m, tiling.tile_n, tiling.tile_k)
                        < (bt.tile_m, bt.tile_n, bt.tile_k))
        }
    }
}

/// Optimal latency of one layer in one mode: the minimum summed tile cost
/// over all enumerated tilings, with the tie rule making the result
/// independent of enumeration order.
pub fn layer_latency(
    layer: &LayerShape,
    mode: PrecisionMode,
    hw: &HwConfig,
) -> Result<(u64, Tiling)> {
    let mut best: Option<(u64, Tiling)> = None;
    for tiling in enumerate_tilings(layer, hw, mode)? {
        let cost = cover_cycles(layer, &tiling, hw, mode)?;
        if improves(cost, &tiling, &best) {
            best = Some((cost, tiling));
        }
    }
    Ok(best.expect("enumerate_tilings guarantees at least one tiling"))
}

/// Per-layer latencies at each layer's assigned mode; layers execute
/// serially, so the total is the sum.
pub fn model_latency(
    layers: &[LayerShape],
    modes: &[PrecisionMode],
    hw: &HwConfig,
) -> Result<LatencyReport> {
    if layers.len() != modes.len() {
        return Err(Error::InvalidInput(format!(
            "{} layers but {} mode assignments",
            layers.len(),
            modes.len()
        )));
    }
    let mut entries = Vec::with_capacity(layers.len());
    let mut total: u64 = 0;
    for (layer, &mode) in layers.iter().zip(modes) {
        let (cycles, tiling) = layer_latency(layer, mode, hw)?;
        total += cycles;
        entries.push(LayerLatency {
            name: layer.name.clone(),
            w_bits: mode.w_bits,
            a_bits: mode.a_bits,
            cycles,
            tiling,
        });
    }
    Ok(LatencyReport { layers: entries, total_cycles: total })
}
