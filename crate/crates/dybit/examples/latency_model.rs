//! Models per-layer inference latency on the systolic array across
//! precision modes and shows the effective-array scaling, chosen tiling
//! schedules, and speedups over the 8/8 baseline.
//!
//! ```bash
//! cargo run --example latency_model
//! ```

use dybit::latency::{effective_array, layer_latency, model_latency, HwConfig, LayerShape};
use dybit::pe::PrecisionMode;

fn main() {
    let hw = HwConfig {
        array_dim: 16,
        if_buffer_bytes: 64 << 10,
        w_buffer_bytes: 64 << 10,
        of_buffer_bytes: 256 << 10,
        dram_bandwidth_bytes_per_cycle: 64.0,
        frequency_mhz: 200.0,
    };

    let layer = LayerShape::new("conv3x3_128", 784, 128, 1152).unwrap();
    println!(
        "layer {}: GEMM {} x {} x {} on a {}x{} array",
        layer.name, layer.gemm_m, layer.gemm_n, layer.gemm_k, hw.array_dim, hw.array_dim
    );
    println!();
    println!(
        "{:<6} {:>10} {:>12} {:>20} {:>9}",
        "mode", "effective", "cycles", "tiling (m,n,k)", "speedup"
    );

    let base = layer_latency(&layer, PrecisionMode::new(8, 8).unwrap(), &hw).unwrap().0;
    for (a, w) in [(8, 8), (8, 4), (4, 4), (2, 4), (2, 2)] {
        let mode = PrecisionMode::new(a, w).unwrap();
        let (rows, cols) = effective_array(&hw, mode);
        let (cycles, tiling) = layer_latency(&layer, mode, &hw).unwrap();
        println!(
            "{:<6} {:>10} {:>12} {:>20} {:>8.2}x",
            mode.to_string(),
            format!("{rows}x{cols}"),
            cycles,
            format!("({}, {}, {})", tiling.tile_m, tiling.tile_n, tiling.tile_k),
            base as f64 / cycles as f64
        );
    }
    println!();

    // A small model end to end: per-layer modes and the serialized total.
    let layers = vec![
        LayerShape::new("stem", 12544, 64, 147).unwrap(),
        LayerShape::new("body", 3136, 64, 576).unwrap(),
        LayerShape::new("head", 1, 1000, 512).unwrap(),
    ];
    let modes = vec![
        PrecisionMode::new(8, 8).unwrap(),
        PrecisionMode::new(4, 4).unwrap(),
        PrecisionMode::new(8, 4).unwrap(),
    ];
    let report = model_latency(&layers, &modes, &hw).unwrap();
    println!("mixed-precision model:");
    for l in &report.layers {
        println!("  {:<6} {}w{}a {:>12} cycles", l.name, l.w_bits, l.a_bits, l.cycles);
    }
    println!(
        "  total {} cycles = {:.4} ms at {} MHz",
        report.total_cycles,
        hw.cycles_to_ms(report.total_cycles),
        hw.frequency_mhz
    );
}
