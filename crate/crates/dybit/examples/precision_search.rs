//! Runs both mixed-precision search strategies on a toy model and
//! gap-checks the greedy results against the exhaustive oracle.
//!
//! ```bash
//! cargo run --example precision_search
//! ```

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dybit::latency::{HwConfig, LayerShape};
use dybit::quant::TensorF32;
use dybit::search::{
    exhaustive_search, search_rmse_constrained, search_speedup_constrained, LayerTensors,
    ModelTensors, SearchConstraint, SearchResult,
};

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            ((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()) as f32
        })
        .collect()
}

fn summarize(label: &str, r: &SearchResult) {
    println!("{label}:");
    for l in &r.layers {
        println!("  {:<4} {}w{}a  {:>9} cycles  rmse {:.5}", l.name, l.w_bits, l.a_bits, l.cycles, l.rmse);
    }
    println!(
        "  speedup {:.3}x, rmse ratio {:.3}, {} steps in {} iterations",
        r.speedup_ratio,
        r.rmse_ratio,
        r.trace.len(),
        r.iterations
    );
    for s in &r.trace {
        println!(
            "    iter {}: {} {:?} {} -> {}  (speedup {:.3}, rmse ratio {:.3})",
            s.iteration, s.layer, s.target, s.from_bits, s.to_bits, s.speedup_ratio, s.rmse_ratio
        );
    }
    println!();
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dims = [(128u64, 64u64, 96u64), (64, 128, 64), (96, 96, 48)];
    let mut layers = Vec::new();
    let mut tensors = ModelTensors::default();
    for (i, &(m, n, k)) in dims.iter().enumerate() {
        layers.push(LayerShape::new(format!("l{i}"), m, n, k).unwrap());
        tensors.layers.push(LayerTensors {
            weights: TensorF32::from_vec(gaussian(&mut rng, 1024)).unwrap(),
            calibration: TensorF32::from_vec(
                gaussian(&mut rng, 1024).into_iter().map(f32::abs).collect(),
            )
            .unwrap(),
            signed_activations: false,
        });
    }
    let hw = HwConfig {
        array_dim: 16,
        if_buffer_bytes: 256 << 10,
        w_buffer_bytes: 256 << 10,
        of_buffer_bytes: 1 << 20,
        dram_bandwidth_bytes_per_cycle: 1e6,
        frequency_mhz: 200.0,
    };

    // Strategy 1: hit a 3x speedup floor with the least added error.
    let alpha = 3.0;
    let fast = search_speedup_constrained(&layers, &hw, &tensors, alpha, 2).unwrap();
    summarize(&format!("speedup-constrained (alpha = {alpha})"), &fast);

    // Strategy 2: stay within 1.5x of the baseline error, run as fast as
    // that allows.
    let beta = 1.5;
    let accurate = search_rmse_constrained(&layers, &hw, &tensors, beta, 2).unwrap();
    summarize(&format!("error-constrained (beta = {beta})"), &accurate);

    // The greedy searches walk 9^3 = 729 points' worth of space in a
    // handful of steps; the oracle enumerates all of them.
    let oracle = exhaustive_search(
        &layers,
        &hw,
        &tensors,
        &SearchConstraint::Speedup { alpha, top_k: 2 },
    )
    .unwrap();
    println!(
        "oracle over {} assignments: rmse ratio {:.3} (greedy reached {:.3}, gap {:.1}%)",
        oracle.iterations,
        oracle.rmse_ratio,
        fast.rmse_ratio,
        100.0 * (fast.total_rmse - oracle.total_rmse) / oracle.total_rmse
    );
}
