//! Quantizes a synthetic weight tensor at 8, 4, and 2 bits and compares
//! the normalized error against a max-scaled symmetric integer quantizer
//! of the same width.
//!
//! ```bash
//! cargo run --example quantize_tensor
//! ```

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dybit::format::FormatSpec;
use dybit::quant::{compute_scale, fake_quantize, rmse, tensor_stats, TensorF32};

fn gaussian(seed: u64, n: usize) -> TensorF32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            ((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()) as f32
        })
        .collect();
    TensorF32::from_vec(data).unwrap()
}

/// Uniform-grid baseline: symmetric integer quantizer with max scaling.
fn int_fake_quantize(t: &TensorF32, bits: u32) -> TensorF32 {
    let qmax = f64::from((1i32 << (bits - 1)) - 1);
    let max_abs = t.data().iter().map(|v| f64::from(v.abs())).fold(0.0, f64::max);
    let scale = max_abs / qmax;
    let data = t
        .data()
        .iter()
        .map(|&v| ((f64::from(v) / scale).round().clamp(-qmax, qmax) * scale) as f32)
        .collect();
    TensorF32::new(t.shape().to_vec(), data).unwrap()
}

fn main() {
    let t = gaussian(42, 10_000);
    let (mean, std, max_abs) = tensor_stats(&t);
    println!("tensor: n={} mean={mean:.4} std={std:.4} max|x|={max_abs:.4}", t.len());
    println!();

    println!("{:<10} {:>12} {:>12}", "width", "rmse", "int rmse");
    for bits in [8u32, 4, 2] {
        let spec = FormatSpec::signed(bits).unwrap();
        let adaptive = rmse(&t, &fake_quantize(&t, &spec).unwrap()).unwrap().rmse;
        let uniform = rmse(&t, &int_fake_quantize(&t, bits)).unwrap().rmse;
        println!("{:<10} {:>12.6} {:>12.6}", format!("{bits}-bit"), adaptive, uniform);
    }
    println!();

    // The max-magnitude element always round-trips exactly under the
    // max-scaling rule: it maps onto the largest code.
    let spec = FormatSpec::signed(4).unwrap();
    let scale = compute_scale(&t, &spec).unwrap();
    let out = fake_quantize(&t, &spec).unwrap();
    let idx = t.data().iter().position(|v| f64::from(v.abs()) == max_abs).unwrap();
    println!(
        "scale = max|x| / max_code = {max_abs:.4} / {} = {scale:.6}",
        spec.max_value()
    );
    println!(
        "max element round-trips exactly: {} -> {}",
        t.data()[idx],
        out.data()[idx]
    );
}
