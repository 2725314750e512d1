//! Shared fixtures for the integration suites: seeded synthetic tensors,
//! toy models, hardware configs, and the integer-quantizer comparison
//! oracle.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dybit::latency::{HwConfig, LayerShape};
use dybit::quant::TensorF32;
use dybit::search::{LayerTensors, ModelTensors};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_f32(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            ((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()) as f32
        })
        .collect()
}

pub fn laplacian_f32(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(-0.5 + 1e-12..0.5);
            (-u.signum() * (1.0 - 2.0 * u.abs()).ln()) as f32
        })
        .collect()
}

/// Magnitudes only, shaped like post-ReLU activations.
pub fn half_normal_f32(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    gaussian_f32(rng, n).into_iter().map(f32::abs).collect()
}

pub fn gaussian_tensor(seed: u64, n: usize) -> TensorF32 {
    TensorF32::from_vec(gaussian_f32(&mut rng(seed), n)).unwrap()
}

pub fn laplacian_tensor(seed: u64, n: usize) -> TensorF32 {
    TensorF32::from_vec(laplacian_f32(&mut rng(seed), n)).unwrap()
}

/// Layers plus per-layer synthetic tensors for search tests.
pub fn toy_model(seed: u64, dims: &[(u64, u64, u64)]) -> (Vec<LayerShape>, ModelTensors) {
    let mut r = rng(seed);
    let mut layers = Vec::new();
    let mut tensors = ModelTensors::default();
    for (i, &(m, n, k)) in dims.iter().enumerate() {
        layers.push(LayerShape::new(format!("l{i}"), m, n, k).unwrap());
        tensors.layers.push(LayerTensors {
            weights: TensorF32::from_vec(gaussian_f32(&mut r, 1024)).unwrap(),
            calibration: TensorF32::from_vec(half_normal_f32(&mut r, 1024)).unwrap(),
            signed_activations: false,
        });
    }
    (layers, tensors)
}

/// Generous buffers and effectively unlimited bandwidth.
pub fn ample_hw(array_dim: u64) -> HwConfig {
    HwConfig {
        array_dim,
        if_buffer_bytes: 1 << 20,
        w_buffer_bytes: 1 << 20,
        of_buffer_bytes: 1 << 22,
        dram_bandwidth_bytes_per_cycle: 1e12,
        frequency_mhz: 200.0,
    }
}

/// Buffers sized so large-GEMM tiling enumeration stays small while the
/// workload remains compute-bound.
pub fn capped_hw(array_dim: u64) -> HwConfig {
    HwConfig {
        array_dim,
        if_buffer_bytes: 32 << 10,
        w_buffer_bytes: 32 << 10,
        of_buffer_bytes: 128 << 10,
        dram_bandwidth_bytes_per_cycle: 1e9,
        frequency_mhz: 200.0,
    }
}

/// Max-scaled symmetric integer fake-quantizer: the uniform-grid baseline
/// the adaptive format is compared against. `scale = max|x| / (2^(b-1)-1)`,
/// values round to the nearest integer step and clamp to the grid.
pub fn int_symmetric_fake_quantize(t: &TensorF32, bits: u32) -> TensorF32 {
    let qmax = f64::from((1i32 << (bits - 1)) - 1);
    let max_abs = t.data().iter().map(|v| f64::from(v.abs())).fold(0.0f64, f64::max);
    if max_abs == 0.0 {
        return t.clone();
    }
    let scale = max_abs / qmax;
    let data: Vec<f32> = t
        .data()
        .iter()
        .map(|&v| {
            let q = (f64::from(v) / scale).round().clamp(-qmax, qmax);
            (q * scale) as f32
        })
        .collect();
    TensorF32::new(t.shape().to_vec(), data).unwrap()
}

/// ResNet18-shaped GEMM layer list (ImageNet input, convolutions lowered
/// by im2col, batch 1).
pub fn resnet18_layers() -> Vec<LayerShape> {
    let mut layers = Vec::new();
    let mut push = |name: &str, m: u64, n: u64, k: u64| {
        layers.push(LayerShape::new(name, m, n, k).unwrap());
    };
    push("conv1", 112 * 112, 64, 3 * 7 * 7);
    for b in 0..2 {
        push(&format!("layer1.{b}.conv1"), 56 * 56, 64, 64 * 9);
        push(&format!("layer1.{b}.conv2"), 56 * 56, 64, 64 * 9);
    }
    push("layer2.0.conv1", 28 * 28, 128, 64 * 9);
    push("layer2.0.conv2", 28 * 28, 128, 128 * 9);
    push("layer2.0.downsample", 28 * 28, 128, 64);
    push("layer2.1.conv1", 28 * 28, 128, 128 * 9);
    push("layer2.1.conv2", 28 * 28, 128, 128 * 9);
    push("layer3.0.conv1", 14 * 14, 256, 128 * 9);
    push("layer3.0.conv2", 14 * 14, 256, 256 * 9);
    push("layer3.0.downsample", 14 * 14, 256, 128);
    push("layer3.1.conv1", 14 * 14, 256, 256 * 9);
    push("layer3.1.conv2", 14 * 14, 256, 256 * 9);
    push("layer4.0.conv1", 7 * 7, 512, 256 * 9);
    push("layer4.0.conv2", 7 * 7, 512, 512 * 9);
    push("layer4.0.downsample", 7 * 7, 512, 256);
    push("layer4.1.conv1", 7 * 7, 512, 512 * 9);
    push("layer4.1.conv2", 7 * 7, 512, 512 * 9);
    push("fc", 1, 1000, 512);
    layers
}

/// Synthetic tensors for the ResNet18-shaped list, element counts capped so
/// the metric table builds quickly.
pub fn resnet18_tensors(seed: u64, layers: &[LayerShape]) -> ModelTensors {
    let mut r = rng(seed);
    let mut tensors = ModelTensors::default();
    for layer in layers {
        let w_elems = (layer.gemm_k * layer.gemm_n).min(16_384) as usize;
        tensors.layers.push(LayerTensors {
            weights: TensorF32::from_vec(gaussian_f32(&mut r, w_elems)).unwrap(),
            calibration: TensorF32::from_vec(half_normal_f32(&mut r, 4096)).unwrap(),
            signed_activations: false,
        });
    }
    tensors
}
