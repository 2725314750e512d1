//! Shows the on-disk formats end to end: write a model descriptor, tensor
//! manifest with raw blobs, hardware config, and assignment; load them
//! back; simulate; and save the report files the CLI would emit.
//!
//! ```bash
//! cargo run --example model_roundtrip
//! ```

use std::fs;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dybit::io;
use dybit::latency::{model_latency, HwConfig, LayerShape};
use dybit::quant::TensorF32;
use dybit::search::QuantAssignment;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // Tensor blobs + manifest. Blob paths are relative to the manifest.
    let mut manifest = io::TensorManifest::new(root);
    for (id, elems) in [("w0", 64 * 32), ("c0", 256), ("w1", 32 * 16), ("c1", 256)] {
        let data: Vec<f32> = (0..elems).map(|_| rng.gen_range(-1.0..1.0)).collect();
        manifest.add_tensor(id, &TensorF32::from_vec(data).unwrap()).unwrap();
    }
    let manifest_path = root.join("tensors.json");
    manifest.save(&manifest_path).unwrap();

    // Model descriptor: one plain GEMM, one convolution that gets lowered
    // to GEMM dims at load time.
    let descriptor = serde_json::json!({
        "name": "demo",
        "layers": [
            {"kind": "gemm", "name": "fc", "m": 32, "n": 32, "k": 64,
             "weights": "w0", "calibration": "c0"},
            {"kind": "conv", "name": "conv", "c_in": 8, "c_out": 16,
             "kernel_h": 2, "kernel_w": 2, "out_h": 4, "out_w": 4, "batch": 2,
             "weights": "w1", "calibration": "c1"}
        ]
    });
    let model_path = root.join("model.json");
    fs::write(&model_path, serde_json::to_string_pretty(&descriptor).unwrap()).unwrap();

    let hw = HwConfig {
        array_dim: 8,
        if_buffer_bytes: 64 << 10,
        w_buffer_bytes: 64 << 10,
        of_buffer_bytes: 256 << 10,
        dram_bandwidth_bytes_per_cycle: 32.0,
        frequency_mhz: 100.0,
    };
    let hw_path = root.join("hw.json");
    io::save_hw_config(&hw, &hw_path).unwrap();

    // Load everything back.
    let manifest = io::load_manifest(&manifest_path).unwrap();
    let graph = io::load_model(&model_path, &manifest).unwrap();
    println!("loaded model '{}':", graph.name);
    for layer in &graph.layers {
        let LayerShape { name, gemm_m, gemm_n, gemm_k } = &layer.shape;
        println!("  {name}: GEMM {gemm_m} x {gemm_n} x {gemm_k} (weights '{}')", layer.weights_id);
    }

    let assignment = QuantAssignment::uniform(graph.layers.len(), 4, 8).unwrap();
    let assign_path = root.join("assign.json");
    io::save_assignment(&graph, &assignment, &assign_path).unwrap();
    let assignment = io::load_assignment(&assign_path, &graph).unwrap();

    let report = model_latency(&graph.shapes(), assignment.modes(), &hw).unwrap();
    io::save_latency_report(&report, &root.join("report.json")).unwrap();
    io::save_latency_csv(&report, &root.join("report.csv")).unwrap();
    println!();
    println!("simulated at 4w8a: {} cycles total", report.total_cycles);

    // Round trip is identity.
    assert_eq!(io::load_latency_report(&root.join("report.json")).unwrap(), report);

    println!();
    println!("files written:");
    let mut names: Vec<String> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }
    println!();
    println!("report.csv:");
    print!("{}", fs::read_to_string(root.join("report.csv")).unwrap());
}
