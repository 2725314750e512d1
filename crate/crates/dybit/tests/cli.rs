//! End-to-end tests of the `dybit` binary: exit codes, stdout contracts,
//! and byte-level determinism of emitted files.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dybit::io;
use dybit::latency::{layer_latency, HwConfig};
use dybit::pe::PrecisionMode;
use dybit::quant::TensorF32;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dybit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Builds a 3-layer model on disk: descriptor, manifest, blobs, hardware
/// config, and a uniform assignment. Returns the five file paths.
struct Fixture {
    model: PathBuf,
    tensors: PathBuf,
    hw: PathBuf,
    assign_88: PathBuf,
    assign_22: PathBuf,
}

fn fixture(dir: &Path) -> Fixture {
    let dims = [(64u64, 64u64, 64u64), (128, 64, 32), (32, 32, 96)];
    let mut manifest = io::TensorManifest::new(dir);
    let mut r = common::rng(0xc11);
    let mut layers = Vec::new();
    for (i, &(m, n, k)) in dims.iter().enumerate() {
        let w_id = format!("w{i}");
        let c_id = format!("c{i}");
        let weights =
            TensorF32::new(vec![k as usize, n as usize], common::gaussian_f32(&mut r, (k * n) as usize))
                .unwrap();
        let calib = TensorF32::from_vec(common::half_normal_f32(&mut r, 512)).unwrap();
        manifest.add_tensor(&w_id, &weights).unwrap();
        manifest.add_tensor(&c_id, &calib).unwrap();
        layers.push(dybit::io::ModelLayer {
            shape: dybit::latency::LayerShape::new(format!("l{i}"), m, n, k).unwrap(),
            weights_id: w_id,
            calibration_id: c_id,
            signed_activations: false,
        });
    }
    let tensors = dir.join("tensors.json");
    manifest.save(&tensors).unwrap();

    let graph = io::ModelGraph { name: "toy3".into(), source: None, layers };
    let model = dir.join("model.json");
    io::save_model(&graph, &model).unwrap();

    let hw_cfg = HwConfig {
        array_dim: 16,
        if_buffer_bytes: 1 << 20,
        w_buffer_bytes: 1 << 20,
        of_buffer_bytes: 1 << 22,
        dram_bandwidth_bytes_per_cycle: 1e6,
        frequency_mhz: 200.0,
    };
    let hw = dir.join("hw.json");
    io::save_hw_config(&hw_cfg, &hw).unwrap();

    let assign_88 = dir.join("assign88.json");
    io::save_assignment(
        &graph,
        &dybit::search::QuantAssignment::uniform(3, 8, 8).unwrap(),
        &assign_88,
    )
    .unwrap();
    let assign_22 = dir.join("assign22.json");
    io::save_assignment(
        &graph,
        &dybit::search::QuantAssignment::uniform(3, 2, 2).unwrap(),
        &assign_22,
    )
    .unwrap();

    Fixture { model, tensors, hw, assign_88, assign_22 }
}

#[test]
fn table_matches_reference_values() {
    let out = run(&["table", "--bits", "4", "--unsigned"]);
    assert!(out.status.success());
    let expected = "\
0000 0
0001 0.125
0010 0.25
0011 0.375
0100 0.5
0101 0.625
0110 0.75
0111 0.875
1000 1
1001 1.25
1010 1.5
1011 1.75
1100 2
1101 3
1110 4
1111 8
";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn table_two_bit_and_signed() {
    let out = run(&["table", "--bits", "2", "--unsigned"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "00 0\n01 0.5\n10 1\n11 2\n");

    let out = run(&["table", "--bits", "3", "--signed"]);
    assert!(out.status.success());
    // negative zero omitted: 7 rows
    assert_eq!(stdout(&out).lines().count(), 7);
}

#[test]
fn table_usage_errors_exit_2() {
    assert_eq!(run(&["table", "--bits", "9", "--unsigned"]).status.code(), Some(2));
    assert_eq!(run(&["table", "--bits", "4"]).status.code(), Some(2)); // sign flag required
    assert_eq!(run(&["table"]).status.code(), Some(2));
}

#[test]
fn quantize_writes_dumps_and_error_table() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let out_prefix = dir.path().join("q8");
    let out = run(&[
        "quantize",
        "--model",
        fx.model.to_str().unwrap(),
        "--tensors",
        fx.tensors.to_str().unwrap(),
        "--wbits",
        "8",
        "--abits",
        "8",
        "--out",
        out_prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let csv = fs::read_to_string(dir.path().join("q8.rmse.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3, "header plus one row per layer");

    // dumped codes round-trip through the index
    let index = io::load_quant_index(&dir.path().join("q8.quant.json")).unwrap();
    assert_eq!(index.layers.len(), 3);
    let q = io::load_quantized(&index.layers[0].weights, dir.path()).unwrap();
    assert_eq!(q.codes.len(), 64 * 64);

    // identical invocation produces identical bytes
    let out2_prefix = dir.path().join("q8b");
    let out2 = run(&[
        "quantize",
        "--model",
        fx.model.to_str().unwrap(),
        "--tensors",
        fx.tensors.to_str().unwrap(),
        "--wbits",
        "8",
        "--abits",
        "8",
        "--out",
        out2_prefix.to_str().unwrap(),
    ]);
    assert!(out2.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("q8.rmse.csv")).unwrap(),
        fs::read_to_string(dir.path().join("q8b.rmse.csv")).unwrap()
    );
}

#[test]
fn quantize_error_grows_as_width_shrinks() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let mut tables = Vec::new();
    for bits in ["8", "4"] {
        let prefix = dir.path().join(format!("q{bits}"));
        let out = run(&[
            "quantize",
            "--model",
            fx.model.to_str().unwrap(),
            "--tensors",
            fx.tensors.to_str().unwrap(),
            "--wbits",
            bits,
            "--abits",
            bits,
            "--out",
            prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let csv = fs::read_to_string(dir.path().join(format!("q{bits}.rmse.csv"))).unwrap();
        let rows: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                (cols[3].parse().unwrap(), cols[4].parse().unwrap())
            })
            .collect();
        tables.push(rows);
    }
    for (r8, r4) in tables[0].iter().zip(&tables[1]) {
        assert!(r4.0 >= r8.0, "weight rmse must not shrink at 4 bits");
        assert!(r4.1 >= r8.1, "activation rmse must not shrink at 4 bits");
    }
}

#[test]
fn quantize_missing_flag_exits_2() {
    assert_eq!(run(&["quantize", "--wbits", "8"]).status.code(), Some(2));
}

#[test]
fn simulate_single_layer_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let out = run(&[
        "simulate",
        "--model",
        fx.model.to_str().unwrap(),
        "--hw",
        fx.hw.to_str().unwrap(),
        "--assign",
        fx.assign_88.to_str().unwrap(),
        "--out",
        dir.path().join("sim").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let report = io::load_latency_report(&dir.path().join("sim.json")).unwrap();
    let hw = io::load_hw_config(&fx.hw).unwrap();
    let manifest = io::load_manifest(&fx.tensors).unwrap();
    let graph = io::load_model(&fx.model, &manifest).unwrap();
    for (entry, layer) in report.layers.iter().zip(graph.shapes()) {
        let (cycles, _) =
            layer_latency(&layer, PrecisionMode::new(8, 8).unwrap(), &hw).unwrap();
        assert_eq!(entry.cycles, cycles);
    }
    let csv = fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
}

#[test]
fn simulate_prints_bounded_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let out = run(&[
        "simulate",
        "--model",
        fx.model.to_str().unwrap(),
        "--hw",
        fx.hw.to_str().unwrap(),
        "--assign",
        fx.assign_22.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let speedup: f64 = text
        .split("speedup ")
        .nth(1)
        .and_then(|s| s.split('x').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(speedup > 1.0 && speedup <= 16.0, "speedup={speedup}");
}

#[test]
fn simulate_capacity_error_exits_1_with_layer_name() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let bad_hw = HwConfig {
        array_dim: 16,
        if_buffer_bytes: 1 << 20,
        w_buffer_bytes: 4,
        of_buffer_bytes: 1 << 22,
        dram_bandwidth_bytes_per_cycle: 1e6,
        frequency_mhz: 200.0,
    };
    let hw_path = dir.path().join("bad_hw.json");
    io::save_hw_config(&bad_hw, &hw_path).unwrap();
    let out = run(&[
        "simulate",
        "--model",
        fx.model.to_str().unwrap(),
        "--hw",
        hw_path.to_str().unwrap(),
        "--assign",
        fx.assign_88.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("l0"), "stderr names the failing layer");
}

#[test]
fn search_alpha_one_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let prefix = dir.path().join("s1");
    let out = run(&[
        "search",
        "--model",
        fx.model.to_str().unwrap(),
        "--hw",
        fx.hw.to_str().unwrap(),
        "--tensors",
        fx.tensors.to_str().unwrap(),
        "--strategy",
        "speedup",
        "--alpha",
        "1",
        "--topk",
        "2",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0 degrade steps"));
    let trace = fs::read_to_string(dir.path().join("s1.trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1, "header only");
    let result = io::load_search_result(&dir.path().join("s1.json")).unwrap();
    for l in &result.layers {
        assert_eq!((l.w_bits, l.a_bits), (8, 8));
    }
}

#[test]
fn search_alpha_two_trace_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let mut outputs = Vec::new();
    for name in ["sa", "sb"] {
        let prefix = dir.path().join(name);
        let out = run(&[
            "search",
            "--model",
            fx.model.to_str().unwrap(),
            "--hw",
            fx.hw.to_str().unwrap(),
            "--tensors",
            fx.tensors.to_str().unwrap(),
            "--strategy",
            "speedup",
            "--alpha",
            "2",
            "--topk",
            "2",
            "--out",
            prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push(stdout(&out));
    }
    assert_eq!(outputs[0].replace("sa", ""), outputs[1].replace("sb", ""));
    for suffix in [".json", ".csv", ".trace.csv"] {
        let a = fs::read(dir.path().join(format!("sa{suffix}"))).unwrap();
        let b = fs::read(dir.path().join(format!("sb{suffix}"))).unwrap();
        assert_eq!(a, b, "{suffix} differs between identical runs");
    }
    let result = io::load_search_result(&dir.path().join("sa.json")).unwrap();
    assert!(result.speedup_ratio >= 2.0);
    assert!(!result.trace.is_empty());
}

#[test]
fn search_flag_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let base: Vec<String> = vec![
        "search".into(),
        "--model".into(),
        fx.model.to_str().unwrap().into(),
        "--hw".into(),
        fx.hw.to_str().unwrap().into(),
        "--tensors".into(),
        fx.tensors.to_str().unwrap().into(),
        "--out".into(),
        dir.path().join("x").to_str().unwrap().into(),
    ];
    let mut args: Vec<String> = base.clone();
    args.extend(["--strategy".into(), "rmse".into(), "--alpha".into(), "2".into()]);
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let mut args = base.clone();
    args.extend(["--strategy".into(), "speedup".into()]); // missing --alpha
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_infeasible_alpha_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let out = run(&[
        "search",
        "--model",
        fx.model.to_str().unwrap(),
        "--hw",
        fx.hw.to_str().unwrap(),
        "--tensors",
        fx.tensors.to_str().unwrap(),
        "--strategy",
        "speedup",
        "--alpha",
        "1000000",
        "--topk",
        "2",
        "--out",
        dir.path().join("inf").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("best achievable"));
}
