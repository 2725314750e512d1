//! Command-line front end: value-table printing, model quantization,
//! latency simulation, and mixed-precision search over model files.
//!
//! Exit codes: 0 success, 1 runtime failure (including buffer capacity),
//! 2 usage error, 3 infeasible constraint.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::format::FormatSpec;
use crate::io;
use crate::latency::model_latency;
use crate::quant::{compute_scale, dequantize_tensor, quantize_tensor, rmse};
use crate::search::{
    run_search, ModelTensors, QuantAssignment, SearchConstraint, SearchResult,
};

#[derive(Parser)]
#[command(name = "dybit", version, about = "Adaptive-precision quantization toolkit")]
struct Cli {
    /// Print per-layer detail while running.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the value table of a code space.
    Table(TableArgs),
    /// Quantize a model's tensors and report per-layer error.
    Quantize(QuantizeArgs),
    /// Simulate per-layer inference latency under an assignment.
    Simulate(SimulateArgs),
    /// Search a layer-wise mixed-precision assignment.
    Search(SearchArgs),
}

#[derive(Args)]
struct TableArgs {
    /// Total bit-width, 2 through 8.
    #[arg(long)]
    bits: u32,
    #[command(flatten)]
    sign: SignArgs,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SignArgs {
    /// Sign-magnitude layout.
    #[arg(long)]
    signed: bool,
    /// Magnitude-only layout.
    #[arg(long)]
    unsigned: bool,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Model descriptor (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Tensor manifest (JSON).
    #[arg(long)]
    tensors: PathBuf,
    /// Weight bit-width: 2, 4, or 8.
    #[arg(long)]
    wbits: u32,
    /// Activation bit-width: 2, 4, or 8.
    #[arg(long)]
    abits: u32,
    /// Output path prefix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Hardware config (JSON).
    #[arg(long)]
    hw: PathBuf,
    /// Per-layer bit-width assignment (JSON).
    #[arg(long)]
    assign: PathBuf,
    /// Output path prefix for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    /// Minimize error under a speedup floor.
    Speedup,
    /// Minimize latency under an error ceiling.
    Rmse,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    hw: PathBuf,
    #[arg(long)]
    tensors: PathBuf,
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Speedup floor (speedup strategy only).
    #[arg(long)]
    alpha: Option<f64>,
    /// Error budget multiplier (rmse strategy only).
    #[arg(long)]
    beta: Option<f64>,
    /// Candidate layers considered per iteration.
    #[arg(long, default_value_t = 1)]
    topk: usize,
    /// Output path prefix.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult = std::result::Result<(), CliError>;

/// Parses arguments from the process environment, runs the selected
/// command, and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Lib(Error::Infeasible { best_ratio })) => {
            eprintln!("error: constraint infeasible; best achievable ratio {best_ratio:.4}");
            3
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Table(args) => cmd_table(&args),
        Command::Quantize(args) => cmd_quantize(&args, cli.verbose),
        Command::Simulate(args) => cmd_simulate(&args, cli.verbose),
        Command::Search(args) => cmd_search(&args, cli.verbose),
    }
}

fn check_width(label: &str, bits: u32) -> std::result::Result<(), CliError> {
    if ![2, 4, 8].contains(&bits) {
        return Err(CliError::Usage(format!("--{label} must be 2, 4, or 8, got {bits}")));
    }
    Ok(())
}

fn cmd_table(args: &TableArgs) -> CliResult {
    if !(2..=8).contains(&args.bits) {
        return Err(CliError::Usage(format!(
            "--bits must be between 2 and 8, got {}",
            args.bits
        )));
    }
    let spec = if args.sign.signed {
        FormatSpec::signed(args.bits)
    } else {
        FormatSpec::unsigned(args.bits)
    }
    .map_err(CliError::Lib)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (code, value) in spec.enumerate_values().map_err(CliError::Lib)? {
        let row = format!("{:0width$b} {}", code.bits(), value, width = args.bits as usize);
        if let Err(e) = writeln!(out, "{row}") {
            // downstream pager/head closed the pipe; not an error
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(CliError::Lib(e.into()));
        }
    }
    Ok(())
}

fn cmd_quantize(args: &QuantizeArgs, verbose: bool) -> CliResult {
    check_width("wbits", args.wbits)?;
    check_width("abits", args.abits)?;
    let manifest = io::load_manifest(&args.tensors)?;
    let graph = io::load_model(&args.model, &manifest)?;
    let tensors = io::load_model_tensors(&graph, &manifest)?;

    let out_dir = parent_dir(&args.out);
    let stem = file_stem(&args.out)?;
    let mut index = io::QuantIndex { layers: Vec::new() };
    let mut rows = Vec::new();
    for (layer, lt) in graph.layers.iter().zip(&tensors.layers) {
        let w_spec = FormatSpec::signed(args.wbits)?;
        let a_spec = if lt.signed_activations {
            FormatSpec::signed(args.abits)?
        } else {
            FormatSpec::unsigned(args.abits)?
        };
        let name = &layer.shape.name;

        let w_scale = compute_scale(&lt.weights, &w_spec)?;
        let wq = quantize_tensor(&lt.weights, &w_spec, w_scale)?;
        let w_rmse = rmse(&lt.weights, &dequantize_tensor(&wq)?)?.rmse;

        let a_scale = compute_scale(&lt.calibration, &a_spec)?;
        let aq = quantize_tensor(&lt.calibration, &a_spec, a_scale)?;
        let a_rmse = rmse(&lt.calibration, &dequantize_tensor(&aq)?)?.rmse;

        let weights = io::dump_quantized(&wq, &out_dir, &format!("{stem}.{name}.weights"))?;
        let activations =
            io::dump_quantized(&aq, &out_dir, &format!("{stem}.{name}.activations"))?;
        index.layers.push(io::QuantLayerDump { name: name.clone(), weights, activations });
        rows.push(io::QuantRmseRow {
            name: name.clone(),
            w_bits: args.wbits,
            a_bits: args.abits,
            w_rmse,
            a_rmse,
        });
        if verbose {
            eprintln!("{name}: w_rmse={w_rmse} a_rmse={a_rmse}");
        }
    }
    io::save_quant_index(&index, &with_suffix(&args.out, ".quant.json"))?;
    io::save_quant_rmse_csv(&rows, &with_suffix(&args.out, ".rmse.csv"))?;
    println!(
        "quantized {} layers at {}w{}a -> {}.quant.json",
        graph.layers.len(),
        args.wbits,
        args.abits,
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, verbose: bool) -> CliResult {
    let graph = io::load_model_descriptor(&args.model)?;
    let hw = io::load_hw_config(&args.hw)?;
    let assignment = io::load_assignment(&args.assign, &graph)?;
    let shapes = graph.shapes();

    let report = model_latency(&shapes, assignment.modes(), &hw)?;
    let baseline = QuantAssignment::uniform(shapes.len(), 8, 8)?;
    let base = model_latency(&shapes, baseline.modes(), &hw)?;
    let speedup = base.total_cycles as f64 / report.total_cycles as f64;

    if verbose {
        for l in &report.layers {
            eprintln!("{}: {}w{}a {} cycles", l.name, l.w_bits, l.a_bits, l.cycles);
        }
    }
    println!(
        "total {} cycles ({:.4} ms at {} MHz), speedup {:.4}x vs 8/8 baseline",
        report.total_cycles,
        hw.cycles_to_ms(report.total_cycles),
        hw.frequency_mhz,
        speedup
    );
    if let Some(out) = &args.out {
        io::save_latency_report(&report, &with_suffix(out, ".json"))?;
        io::save_latency_csv(&report, &with_suffix(out, ".csv"))?;
    }
    Ok(())
}

fn cmd_search(args: &SearchArgs, verbose: bool) -> CliResult {
    let constraint = match args.strategy {
        Strategy::Speedup => {
            if args.beta.is_some() {
                return Err(CliError::Usage(
                    "--beta does not apply to the speedup strategy".into(),
                ));
            }
            let alpha = args.alpha.ok_or_else(|| {
                CliError::Usage("the speedup strategy requires --alpha".into())
            })?;
            SearchConstraint::Speedup { alpha, top_k: args.topk }
        }
        Strategy::Rmse => {
            if args.alpha.is_some() {
                return Err(CliError::Usage(
                    "--alpha does not apply to the rmse strategy".into(),
                ));
            }
            let beta = args
                .beta
                .ok_or_else(|| CliError::Usage("the rmse strategy requires --beta".into()))?;
            SearchConstraint::Rmse { beta, top_k: args.topk }
        }
    };

    let manifest = io::load_manifest(&args.tensors)?;
    let graph = io::load_model(&args.model, &manifest)?;
    let hw = io::load_hw_config(&args.hw)?;
    let tensors: ModelTensors = io::load_model_tensors(&graph, &manifest)?;
    let shapes = graph.shapes();

    let result = run_search(&shapes, &hw, &tensors, &constraint)?;
    write_search_outputs(&result, &args.out)?;
    if verbose {
        for step in &result.trace {
            eprintln!(
                "iter {} {} {:?} {} -> {} (speedup {:.4}, rmse ratio {:.4})",
                step.iteration,
                step.layer,
                step.target,
                step.from_bits,
                step.to_bits,
                step.speedup_ratio,
                step.rmse_ratio
            );
        }
    }
    println!(
        "search done: speedup {:.4}x, rmse ratio {:.4}, {} degrade steps in {} iterations",
        result.speedup_ratio,
        result.rmse_ratio,
        result.trace.len(),
        result.iterations
    );
    Ok(())
}

fn write_search_outputs(result: &SearchResult, out: &Path) -> Result<(), Error> {
    io::save_search_result(result, &with_suffix(out, ".json"))?;
    io::save_search_csv(result, &with_suffix(out, ".csv"))?;
    io::save_trace_csv(&result.trace, &with_suffix(out, ".trace.csv"))?;
    Ok(())
}

fn parent_dir(prefix: &Path) -> PathBuf {
    match prefix.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn file_stem(prefix: &Path) -> std::result::Result<String, CliError> {
    prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| CliError::Usage("--out must name a file prefix".into()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
