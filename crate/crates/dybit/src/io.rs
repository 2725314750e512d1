//! File formats: model descriptors, tensor manifests with raw f32 blobs,
//! hardware configs, bit-width assignments, and report serialization.
//!
//! Everything is JSON plus raw little-endian binary payloads, written
//! deterministically so identical inputs produce byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::DyBitCode;
use crate::latency::{HwConfig, LatencyReport, LayerShape};
use crate::pe::PrecisionMode;
use crate::quant::{QuantizedTensor, TensorF32};
use crate::search::{DegradeStep, ModelTensors, QuantAssignment, SearchResult, TensorKind};

// ── Model descriptor ────────────────────────────────────────────────────────

/// A resolved model: ordered layers with GEMM-equivalent dimensions and the
/// tensor blobs they reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub name: String,
    pub source: Option<String>,
    pub layers: Vec<ModelLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayer {
    pub shape: LayerShape,
    pub weights_id: String,
    pub calibration_id: String,
    pub signed_activations: bool,
}

impl ModelGraph {
    /// Layer shapes in model order, as the simulator consumes them.
    pub fn shapes(&self) -> Vec<LayerShape> {
        self.layers.iter().map(|l| l.shape.clone()).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    layers: Vec<DescriptorLayer>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DescriptorLayer {
    Gemm {
        name: String,
        m: u64,
        n: u64,
        k: u64,
        weights: String,
        calibration: String,
        #[serde(default)]
        signed_activations: bool,
    },
    Conv {
        name: String,
        c_in: u64,
        c_out: u64,
        kernel_h: u64,
        kernel_w: u64,
        out_h: u64,
        out_w: u64,
        batch: u64,
        weights: String,
        calibration: String,
        #[serde(default)]
        signed_activations: bool,
    },
}

fn schema_err(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Schema { path: path.display().to_string(), detail: err.to_string() }
}

/// Loads a descriptor without resolving blob references, for consumers
/// that only need layer shapes (the simulator). Convolution layers are
/// lowered to GEMM dimensions here (im2col: `M = out_h * out_w * batch`,
/// `K = c_in * kernel_h * kernel_w`, `N = c_out`), so everything
/// downstream sees plain GEMMs.
pub fn load_model_descriptor(descriptor_path: &Path) -> Result<ModelGraph> {
    let text = fs::read_to_string(descriptor_path)?;
    let file: DescriptorFile =
        serde_json::from_str(&text).map_err(|e| schema_err(descriptor_path, e))?;
    let mut seen = BTreeSet::new();
    let mut layers = Vec::with_capacity(file.layers.len());
    for layer in file.layers {
        let (name, m, n, k, weights, calibration, signed_activations) = match layer {
            DescriptorLayer::Gemm { name, m, n, k, weights, calibration, signed_activations } => {
                (name, m, n, k, weights, calibration, signed_activations)
            }
            DescriptorLayer::Conv {
                name,
                c_in,
                c_out,
                kernel_h,
                kernel_w,
                out_h,
                out_w,
                batch,
                weights,
                calibration,
                signed_activations,
            } => (
                name,
                out_h * out_w * batch,
                c_out,
                c_in * kernel_h * kernel_w,
                weights,
                calibration,
                signed_activations,
            ),
        };
        if !seen.insert(name.clone()) {
            return Err(schema_err(descriptor_path, format!("duplicate layer name '{name}'")));
        }
        layers.push(ModelLayer {
            shape: LayerShape::new(name, m, n, k)?,
            weights_id: weights,
            calibration_id: calibration,
            signed_activations,
        });
    }
    Ok(ModelGraph { name: file.name, source: file.source, layers })
}

/// Loads a model descriptor and resolves it against a manifest: every
/// referenced blob must exist and each weight blob must hold exactly
/// `gemm_k * gemm_n` elements.
pub fn load_model(descriptor_path: &Path, manifest: &TensorManifest) -> Result<ModelGraph> {
    let graph = load_model_descriptor(descriptor_path)?;
    for layer in &graph.layers {
        let name = &layer.shape.name;
        for id in [&layer.weights_id, &layer.calibration_id] {
            if !manifest.entries.contains_key(id) {
                return Err(Error::DanglingReference {
                    id: id.clone(),
                    context: format!("layer '{name}'"),
                });
            }
        }
        let expected = layer.shape.gemm_k * layer.shape.gemm_n;
        let actual = manifest.entries[&layer.weights_id].element_count;
        if actual != expected {
            return Err(Error::DimensionMismatch(format!(
                "layer '{name}': weight blob '{}' has {actual} elements, \
                 gemm dims need {} x {} = {expected}",
                layer.weights_id, layer.shape.gemm_k, layer.shape.gemm_n
            )));
        }
    }
    Ok(graph)
}

/// Writes a descriptor for a graph of plain GEMM layers.
pub fn save_model(graph: &ModelGraph, path: &Path) -> Result<()> {
    let file = DescriptorFile {
        name: graph.name.clone(),
        source: graph.source.clone(),
        layers: graph
            .layers
            .iter()
            .map(|l| DescriptorLayer::Gemm {
                name: l.shape.name.clone(),
                m: l.shape.gemm_m,
                n: l.shape.gemm_n,
                k: l.shape.gemm_k,
                weights: l.weights_id.clone(),
                calibration: l.calibration_id.clone(),
                signed_activations: l.signed_activations,
            })
            .collect(),
    };
    write_json(path, &file)
}

// ── Tensor manifest and blobs ───────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub path: String,
    pub byte_order: String,
    pub element_count: u64,
}

/// Maps blob ids to raw little-endian f32 files. Relative blob paths
/// resolve against the directory the manifest lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorManifest {
    pub entries: BTreeMap<String, ManifestEntry>,
    base_dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    entries: BTreeMap<String, ManifestEntry>,
}

impl TensorManifest {
    /// Empty manifest whose blobs live under `base_dir`.
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        TensorManifest { entries: BTreeMap::new(), base_dir: base_dir.into() }
    }

    /// Writes `<base_dir>/<id>.bin` and records its entry.
    pub fn add_tensor(&mut self, id: &str, tensor: &TensorF32) -> Result<()> {
        if id.is_empty() {
            return Err(Error::InvalidInput("blob id must be non-empty".into()));
        }
        let rel = format!("{id}.bin");
        write_f32_blob(&self.base_dir.join(&rel), tensor.data())?;
        self.entries.insert(
            id.to_string(),
            ManifestEntry {
                shape: tensor.shape().to_vec(),
                dtype: "f32".into(),
                path: rel,
                byte_order: "little-endian".into(),
                element_count: tensor.len() as u64,
            },
        );
        Ok(())
    }

    /// Reads one blob, bit-exact, validating declared size against the file.
    pub fn load_tensor(&self, id: &str) -> Result<TensorF32> {
        let entry = self.entries.get(id).ok_or_else(|| Error::DanglingReference {
            id: id.to_string(),
            context: "manifest lookup".into(),
        })?;
        let path = self.base_dir.join(&entry.path);
        let expected = entry.element_count * 4;
        let found = fs::metadata(&path)?.len();
        if found != expected {
            return Err(Error::SizeMismatch { id: id.to_string(), expected, found });
        }
        let mut bytes = Vec::with_capacity(found as usize);
        fs::File::open(&path)?.read_to_end(&mut bytes)?;
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        TensorF32::new(entry.shape.clone(), data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &ManifestFile { entries: self.entries.clone() })
    }

    fn validate(&self, path: &Path) -> Result<()> {
        for (id, entry) in &self.entries {
            if entry.dtype != "f32" {
                return Err(schema_err(path, format!("blob '{id}': dtype must be f32")));
            }
            if entry.byte_order != "little-endian" {
                return Err(schema_err(
                    path,
                    format!("blob '{id}': byte_order must be little-endian"),
                ));
            }
            if entry.shape.is_empty() || entry.shape.contains(&0) {
                return Err(schema_err(path, format!("blob '{id}': shape must be positive")));
            }
            let product: u64 = entry.shape.iter().map(|&d| d as u64).product();
            if product != entry.element_count {
                return Err(Error::DimensionMismatch(format!(
                    "blob '{id}': shape {:?} implies {product} elements, entry declares {}",
                    entry.shape, entry.element_count
                )));
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: &Path) -> Result<TensorManifest> {
    let text = fs::read_to_string(path)?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| schema_err(path, e))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let manifest = TensorManifest { entries: file.entries, base_dir };
    manifest.validate(path)?;
    Ok(manifest)
}

fn write_f32_blob(path: &Path, data: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Loads the weight and calibration tensors for every layer of a graph.
pub fn load_model_tensors(graph: &ModelGraph, manifest: &TensorManifest) -> Result<ModelTensors> {
    let mut tensors = ModelTensors::default();
    for layer in &graph.layers {
        tensors.layers.push(crate::search::LayerTensors {
            weights: manifest.load_tensor(&layer.weights_id)?,
            calibration: manifest.load_tensor(&layer.calibration_id)?,
            signed_activations: layer.signed_activations,
        });
    }
    Ok(tensors)
}

// ── Hardware config ─────────────────────────────────────────────────────────

/// All fields required, no defaults.
pub fn load_hw_config(path: &Path) -> Result<HwConfig> {
    let text = fs::read_to_string(path)?;
    let hw: HwConfig = serde_json::from_str(&text).map_err(|e| schema_err(path, e))?;
    hw.validate()?;
    Ok(hw)
}

pub fn save_hw_config(hw: &HwConfig, path: &Path) -> Result<()> {
    write_json(path, hw)
}

// ── Assignments ─────────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentRow {
    name: String,
    w_bits: u32,
    a_bits: u32,
}

/// Reads a per-layer bit-width assignment and aligns it to the graph's
/// layer order; every layer must appear exactly once.
pub fn load_assignment(path: &Path, graph: &ModelGraph) -> Result<QuantAssignment> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<AssignmentRow> =
        serde_json::from_str(&text).map_err(|e| schema_err(path, e))?;
    let mut by_name = BTreeMap::new();
    for row in &rows {
        if by_name.insert(row.name.clone(), (row.w_bits, row.a_bits)).is_some() {
            return Err(schema_err(path, format!("duplicate assignment for '{}'", row.name)));
        }
    }
    if rows.len() != graph.layers.len() {
        return Err(Error::InvalidInput(format!(
            "assignment lists {} layers, model has {}",
            rows.len(),
            graph.layers.len()
        )));
    }
    let mut modes = Vec::with_capacity(graph.layers.len());
    for layer in &graph.layers {
        let (w, a) = by_name.get(&layer.shape.name).ok_or_else(|| {
            Error::InvalidInput(format!("assignment missing layer '{}'", layer.shape.name))
        })?;
        modes.push(PrecisionMode::new(*a, *w)?);
    }
    QuantAssignment::new(modes)
}

pub fn save_assignment(
    graph: &ModelGraph,
    assignment: &QuantAssignment,
    path: &Path,
) -> Result<()> {
    if assignment.len() != graph.layers.len() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} layers, model has {}",
            assignment.len(),
            graph.layers.len()
        )));
    }
    let rows: Vec<AssignmentRow> = graph
        .layers
        .iter()
        .zip(assignment.modes())
        .map(|(l, m)| AssignmentRow {
            name: l.shape.name.clone(),
            w_bits: m.w_bits,
            a_bits: m.a_bits,
        })
        .collect();
    write_json(path, &rows)
}

// ── Reports ─────────────────────────────────────────────────────────────────

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn save_latency_report(report: &LatencyReport, path: &Path) -> Result<()> {
    write_json(path, report)
}

pub fn load_latency_report(path: &Path) -> Result<LatencyReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema_err(path, e))
}

pub fn save_latency_csv(report: &LatencyReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "w_bits", "a_bits", "cycles"])?;
    for l in &report.layers {
        w.write_record([
            l.name.clone(),
            l.w_bits.to_string(),
            l.a_bits.to_string(),
            l.cycles.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_search_result(result: &SearchResult, path: &Path) -> Result<()> {
    write_json(path, result)
}

pub fn load_search_result(path: &Path) -> Result<SearchResult> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema_err(path, e))
}

pub fn save_search_csv(result: &SearchResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "w_bits", "a_bits", "cycles", "rmse"])?;
    for l in &result.layers {
        w.write_record([
            l.name.clone(),
            l.w_bits.to_string(),
            l.a_bits.to_string(),
            l.cycles.to_string(),
            l.rmse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace_csv(trace: &[DegradeStep], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "step",
        "iteration",
        "layer",
        "target",
        "from_bits",
        "to_bits",
        "speedup_ratio",
        "rmse_ratio",
    ])?;
    for (i, s) in trace.iter().enumerate() {
        let target = match s.target {
            TensorKind::Weights => "weights",
            TensorKind::Activations => "activations",
        };
        w.write_record([
            i.to_string(),
            s.iteration.to_string(),
            s.layer.clone(),
            target.to_string(),
            s.from_bits.to_string(),
            s.to_bits.to_string(),
            s.speedup_ratio.to_string(),
            s.rmse_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}


/// One row of the per-layer error table a quantize run emits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantRmseRow {
    pub name: String,
    pub w_bits: u32,
    pub a_bits: u32,
    pub w_rmse: f64,
    pub a_rmse: f64,
}

pub fn save_quant_rmse_csv(rows: &[QuantRmseRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "w_bits", "a_bits", "w_rmse", "a_rmse"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.w_bits.to_string(),
            r.a_bits.to_string(),
            r.w_rmse.to_string(),
            r.a_rmse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ── Quantized tensor dumps ──────────────────────────────────────────────────

/// Sidecar metadata for one dumped code array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensorMeta {
    pub spec: crate::format::FormatSpec,
    pub scale: f64,
    pub shape: Vec<usize>,
    /// Little-endian u16 code words, relative to the index file.
    pub codes_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantLayerDump {
    pub name: String,
    pub weights: QuantizedTensorMeta,
    pub activations: QuantizedTensorMeta,
}

/// Index of all per-layer quantized dumps from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantIndex {
    pub layers: Vec<QuantLayerDump>,
}

/// Writes the code payload and returns its sidecar entry.
pub fn dump_quantized(
    q: &QuantizedTensor,
    dir: &Path,
    file_stem: &str,
) -> Result<QuantizedTensorMeta> {
    let rel = format!("{file_stem}.codes.bin");
    let mut bytes = Vec::with_capacity(q.codes.len() * 2);
    for c in &q.codes {
        bytes.extend_from_slice(&c.bits().to_le_bytes());
    }
    fs::write(dir.join(&rel), bytes)?;
    Ok(QuantizedTensorMeta {
        spec: q.spec,
        scale: q.scale,
        shape: q.shape.clone(),
        codes_path: rel,
    })
}

/// Reads a dumped code array back.
pub fn load_quantized(meta: &QuantizedTensorMeta, dir: &Path) -> Result<QuantizedTensor> {
    let path = dir.join(&meta.codes_path);
    let expected: u64 = meta.shape.iter().map(|&d| d as u64).product::<u64>() * 2;
    let found = fs::metadata(&path)?.len();
    if found != expected {
        return Err(Error::SizeMismatch {
            id: meta.codes_path.clone(),
            expected,
            found,
        });
    }
    let bytes = fs::read(&path)?;
    let codes: Vec<DyBitCode> = bytes
        .chunks_exact(2)
        .map(|c| DyBitCode::new(u16::from_le_bytes([c[0], c[1]])))
        .collect();
    Ok(QuantizedTensor { spec: meta.spec, scale: meta.scale, codes, shape: meta.shape.clone() })
}

pub fn save_quant_index(index: &QuantIndex, path: &Path) -> Result<()> {
    write_json(path, index)
}

pub fn load_quant_index(path: &Path) -> Result<QuantIndex> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema_err(path, e))
}
