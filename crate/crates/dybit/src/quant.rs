//! Per-tensor scaling, tensor quantization, and the normalized RMSE metric.
//!
//! Quantization is per-tensor symmetric: one positive scale maps real values
//! onto the code grid so that the largest magnitude lands exactly on the
//! largest code. `fake_quantize` runs the full quantize/dequantize loop and
//! returns the representable tensor the hardware would actually see.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{DyBitCode, FormatSpec};

/// A dense row-major f32 tensor. Construction validates that every element
/// is finite and that the shape matches the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorF32 {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl TensorF32 {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} must be non-empty with positive dims"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} implies {expected} elements, payload has {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "element {pos} is {}",
                data[pos]
            )));
        }
        Ok(TensorF32 { shape, data })
    }

    /// One-dimensional tensor.
    pub fn from_vec(data: Vec<f32>) -> Result<Self> {
        let n = data.len();
        TensorF32::new(vec![n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Code array plus the per-tensor scale that maps it back to reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    pub spec: FormatSpec,
    pub scale: f64,
    pub codes: Vec<DyBitCode>,
    pub shape: Vec<usize>,
}

/// Quantization error summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantMetrics {
    /// `sqrt(mean(((x - x_hat) / sigma)^2))` over the tensor.
    pub rmse: f64,
    /// Population standard deviation of the original tensor.
    pub sigma: f64,
    pub n_elements: usize,
}

/// Neumaier compensated sum; deterministic for a fixed input order.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean, population standard deviation, and largest magnitude.
pub fn tensor_stats(t: &TensorF32) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mean = compensated_sum(t.data().iter().map(|&v| f64::from(v))) / n;
    let var =
        compensated_sum(t.data().iter().map(|&v| (f64::from(v) - mean).powi(2))) / n;
    let max_abs = t
        .data()
        .iter()
        .map(|v| f64::from(v.abs()))
        .fold(0.0f64, f64::max);
    (mean, var.max(0.0).sqrt(), max_abs)
}

/// Per-tensor scale: largest magnitude over the format maximum, so the
/// extreme element maps exactly onto the largest code. An all-zero tensor
/// gets the degenerate scale 1.
pub fn compute_scale(t: &TensorF32, spec: &FormatSpec) -> Result<f64> {
    spec.validate()?;
    let (_, _, max_abs) = tensor_stats(t);
    if max_abs == 0.0 {
        return Ok(1.0);
    }
    Ok(max_abs / spec.max_value())
}

/// Quantizes every element at the given scale.
pub fn quantize_tensor(t: &TensorF32, spec: &FormatSpec, scale: f64) -> Result<QuantizedTensor> {
    spec.validate()?;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidValue(format!("scale must be positive, got {scale}")));
    }
    let mut codes = Vec::with_capacity(t.len());
    for &v in t.data() {
        codes.push(spec.quantize_scalar(f64::from(v) / scale)?);
    }
    Ok(QuantizedTensor { spec: *spec, scale, codes, shape: t.shape().to_vec() })
}

/// Maps codes back to reals: `decode(code) * scale` per element.
pub fn dequantize_tensor(q: &QuantizedTensor) -> Result<TensorF32> {
    let mut data = Vec::with_capacity(q.codes.len());
    for &code in &q.codes {
        data.push((q.spec.decode(code)? * q.scale) as f32);
    }
    TensorF32::new(q.shape.clone(), data)
}

/// Quantize-then-dequantize with the max-derived scale: the representable
/// tensor nearest to the input under this format.
pub fn fake_quantize(t: &TensorF32, spec: &FormatSpec) -> Result<TensorF32> {
    let scale = compute_scale(t, spec)?;
    dequantize_tensor(&quantize_tensor(t, spec, scale)?)
}

/// Normalized root-mean-square error between an original tensor and its
/// quantized counterpart, per-element errors divided by the original's
/// population standard deviation.
pub fn rmse(original: &TensorF32, quantized: &TensorF32) -> Result<QuantMetrics> {
    if original.shape() != quantized.shape() {
        return Err(Error::DimensionMismatch(format!(
            "shape {:?} vs {:?}",
            original.shape(),
            quantized.shape()
        )));
    }
    let (_, sigma, _) = tensor_stats(original);
    let n = original.len();
    if sigma == 0.0 {
        if original.data() == quantized.data() {
            return Ok(QuantMetrics { rmse: 0.0, sigma, n_elements: n });
        }
        return Err(Error::InvalidValue(
            "rmse undefined: original tensor has zero standard deviation".into(),
        ));
    }
    let sq = compensated_sum(
        original
            .data()
            .iter()
            .zip(quantized.data())
            .map(|(&x, &xq)| ((f64::from(x) - f64::from(xq)) / sigma).powi(2)),
    );
    Ok(QuantMetrics { rmse: (sq / n as f64).sqrt(), sigma, n_elements: n })
}
