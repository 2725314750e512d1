//! The variable-length number format: codes, decoding, encoding, and
//! nearest-value scalar quantization.
//!
//! A code word packs an optional sign bit followed by a magnitude field.
//! The magnitude field is run-length coded: the count of leading 1-bits
//! selects a binade, and whatever bits remain after the terminating 0 form
//! the mantissa. Short runs leave many mantissa bits (fine steps near zero),
//! long runs leave few (coarse steps at large magnitudes), so precision
//! tapers with magnitude.
//!
//! For an `m`-bit magnitude field with `i` leading ones, `k` mantissa bits
//! and mantissa value `x`:
//!
//! * `i = 0` (field starts with 0): value `x / 2^k` with `k = m - 1`,
//!   covering `[0, 1)`.
//! * `0 < i < m`: value `2^(i-1) * (1 + x / 2^k)` with `k = m - i - 1`
//!   (the terminating 0 is consumed).
//! * `i = m` (all ones): value `2^(m-1)`, the format maximum.
//!
//! The 4-bit unsigned code space decodes to
//! `{0, 0.125, .., 0.875, 1, 1.25, 1.5, 1.75, 2, 3, 4, 8}`.
//!
//! ```
//! use dybit::format::{DyBitCode, FormatSpec};
//!
//! let spec = FormatSpec::unsigned(4).unwrap();
//! assert_eq!(spec.decode(DyBitCode::new(0b1001)).unwrap(), 1.25);
//! assert_eq!(spec.quantize_scalar(1.3).unwrap().bits(), 0b1001);
//! ```
//!
//! All decoded values are exact binary rationals, and every one of them is
//! exactly representable in `f64` for the supported widths, so decoding and
//! comparisons carry no rounding ambiguity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest supported code, in bits.
pub const MAX_TOTAL_BITS: u32 = 16;

/// Shape of a code space: total width in bits and signedness.
///
/// Signed specs use a sign-magnitude layout: one sign bit (1 = negative) in
/// the most significant position, then an unsigned magnitude field of
/// `total_bits - 1` bits. Negative zero is accepted on decode (it reads as
/// zero) but never produced by any encoding operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormatSpec {
    /// Total code width, including the sign bit when signed.
    pub total_bits: u32,
    /// Whether a sign bit is present.
    pub signed: bool,
}

impl FormatSpec {
    /// Unsigned spec of the given total width.
    pub fn unsigned(total_bits: u32) -> Result<Self> {
        let spec = FormatSpec { total_bits, signed: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Signed (sign-magnitude) spec of the given total width.
    pub fn signed(total_bits: u32) -> Result<Self> {
        let spec = FormatSpec { total_bits, signed: true };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the width bounds. Unsigned specs need at least 2 bits. Signed
    /// specs need at least 2 as well: the 2-bit signed code space is the
    /// ternary `{-1, 0, +1}`, the narrowest weight format the search can
    /// assign.
    pub fn validate(&self) -> Result<()> {
        let min = 2;
        if self.total_bits < min || self.total_bits > MAX_TOTAL_BITS {
            return Err(Error::InvalidSpec(format!(
                "total_bits {} outside supported range {}..={}",
                self.total_bits, min, MAX_TOTAL_BITS
            )));
        }
        Ok(())
    }

    /// Width of the magnitude field.
    pub fn magnitude_bits(&self) -> u32 {
        if self.signed {
            self.total_bits - 1
        } else {
            self.total_bits
        }
    }

    /// Number of distinct code words, `2^total_bits`.
    pub fn code_count(&self) -> u32 {
        1 << self.total_bits
    }

    /// Largest representable magnitude: the decode of the all-ones
    /// magnitude field, `2^(m-1)`.
    pub fn max_value(&self) -> f64 {
        exp2i(self.magnitude_bits() as i32 - 1)
    }

    /// Smallest representable magnitude above zero.
    pub fn min_positive(&self) -> f64 {
        let m = self.magnitude_bits();
        if m == 1 {
            // Single-bit magnitude has only {0, 1}.
            1.0
        } else {
            exp2i(-(m as i32 - 1))
        }
    }

    fn check_code(&self, code: DyBitCode) -> Result<()> {
        self.validate()?;
        if u32::from(code.bits()) >= self.code_count() {
            return Err(Error::InvalidCode(format!(
                "code {:#b} does not fit {} bits",
                code.bits(),
                self.total_bits
            )));
        }
        Ok(())
    }

    /// Splits a code into its structural fields.
    pub fn decode_fields(&self, code: DyBitCode) -> Result<DecodedFields> {
        self.check_code(code)?;
        let m = self.magnitude_bits();
        let bits = u32::from(code.bits());
        let sign = if self.signed {
            ((bits >> (self.total_bits - 1)) & 1) as u8
        } else {
            0
        };
        let magnitude = bits & mask(m);

        let run_length = leading_ones(magnitude, m);
        let (mantissa_bits, mantissa_value, value) = if run_length == m {
            (0, 0, exp2i(m as i32 - 1))
        } else if run_length == 0 {
            let k = m - 1;
            let x = magnitude; // MSB is 0, so the low m-1 bits are the whole field
            (k, x, f64::from(x) * exp2i(-(k as i32)))
        } else {
            let k = m - run_length - 1;
            let x = magnitude & mask(k);
            let frac = f64::from(x) * exp2i(-(k as i32));
            (k, x, exp2i(run_length as i32 - 1) * (1.0 + frac))
        };

        Ok(DecodedFields { sign, run_length, mantissa_bits, mantissa_value, value })
    }

    /// Decodes a code to its real value, sign applied.
    pub fn decode(&self, code: DyBitCode) -> Result<f64> {
        let f = self.decode_fields(code)?;
        Ok(if f.sign == 1 { -f.value } else { f.value })
    }

    /// Reassembles a code from structural fields. Inverse of
    /// [`decode_fields`](Self::decode_fields) on canonical fields; a
    /// negative zero (sign set, zero magnitude) is canonicalized to the
    /// plain zero code.
    pub fn encode_fields(&self, fields: &DecodedFields) -> Result<DyBitCode> {
        self.validate()?;
        let m = self.magnitude_bits();
        if fields.sign > 1 || (!self.signed && fields.sign != 0) {
            return Err(Error::InvalidFields(format!(
                "sign {} invalid for this spec",
                fields.sign
            )));
        }
        if fields.run_length > m {
            return Err(Error::InvalidFields(format!(
                "run length {} exceeds magnitude width {}",
                fields.run_length, m
            )));
        }
        let expect_k = if fields.run_length == m {
            0
        } else if fields.run_length == 0 {
            m - 1
        } else {
            m - fields.run_length - 1
        };
        if fields.mantissa_bits != expect_k {
            return Err(Error::InvalidFields(format!(
                "mantissa width {} does not match run length {} (expected {})",
                fields.mantissa_bits, fields.run_length, expect_k
            )));
        }
        if expect_k < 16 && fields.mantissa_value >= (1 << expect_k) {
            return Err(Error::InvalidFields(format!(
                "mantissa value {} does not fit {} bits",
                fields.mantissa_value, expect_k
            )));
        }

        let magnitude = if fields.run_length == m {
            mask(m)
        } else if fields.run_length == 0 {
            fields.mantissa_value
        } else {
            (mask(fields.run_length) << (m - fields.run_length)) | fields.mantissa_value
        };

        // Cross-check the carried value against the reassembled code.
        let sign = if magnitude == 0 { 0 } else { fields.sign };
        let code =
            DyBitCode::new(((u32::from(sign) << (self.total_bits - 1)) | magnitude) as u16);
        let back = self.decode_fields(code)?;
        if back.value != fields.value {
            return Err(Error::InvalidFields(format!(
                "carried value {} disagrees with reassembled value {}",
                fields.value, back.value
            )));
        }
        Ok(code)
    }

    /// Lists every code with its decoded value, ordered by the unsigned
    /// integer interpretation of the code bits.
    ///
    /// For unsigned specs the value column is strictly increasing. For
    /// signed specs the non-canonical negative-zero code is omitted, so the
    /// list has `2^n - 1` entries.
    pub fn enumerate_values(&self) -> Result<Vec<(DyBitCode, f64)>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.code_count() as usize);
        for raw in 0..self.code_count() {
            let code = DyBitCode::new(raw as u16);
            if self.signed && raw == 1 << (self.total_bits - 1) {
                continue; // negative zero
            }
            out.push((code, self.decode(code)?));
        }
        Ok(out)
    }

    /// Quantizes a finite real to the code whose decoded value is nearest.
    ///
    /// Ties round toward the smaller magnitude. Magnitudes past the format
    /// maximum clamp to the all-ones code; negative inputs under an
    /// unsigned spec clamp to zero.
    pub fn quantize_scalar(&self, v: f64) -> Result<DyBitCode> {
        self.validate()?;
        if !v.is_finite() {
            return Err(Error::InvalidValue(format!("cannot quantize {v}")));
        }
        if !self.signed && v <= 0.0 {
            return Ok(DyBitCode::new(0));
        }
        let sign = if v < 0.0 { 1u32 } else { 0u32 };
        let magnitude = self.quantize_magnitude(v.abs());
        if magnitude == 0 {
            return Ok(DyBitCode::new(0)); // canonical zero, sign dropped
        }
        Ok(DyBitCode::new(((sign << (self.total_bits - 1)) | magnitude) as u16))
    }

    /// Nearest magnitude-field code for a non-negative real, ties toward
    /// the smaller value.
    fn quantize_magnitude(&self, u: f64) -> u32 {
        let m = self.magnitude_bits();
        if u >= self.max_value() {
            return mask(m); // saturate at the all-ones code
        }
        if u < 1.0 {
            // Binade below 1: uniform grid of 2^(m-1) steps, the next
            // representable above the top grid point being exactly 1.
            let k = m - 1;
            let x = round_half_down(u * exp2i(k as i32));
            if x == 1 << k {
                return magnitude_code(1, 0, m);
            }
            return x;
        }
        // Find i with 2^(i-1) <= u < 2^i; u < 2^(m-1) guarantees i <= m-1.
        let mut i = 1;
        while exp2i(i as i32) <= u {
            i += 1;
        }
        let k = m - i - 1;
        let base = exp2i(i as i32 - 1);
        let step = exp2i(i as i32 - 1 - k as i32);
        let x = round_half_down((u - base) / step);
        if x == 1 << k {
            // Rounded up to the start of the next binade.
            magnitude_code(i + 1, 0, m)
        } else {
            magnitude_code(i, x, m)
        }
    }

    /// Consecutive representable magnitudes, ascending; used to reason
    /// about local code gaps.
    pub fn magnitude_grid(&self) -> Result<Vec<f64>> {
        let probe = FormatSpec { total_bits: self.magnitude_bits(), signed: false };
        if self.magnitude_bits() == 1 {
            return Ok(vec![0.0, 1.0]);
        }
        Ok(probe.enumerate_values()?.into_iter().map(|(_, v)| v).collect())
    }
}

/// A code word: a bit pattern of `FormatSpec::total_bits` significant bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DyBitCode(u16);

impl DyBitCode {
    pub fn new(bits: u16) -> Self {
        DyBitCode(bits)
    }

    pub fn bits(&self) -> u16 {
        self.0
    }
}

/// Structural decomposition of a code word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedFields {
    /// 0 positive, 1 negative.
    pub sign: u8,
    /// Count of leading 1-bits in the magnitude field.
    pub run_length: u32,
    /// Number of mantissa bits left after the run and its terminating 0.
    pub mantissa_bits: u32,
    /// Unsigned mantissa value, `< 2^mantissa_bits`.
    pub mantissa_value: u32,
    /// Decoded magnitude (sign not applied).
    pub value: f64,
}

fn mask(bits: u32) -> u32 {
    if bits == 0 {
        0
    } else {
        (1u32 << bits) - 1
    }
}

fn leading_ones(field: u32, width: u32) -> u32 {
    let mut count = 0;
    for bit in (0..width).rev() {
        if field >> bit & 1 == 1 {
            count += 1;
        } else {
            break;
        }
    }
    count
}

/// Exact power of two as f64.
fn exp2i(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// Nearest integer with halfway cases rounded down (toward the smaller
/// magnitude of the candidates).
fn round_half_down(t: f64) -> u32 {
    (t - 0.5).ceil() as u32
}

/// Magnitude-field bit pattern for binade `i` (>= 1) and mantissa `x`.
fn magnitude_code(i: u32, x: u32, m: u32) -> u32 {
    if i >= m {
        mask(m)
    } else {
        (mask(i) << (m - i)) | x
    }
}
