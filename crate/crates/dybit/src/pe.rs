//! Functional model of the mixed-precision processing element: the
//! leading-one-detector decoder, the write-back encoder, the fused
//! two-bit-slice mantissa multiplier, the exponent adder, and the
//! floating-point-accumulating MAC.
//!
//! The model is value-level, not structural: it reproduces the datapath's
//! arithmetic bit-exactly and its throughput scaling, nothing about gates
//! or pipelining.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported operand widths inside a PE.
pub const PE_WIDTHS: [u32; 3] = [2, 4, 8];

/// Activation/weight bit-width pair for one PE configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionMode {
    pub a_bits: u32,
    pub w_bits: u32,
}

impl PrecisionMode {
    pub fn new(a_bits: u32, w_bits: u32) -> Result<Self> {
        for b in [a_bits, w_bits] {
            if !PE_WIDTHS.contains(&b) {
                return Err(Error::UnsupportedMode(format!(
                    "{b}-bit operands are not supported (choose one of {PE_WIDTHS:?})"
                )));
            }
        }
        Ok(PrecisionMode { a_bits, w_bits })
    }

    /// Fused multiplications one PE performs per cycle in this mode:
    /// `(8 / a_bits) * (8 / w_bits)`.
    pub fn throughput(&self) -> u32 {
        (8 / self.a_bits) * (8 / self.w_bits)
    }
}

impl std::fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}w{}a", self.w_bits, self.a_bits)
    }
}

/// Decoder output: exponent and a width-aligned mantissa.
///
/// For normal inputs (leading bit 1) the mantissa carries the hidden 1 in
/// its MSB and the fraction bits left-aligned below it, so the decoded
/// value is `2^exponent * mantissa / 2^(width-1)`. Subnormal inputs
/// (leading bit 0) keep the raw fraction with no hidden 1; the same
/// reconstruction formula applies with `exponent = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HwDecoded {
    /// Run length minus one for normal inputs, 0 for subnormals.
    pub exponent: u32,
    /// Width-bit mantissa, MSB set iff the input was normal.
    pub mantissa: u32,
    pub is_zero: bool,
    /// Leading bit was 0 (includes the zero pattern).
    pub is_subnormal: bool,
}

impl HwDecoded {
    /// Real value this decoder output represents at the given width.
    pub fn reconstruct(&self, width: u32) -> f64 {
        f64::from(self.mantissa) * f64::powi(2.0, self.exponent as i32 - (width as i32 - 1))
    }
}

fn check_width(bits: u32) -> Result<()> {
    if PE_WIDTHS.contains(&bits) {
        Ok(())
    } else {
        Err(Error::UnsupportedMode(format!("{bits}-bit datapath width")))
    }
}

/// Decodes a code word the way the hardware front-end does: count the
/// leading 1s to get the exponent, shift the remainder left, and insert the
/// normalized 1 in the MSB.
///
/// `0b1100_1010` at width 8 decodes to exponent `0b001` and mantissa
/// `0b1010_1000`.
pub fn decode_hw(code: u16, bits: u32) -> Result<HwDecoded> {
    check_width(bits)?;
    if u32::from(code) >= 1 << bits {
        return Err(Error::InvalidCode(format!("code {code:#b} does not fit {bits} bits")));
    }
    let field = u32::from(code);
    let mut run = 0;
    for b in (0..bits).rev() {
        if field >> b & 1 == 1 {
            run += 1;
        } else {
            break;
        }
    }
    if run == 0 {
        // Subnormal: raw fraction, no hidden 1. The zero pattern is the
        // zero-valued member of this branch.
        return Ok(HwDecoded {
            exponent: 0,
            mantissa: field,
            is_zero: field == 0,
            is_subnormal: true,
        });
    }
    let exponent = run - 1;
    let mantissa = if run == bits {
        1 << (bits - 1)
    } else {
        let frac_bits = bits - run - 1;
        let frac = field & ((1 << frac_bits) - 1);
        (1 << (bits - 1)) | (frac << (bits - 1 - frac_bits))
    };
    Ok(HwDecoded { exponent, mantissa, is_zero: false, is_subnormal: false })
}

/// Encodes a decoder-format value back into a code word: insert
/// `exponent + 1` ones in the MSBs and fill the remaining bits from the top
/// of the fraction, truncating surplus fraction bits toward zero.
/// Magnitudes past the format maximum saturate at the all-ones code.
pub fn encode_hw(d: &HwDecoded, bits: u32) -> Result<u16> {
    check_width(bits)?;
    if d.mantissa >= 1 << bits {
        return Err(Error::OperandRange(format!(
            "mantissa {:#b} does not fit {bits} bits",
            d.mantissa
        )));
    }
    if d.is_zero || d.mantissa == 0 {
        return Ok(0);
    }
    if d.is_subnormal {
        if d.mantissa >> (bits - 1) & 1 == 1 {
            return Err(Error::InvalidFields(
                "subnormal mantissa must have a clear MSB".into(),
            ));
        }
        return Ok(d.mantissa as u16);
    }
    if d.mantissa >> (bits - 1) & 1 == 0 {
        return Err(Error::InvalidFields(
            "normal mantissa must carry the hidden 1 in its MSB".into(),
        ));
    }
    let run = d.exponent + 1;
    if run >= bits {
        // exponent at or past the top binade: anything other than the
        // exact maximum overflows, and the maximum itself is the all-ones
        // pattern. Saturate.
        return Ok(((1u32 << bits) - 1) as u16);
    }
    let frac_bits = bits - run - 1;
    let fraction = d.mantissa & ((1 << (bits - 1)) - 1);
    let kept = fraction >> (bits - 1 - frac_bits);
    let ones = ((1u32 << run) - 1) << (bits - run);
    Ok((ones | kept) as u16)
}

/// Multiplies two mantissas by decomposing each into 2-bit slices, forming
/// every pairwise slice product, shifting each by the sum of its slice
/// offsets, and accumulating. This mirrors how the fused multiplier
/// composes low-precision units spatially.
pub fn fused_mul(a_mant: u32, w_mant: u32, mode: PrecisionMode) -> Result<u32> {
    if a_mant >= 1 << mode.a_bits {
        return Err(Error::OperandRange(format!(
            "activation mantissa {a_mant} exceeds {} bits",
            mode.a_bits
        )));
    }
    if w_mant >= 1 << mode.w_bits {
        return Err(Error::OperandRange(format!(
            "weight mantissa {w_mant} exceeds {} bits",
            mode.w_bits
        )));
    }
    let mut acc = 0u32;
    for sa in 0..mode.a_bits / 2 {
        for sw in 0..mode.w_bits / 2 {
            let pa = a_mant >> (2 * sa) & 0b11;
            let pw = w_mant >> (2 * sw) & 0b11;
            acc += (pa * pw) << (2 * (sa + sw));
        }
    }
    debug_assert_eq!(acc, a_mant * w_mant);
    Ok(acc)
}

/// Exponent addition. The mode names the adder configuration being reused;
/// the carry chain itself is modeled as plain integer addition.
pub fn exp_add(e_a: u32, e_w: u32, _mode: PrecisionMode) -> u32 {
    e_a + e_w
}

/// One multiply-accumulate through the emulated datapath: decode both
/// operands, fuse the mantissa product, add exponents, and accumulate the
/// reconstructed product in floating point. Products of these widths are
/// exact binary rationals, so the emulated path introduces no arithmetic
/// error.
pub fn mac(acc: f64, a_code: u16, w_code: u16, mode: PrecisionMode) -> Result<f64> {
    let a = decode_hw(a_code, mode.a_bits)?;
    let w = decode_hw(w_code, mode.w_bits)?;
    if a.is_zero || w.is_zero {
        return Ok(acc);
    }
    let mant = fused_mul(a.mantissa, w.mantissa, mode)?;
    let exp = exp_add(a.exponent, w.exponent, mode);
    let shift = exp as i32 - (mode.a_bits as i32 - 1) - (mode.w_bits as i32 - 1);
    Ok(acc + f64::from(mant) * f64::powi(2.0, shift))
}

/// Multiplications one PE completes per cycle in the given mode.
pub fn pe_throughput(mode: PrecisionMode) -> u32 {
    mode.throughput()
}
