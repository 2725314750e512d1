//! Walks a code word through the emulated hardware datapath: leading-one
//! detection, mantissa normalization, the fused 2-bit-slice multiplier,
//! and an exact multiply-accumulate dot product.
//!
//! ```bash
//! cargo run --example datapath_mac
//! ```

use dybit::format::{DyBitCode, FormatSpec};
use dybit::pe::{decode_hw, encode_hw, fused_mul, mac, pe_throughput, PrecisionMode};

fn main() {
    // Decode an 8-bit word: two leading 1s give exponent 1, the remaining
    // fraction bits are normalized with a hidden 1 in the MSB.
    let code = 0b1100_1010u16;
    let d = decode_hw(code, 8).unwrap();
    println!("decode {code:08b}:");
    println!("  exponent {:03b}  mantissa {:08b}", d.exponent, d.mantissa);
    println!("  value 2^{} * {}/128 = {}", d.exponent, d.mantissa, d.reconstruct(8));
    println!("  re-encoded: {:08b}", encode_hw(&d, 8).unwrap());
    println!();

    // The fused multiplier composes 2-bit slices; every partial product is
    // shifted by the sum of its slice offsets.
    let mode = PrecisionMode::new(4, 4).unwrap();
    let (a, w) = (0b1011u32, 0b0110u32);
    println!("fused {a:04b} x {w:04b} (4x4 mode):");
    for sa in 0..2 {
        for sw in 0..2 {
            let pa = a >> (2 * sa) & 0b11;
            let pw = w >> (2 * sw) & 0b11;
            println!(
                "  slice a[{sa}]={pa:02b} * w[{sw}]={pw:02b} -> {} << {}",
                pa * pw,
                2 * (sa + sw)
            );
        }
    }
    println!("  total {}", fused_mul(a, w, mode).unwrap());
    println!();

    // A short dot product through the datapath equals real arithmetic:
    // every intermediate is an exact binary rational.
    let spec = FormatSpec::unsigned(4).unwrap();
    let activations = [0b1001u16, 0b0101, 0b1110, 0b0011];
    let weights = [0b1100u16, 0b1000, 0b0001, 0b1011];
    let mut acc = 0.0;
    let mut reference = 0.0;
    for (&a, &w) in activations.iter().zip(&weights) {
        acc = mac(acc, a, w, mode).unwrap();
        reference += spec.decode(DyBitCode::new(a)).unwrap()
            * spec.decode(DyBitCode::new(w)).unwrap();
    }
    println!("dot product via datapath: {acc}");
    println!("dot product via f64:      {reference}");
    assert_eq!(acc, reference);
    println!();

    for (a_bits, w_bits) in [(8, 8), (4, 4), (4, 2), (2, 2)] {
        let m = PrecisionMode::new(a_bits, w_bits).unwrap();
        println!("mode {m}: {:>2} multiplies per PE per cycle", pe_throughput(m));
    }
}
