//! Prints the value tables of several code spaces and shows how the gap
//! between representable values tapers with magnitude.
//!
//! ```bash
//! cargo run --example value_table
//! ```

use dybit::format::FormatSpec;

fn print_table(spec: &FormatSpec, label: &str) {
    println!("{label} ({} codes)", spec.code_count());
    for (code, value) in spec.enumerate_values().unwrap() {
        println!(
            "  {:0width$b} -> {}",
            code.bits(),
            value,
            width = spec.total_bits as usize
        );
    }
    println!();
}

fn main() {
    print_table(&FormatSpec::unsigned(2).unwrap(), "2-bit unsigned");
    print_table(&FormatSpec::unsigned(3).unwrap(), "3-bit unsigned");
    print_table(&FormatSpec::unsigned(4).unwrap(), "4-bit unsigned");
    print_table(&FormatSpec::signed(3).unwrap(), "3-bit signed (sign + 2-bit magnitude)");

    // Precision tapers: steps are fine near zero and coarse near the top.
    let spec = FormatSpec::unsigned(4).unwrap();
    let values: Vec<f64> = spec.enumerate_values().unwrap().iter().map(|(_, v)| *v).collect();
    println!("4-bit unsigned gaps (non-decreasing):");
    for w in values.windows(2) {
        println!("  {:>5} -> {:>5}  gap {}", w[0], w[1], w[1] - w[0]);
    }
    println!();
    println!(
        "range: [{}, {}], smallest nonzero {}",
        0,
        spec.max_value(),
        spec.min_positive()
    );
}
