//! Central-difference check of the analytic gradients of all four
//! variants, plus a deliberately corrupted gradient that must be caught.
//!
//! `cargo run --release --example gradient_check`

use std::error::Error;

use dglstm::cli::{gradcheck, GradcheckOptions};
use dglstm::model::Variant;

pub fn run() -> Result<bool, Box<dyn Error>> {
    let mut all_passed = true;
    for variant in [Variant::Dg, Variant::H, Variant::D, Variant::S] {
        let outcome = gradcheck(&GradcheckOptions { variant, ..GradcheckOptions::default() }, 0)?;
        println!(
            "{variant}: {} entries, max relative error {:.2e} at {}[{}] -> {}",
            outcome.entries_checked,
            outcome.max_rel_error,
            outcome.worst_param,
            outcome.worst_index,
            if outcome.passed { "pass" } else { "FAIL" }
        );
        all_passed &= outcome.passed;
    }
    let corrupted = gradcheck(&GradcheckOptions { corrupt: true, ..GradcheckOptions::default() }, 0)?;
    println!("corrupted gradient: max relative error {:.2e}, detected: {}", corrupted.max_rel_error, !corrupted.passed);
    Ok(all_passed && !corrupted.passed)
}

fn main() -> Result<(), Box<dyn Error>> {
    if !run()? {
        std::process::exit(1);
    }
    Ok(())
}
