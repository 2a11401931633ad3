//! Acceptance criteria. Prints one pass/fail line per criterion followed by
//! its measurements, and exits nonzero if any criterion fails.
//!
//! An optional argument selects criteria by name fragment or number.

use std::process::ExitCode;

use fhnet_core::verify;

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let outcomes = verify::run_all(filter.as_deref());
    for o in &outcomes {
        println!("{o}");
        for line in &o.lines {
            println!("    {line}");
        }
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    println!(
        "\nacceptance: {} passed, {} failed{}",
        outcomes.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" (criteria {})", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
