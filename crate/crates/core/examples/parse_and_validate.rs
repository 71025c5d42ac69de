//! Parse a scenario, print its canonical form and the validator's findings.
//!
//! cargo run --example parse_and_validate -- [path.scn]

use cpstest::dsl::{parse_scenario, serialize_scenario, validate_scenario};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/stop_sign_basic.scn").into());
    let text = std::fs::read_to_string(&path).expect("readable scenario");
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{path}:{e}");
            std::process::exit(2);
        }
    };
    print!("{}", serialize_scenario(&scenario));
    let report = validate_scenario(&scenario, true);
    println!("verdict: {:?}", report.verdict);
    for d in &report.diagnostics {
        println!("  [{:?}] {d}", d.stage);
    }
}
