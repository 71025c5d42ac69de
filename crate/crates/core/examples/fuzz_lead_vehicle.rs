//! Monitor-guided fuzzing of the lead-vehicle family.

use cpstest::abstraction::oracle_formula;
use cpstest::dsl::parse_scenario;
use cpstest::fuzz::{fuzz, FuzzConfig, FuzzInput};
use cpstest::sim::SimConfig;

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let seeds: Vec<FuzzInput> = ["lead_cruise", "lead_cruise_faulted"]
        .iter()
        .map(|n| {
            let text = std::fs::read_to_string(format!("{dir}/{n}.scn")).unwrap();
            FuzzInput::new(parse_scenario(&text).unwrap(), Vec::new())
        })
        .collect();
    let formula = oracle_formula(&seeds[0].scenario);
    let cfg = FuzzConfig {
        budget: 2000,
        event_kinds: vec!["NONE".into(), "NPC_BRAKE".into()],
        ..FuzzConfig::default()
    };
    let report = fuzz(&seeds, &formula, &cfg, &SimConfig::default()).unwrap();
    println!("formula   {}", report.formula);
    println!("executed  {} ({} skipped)", report.executions, report.skipped);
    println!(
        "coverage  {:.0}% states, {:.0}% transitions",
        report.coverage.states_pct, report.coverage.transitions_pct
    );
    for c in &report.counterexamples {
        let word: Vec<String> = c.word.iter().map(|e| e.to_string()).collect();
        println!("cex {} at iteration {}: [{}]", c.hash, c.iteration, word.join(","));
        let mut path = c.path.clone();
        path.dedup();
        println!("  residues {} ({} letters)", path.join(" => "), c.path.len() - 1);
    }
}
