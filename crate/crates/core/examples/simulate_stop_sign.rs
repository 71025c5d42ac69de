//! The same stop-sign approach under a correct and a faulted controller.

use cpstest::abstraction::{simulate_labeled, PREDICATE_NAMES};
use cpstest::dsl::parse_scenario;
use cpstest::sim::SimConfig;

fn load(name: &str) -> cpstest::dsl::Scenario {
    let path = format!("{}/scenarios/{name}.scn", env!("CARGO_MANIFEST_DIR"));
    parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn main() {
    let cfg = SimConfig::default();
    for name in ["stop_sign_basic", "stop_sign_faulted"] {
        let s = load(name);
        let (trace, verdict, letters) = simulate_labeled(&s, &[], &cfg).unwrap();
        let last = trace.states.last().unwrap();
        println!(
            "{name}: {:?} after {} steps, ego at {:.1} m going {:.1} m/s",
            verdict.outcome,
            trace.states.len() - 1,
            last.ego_position(),
            last.ego_speed()
        );
        for v in &verdict.violated_clauses {
            println!("  violated {:?} at step {}", v.clause, v.first_violation_step);
        }
        // the abstract trace, collapsed to its distinct letters
        let mut shown = letters.letters.clone();
        shown.dedup();
        let rendered: Vec<String> = shown
            .iter()
            .map(|l| {
                let on: Vec<&str> = (0..PREDICATE_NAMES.len())
                    .filter(|p| l >> p & 1 == 1)
                    .map(|p| PREDICATE_NAMES[p])
                    .collect();
                format!("{{{}}}", on.join(","))
            })
            .collect();
        println!("  letters: {}", rendered.join(" "));
    }
}
