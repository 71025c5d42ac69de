//! Learn the smallest LTLf formula separating passing from failing runs.

use cpstest::abstraction::{simulate_labeled, Label, PredicateSet};
use cpstest::dsl::parse_scenario;
use cpstest::ltl::{learn_minimal, TraceSample};
use cpstest::sim::{parse_word, SimConfig};

fn main() {
    let cfg = SimConfig::default();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let mut sample = TraceSample::default();
    for name in ["lead_cruise", "lead_cruise_faulted", "rain_following"] {
        let s = parse_scenario(&std::fs::read_to_string(format!("{dir}/{name}.scn")).unwrap()).unwrap();
        for word in ["", "NPC_BRAKE(lead)", "NONE,NONE,NONE,NPC_BRAKE(lead)"] {
            let w = parse_word(word).unwrap();
            let (_, _, lt) = simulate_labeled(&s, &w, &cfg).unwrap();
            println!("{name:<20} {word:<32} {:?}", lt.label);
            match lt.label {
                Label::Positive => sample.positives.push(lt),
                Label::Negative => sample.negatives.push(lt),
                Label::Unlabeled => {}
            }
        }
    }
    let learned = learn_minimal(&sample, 6).expect("a separating formula exists");
    println!("learned (size {}): {}", learned.size, learned.formula.to_text(&PredicateSet::names()));
}
