//! L* against the simulator: which event words make the faulted
//! pedestrian scenario fail?

use cpstest::dsl::parse_scenario;
use cpstest::fuzz::fuzz_alphabet;
use cpstest::lstar::{learn, CachedTeacher, SimulatorTeacher};
use cpstest::sim::SimConfig;

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/pedestrian_faulted.scn");
    let s = parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap();
    let kinds = vec!["NONE".to_string(), "PED_CROSS".to_string()];
    let teacher = SimulatorTeacher::new(s.clone(), fuzz_alphabet(&s, &kinds), SimConfig::default(), 20, 0);
    let names = teacher.alphabet_names();
    let mut cached = CachedTeacher::new(teacher);
    let out = learn(&mut cached, &names, 500, 25).expect("learning converges");
    println!(
        "{} states after {} rounds, {} membership answers cached",
        out.dfa.states,
        out.rounds,
        cached.cache.len()
    );
    print!("{}", out.dfa.to_dot());
}
