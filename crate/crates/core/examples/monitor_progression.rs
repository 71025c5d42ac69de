//! Step a progression monitor letter by letter and print each residue.

use cpstest::ltl::Formula;
use cpstest::monitor::MonitorAutomaton;

fn main() {
    let names = vec!["request".to_string(), "grant".to_string()];
    let f = Formula::parse("G (implies request (F grant))", &names).unwrap();
    let mut m = MonitorAutomaton::new(&f, names.clone());
    // letters: bit 0 = request, bit 1 = grant
    let word = [0b00, 0b01, 0b00, 0b10, 0b01];
    let run = m.run(&word);
    for (k, id) in run.path.iter().enumerate() {
        let r = &m.states()[*id];
        let read = if k == 0 { "start".to_string() } else { format!("{:02b}", word[k - 1]) };
        println!("{read:>5}  s{id}  {}", r.to_text(&names));
    }
    println!("verdict {:?}", run.verdict);

    let safety = Formula::parse("G ! grant", &names).unwrap();
    let mut s = MonitorAutomaton::new(&safety, names);
    let run = s.run(&[0b00, 0b01, 0b10, 0b00]);
    println!("G !grant: {:?} at letter {:?}", run.verdict, run.decided_at);
    s.explore(4);
    print!("{}", s.to_dot());
}
