//! The bundled CDCL solver on pigeonhole instances.

use cpstest::sat::{solve_with_stats, verify, Cnf, SatResult};

/// `pigeons` pigeons into `holes` holes, at most one per hole.
fn pigeonhole(pigeons: usize, holes: usize) -> Cnf {
    let mut cnf = Cnf::new();
    let x: Vec<Vec<i32>> = (0..pigeons).map(|_| (0..holes).map(|_| cnf.new_var()).collect()).collect();
    for row in &x {
        cnf.add(row.clone());
    }
    for h in 0..holes {
        for a in 0..pigeons {
            for b in a + 1..pigeons {
                cnf.add(vec![-x[a][h], -x[b][h]]);
            }
        }
    }
    cnf
}

fn main() {
    for (p, h) in [(4, 4), (5, 4), (7, 6)] {
        let cnf = pigeonhole(p, h);
        let (result, stats) = solve_with_stats(&cnf);
        let answer = match &result {
            SatResult::Sat(a) => format!("sat (verified: {})", verify(&cnf, a)),
            SatResult::Unsat => "unsat".to_string(),
        };
        println!(
            "{p} pigeons, {h} holes: {answer}; {} conflicts, {} decisions, {} restarts",
            stats.conflicts, stats.decisions, stats.restarts
        );
    }
}
