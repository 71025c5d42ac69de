//! The whole pipeline through the command-line entry point, writing its
//! artifacts to a scratch directory.

use std::path::PathBuf;

fn main() {
    let out: PathBuf = std::env::temp_dir().join("cpstest-pipeline-example");
    let scenarios = out.join("scenarios");
    std::fs::create_dir_all(&scenarios).unwrap();
    for n in ["lead_cruise", "lead_cruise_faulted"] {
        let src = format!("{}/scenarios/{n}.scn", env!("CARGO_MANIFEST_DIR"));
        std::fs::copy(src, scenarios.join(format!("{n}.scn"))).unwrap();
    }
    let config = out.join("pipeline.toml");
    std::fs::write(
        &config,
        "[lstar]\nevent_kinds = [\"NONE\", \"NPC_BRAKE\"]\n[fuzz]\nevent_kinds = [\"NONE\", \"NPC_BRAKE\"]\nbudget = 2000\n",
    )
    .unwrap();
    let run_dir = out.join("run");
    let args = [
        "cpstest",
        "--config",
        config.to_str().unwrap(),
        "--rng-seed",
        "1",
        "--out",
        run_dir.to_str().unwrap(),
        "pipeline",
        "--scenarios",
        scenarios.to_str().unwrap(),
    ];
    let code = cpstest::cli::run(args);
    println!("exit code {code} (2 means counterexamples were found)");
    for entry in std::fs::read_dir(&run_dir).unwrap() {
        println!("  {}", entry.unwrap().path().display());
    }
}
