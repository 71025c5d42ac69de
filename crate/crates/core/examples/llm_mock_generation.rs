//! Scenario generation with a scripted provider: one draft is broken,
//! the repair round fixes it.

use cpstest::llm::{generate_scenarios, GenerationJob, MockProvider};
use cpstest::sim::SimConfig;

const GOOD: &str = "scenario school_zone {
  environment { weather: clear; time: day; }
  road { type: straight; markers: [crosswalk @ 90.0]; signs: []; }
  actors {
    ego { position: 0.0; speed: 8.0; controller: rule_follower; }
    pedestrian kid { crossing: 90.0; trigger: 150.0; }
  }
  oracle { longitudinal: [yield_to_pedestrian(kid)]; lateral: []; }
}";

fn main() {
    // the second draft yields to a pedestrian that does not exist
    let broken = GOOD.replace("yield_to_pedestrian(kid)", "yield_to_pedestrian(nobody)");
    let draft = format!("```\n{GOOD}\n---\n{broken}\n```");
    let provider = MockProvider::new([draft, GOOD.replace("school_zone", "school_zone_2")]);
    let mut job = GenerationJob::new("Yield to pedestrians on crosswalks.", 2);
    job.config.retry.base_delay_ms = 0;
    let result = generate_scenarios(&job, &provider, &SimConfig::default()).unwrap();
    for a in &result.accepted {
        println!(
            "accepted {} (candidate {}, repair round {})",
            a.scenario.name, a.provenance.candidate, a.provenance.repair_round
        );
    }
    for r in &result.rejected {
        println!("rejected candidate {}", r.provenance.candidate);
    }
    for (i, (prompt, params)) in provider.prompts().iter().enumerate() {
        let first = prompt.lines().next().unwrap_or_default();
        println!("prompt {i}: {first} (temperature {})", params.temperature);
    }
}
