//! Drives the agent pipeline from a script and prints every Stage II
//! attempt: the first combination spec fails the containment check and the
//! reflection agent's correction passes.
//!
//! ```text
//! cargo run --example refinement_loop
//! ```

use std::path::PathBuf;

use scope::agents::{build_solver, AgentError, PipelineConfig};
use scope::llm::ScriptedProvider;
use scope::repr::ExampleCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/trip");
    let example = ExampleCase::parse(&std::fs::read_to_string(assets.join("exemplar.ex.json"))?)?;
    let script = assets.join("exemplar.script.json");

    let built = build_solver(&ScriptedProvider::load(&script)?, &example, &PipelineConfig::default())?;
    for stage in &built.record.trace.stages {
        for (i, attempt) in stage.attempts.iter().enumerate() {
            let verdict = attempt.failure.as_deref().unwrap_or("passed");
            println!("{} attempt {} ({}): {}", stage.stage, i + 1, attempt.role, first_line(verdict));
        }
    }

    // With patience 1 the failing first attempt is final.
    let strict = PipelineConfig {
        patience: 1,
        ..PipelineConfig::default()
    };
    match build_solver(&ScriptedProvider::load(&script)?, &example, &strict) {
        Err(AgentError::PatienceExhausted { stage, attempts, .. }) => {
            println!("patience 1: {stage} gave up after {attempts} attempt(s)")
        }
        other => println!("patience 1: unexpected {:?}", other.map(|b| b.record.trace)),
    }
    Ok(())
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}
