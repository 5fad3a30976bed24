//! Evaluates the replayed trip bundle on a generated dataset and prints the
//! per-level report. The Input Agent is played by the domain parser, so no
//! model is contacted.
//!
//! ```text
//! cargo run --release --example bench_report [count]
//! ```

use std::path::PathBuf;

use scope::agents::{build_solver, PipelineConfig, PromptSet};
use scope::bench::{evaluate, generate_dataset, report, EvalConfig, EvalContext, OracleInputAgent};
use scope::llm::ReplayStore;
use scope::repr::ExampleCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(36);
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/trip");
    let example = ExampleCase::parse(&std::fs::read_to_string(assets.join("exemplar.ex.json"))?)?;
    let store = ReplayStore::load(&assets.join("exemplar.transcript.jsonl"))?;
    let built = build_solver(&store.provider(), &example, &PipelineConfig::default())?;

    let dataset: Vec<_> = generate_dataset("trip", 1, count, 3..=8)?.into_iter().map(|(b, _)| b).collect();
    let exemplar = built.record.exemplar(&built.bundle);
    let prompts = PromptSet::default();
    let ctx = EvalContext {
        bundle: &built.bundle,
        exemplar: &exemplar,
        prompts: &prompts,
    };
    let config = EvalConfig {
        jobs: 4,
        model: Some("gpt-4o".into()),
        ..EvalConfig::default()
    };
    let outcomes = evaluate(ctx, &OracleInputAgent::new("trip"), &dataset, &config)?;
    print!("{}", report(&outcomes).to_csv());
    Ok(())
}
