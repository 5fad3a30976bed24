//! Replays the recorded trip build, then answers the exemplar and a new
//! three-city query with the resulting bundle.
//!
//! ```text
//! cargo run --example trip_worked_example
//! ```

use std::path::PathBuf;

use scope::agents::{build_solver, PipelineConfig, Stage};
use scope::domains::Instance;
use scope::engine::{check_failures, infer, Limit};
use scope::llm::ReplayStore;
use scope::repr::ExampleCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/trip");
    let example = ExampleCase::parse(&std::fs::read_to_string(assets.join("exemplar.ex.json"))?)?;
    let store = ReplayStore::load(&assets.join("exemplar.transcript.jsonl"))?;

    let built = build_solver(&store.provider(), &example, &PipelineConfig::default())?;
    for stage in [Stage::Combination, Stage::Filter, Stage::Deliver] {
        println!("{stage}: {} reflection round(s)", built.record.trace.reflection_rounds(stage));
    }
    print!("{}", check_failures(&built.bundle, &example, &built.solution));

    let own = infer(&built.bundle, &built.bundle.schema, Limit::default())?;
    assert_eq!(own.answer(), Some(example.answer.as_str()));
    println!("exemplar answer reproduced byte for byte");

    let venice = Instance::load(&assets.join("venice.inst.json"))?;
    println!("\n{}\n", venice.query_text());
    match infer(&built.bundle, &venice.to_representation(), Limit::default())?.answer() {
        Some(answer) => println!("{answer}"),
        None => println!("NON-DELIVERY"),
    }
    Ok(())
}
