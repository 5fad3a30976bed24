//! Token pricing: built-in rates, a TOML override, and the cost of the
//! recorded trip build per agent role.
//!
//! ```text
//! cargo run --example cost_accounting
//! ```

use std::path::PathBuf;

use scope::agents::{build_solver, PipelineConfig};
use scope::llm::{compute_cost, PricingTable, ReplayStore, Usage};
use scope::repr::ExampleCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = PricingTable::default();
    let call = Usage {
        input_tokens: 1155,
        output_tokens: 177,
    };
    for model in ["gpt-4o", "o3", "gpt-5", "gemini-2.5-pro"] {
        println!("{model:<16} {:.6} USD for 1155 in / 177 out", compute_cost(&[call], model, &table)?);
    }

    let custom = PricingTable::with_toml("[models.house-model]\ninput_per_mtok = 0.5\noutput_per_mtok = 1.5\n")?;
    println!("house-model      {:.6} USD", compute_cost(&[call], "house-model", &custom)?);

    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/trip");
    let example = ExampleCase::parse(&std::fs::read_to_string(assets.join("exemplar.ex.json"))?)?;
    let store = ReplayStore::load(&assets.join("exemplar.transcript.jsonl"))?;
    let built = build_solver(&store.provider(), &example, &PipelineConfig::default())?;
    println!("\nrecorded build, priced as gpt-4o:");
    for (role, usage) in &built.record.usage {
        println!("  {role:<26} {:>6} in {:>6} out  {:.5} USD", usage.input_tokens, usage.output_tokens,
            compute_cost(&[*usage], "gpt-4o", &table)?);
    }
    let total = built.record.total_usage();
    println!("  {:<26} {:>6} in {:>6} out  {:.5} USD", "total", total.input_tokens, total.output_tokens,
        compute_cost(&[total], "gpt-4o", &table)?);
    Ok(())
}
