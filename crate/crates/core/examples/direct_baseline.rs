//! The direct baseline asks the model for the answer in one call, with no
//! solver. A stand-in model that only knows the small instances shows how
//! the report stratifies its success by complexity.
//!
//! ```text
//! cargo run --example direct_baseline
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use scope::agents::PromptSet;
use scope::bench::{evaluate_with, generate_dataset, report, EvalConfig, Method};
use scope::llm::{estimate_tokens, ChatExchange, ChatProvider, LlmError, Usage};

/// Answers queries it has memorized and shrugs otherwise.
#[derive(Clone)]
struct Memorized(Arc<BTreeMap<String, String>>);

impl ChatProvider for Memorized {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        let response = self
            .0
            .iter()
            .find(|(query, _)| prompt.contains(query.as_str()))
            .map_or_else(|| "I could not find a schedule.".to_string(), |(_, answer)| answer.clone());
        Ok(ChatExchange {
            role: role.to_string(),
            usage: Usage {
                input_tokens: estimate_tokens(prompt),
                output_tokens: estimate_tokens(&response),
            },
            prompt: prompt.to_string(),
            response,
            latency_s: 0.0,
        })
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        Box::new(self.clone())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset: Vec<_> = generate_dataset("meeting", 20, 12, 1..=4)?.into_iter().map(|(b, _)| b).collect();
    let known = dataset
        .iter()
        .filter(|inst| inst.complexity <= 2)
        .map(|inst| (inst.query.clone(), inst.gold_answer.clone()))
        .collect();

    let prompts = PromptSet::default();
    let config = EvalConfig {
        model: Some("gpt-4o".into()),
        ..EvalConfig::default()
    };
    let model = Memorized(Arc::new(known));
    let outcomes = evaluate_with(Method::Direct(&prompts), &model, &dataset, &config)?;
    print!("{}", report(&outcomes).to_csv());
    Ok(())
}
