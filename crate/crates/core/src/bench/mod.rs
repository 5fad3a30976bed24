//! Benchmark datasets, evaluation and reporting.
//!
//! A dataset is a JSON array or JSON-lines file of records carrying an id, a
//! query and a gold answer. [`evaluate`] runs a solver bundle over it through
//! the Input Agent, [`report`] stratifies the outcomes by complexity level.

mod eval;
mod metrics;
mod mock;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

pub use eval::{
    evaluate, evaluate_direct_instance, evaluate_instance, evaluate_with, EvalConfig, EvalContext, Method,
};
pub use metrics::{delivery_rate, micro_macro_pass_rates, success_rate};
pub use mock::OracleInputAgent;
pub use report::{report, BenchReport, LevelRow, CSV_HEADER};

use crate::domains::Instance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchInstance {
    pub id: String,
    pub query: String,
    pub gold_answer: String,
    /// Number of cities or friends.
    pub complexity: u32,
    /// Domain the query belongs to, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub id: String,
    pub complexity: u32,
    pub delivered: bool,
    pub answer: Option<String>,
    /// Implies `delivered`.
    pub exact_match: bool,
    /// `(constraint id, satisfied)` when the domain has a checker.
    pub per_constraint: Option<Vec<(String, bool)>>,
    pub cost_usd: f64,
    pub latency_s: f64,
    /// Why nothing was delivered, if an error was the cause.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("malformed dataset: {0}")]
    MalformedDataset(String),
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("evaluation setup: {0}")]
    Setup(String),
}

/// Upstream field names for the canonical record fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetAdapter {
    pub id: String,
    pub query: String,
    pub gold_answer: String,
    pub complexity: String,
    pub domain: String,
}

impl Default for DatasetAdapter {
    fn default() -> Self {
        DatasetAdapter {
            id: "id".into(),
            query: "query".into(),
            gold_answer: "gold_answer".into(),
            complexity: "complexity".into(),
            domain: "domain".into(),
        }
    }
}

fn records(text: &str) -> Result<Vec<Json>, BenchError> {
    let malformed = |m: String| BenchError::MalformedDataset(m);
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') {
        return serde_json::from_str::<Vec<Json>>(trimmed).map_err(|e| malformed(e.to_string()));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| malformed(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Number of cities or friends a query mentions.
pub fn complexity_from_query(query: &str, domain: Option<&str>) -> Option<u32> {
    let domains = match domain {
        Some(d) => vec![d],
        None => vec!["trip", "meeting"],
    };
    for d in domains {
        if let Ok(inst) = Instance::parse_query(d, query) {
            return Some(inst.complexity() as u32);
        }
    }
    let re = Regex::new(r"visit (\d+) (?:European )?cities").expect("valid regex");
    re.captures(query).and_then(|m| m[1].parse().ok())
}

/// Parses dataset text. Complexity is derived from the query when the
/// record has none.
pub fn parse_dataset(text: &str, adapter: &DatasetAdapter) -> Result<Vec<BenchInstance>, BenchError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, rec) in records(text)?.into_iter().enumerate() {
        let malformed = |m: String| BenchError::MalformedDataset(format!("record {i}: {m}"));
        let obj = rec.as_object().ok_or_else(|| malformed("not an object".into()))?;
        let text_field = |name: &str| -> Result<String, BenchError> {
            match obj.get(name) {
                Some(Json::String(s)) => Ok(s.clone()),
                Some(Json::Number(n)) if name == adapter.id => Ok(n.to_string()),
                Some(_) => Err(malformed(format!("`{name}` must be text"))),
                None => Err(malformed(format!("missing `{name}`"))),
            }
        };
        let id = text_field(&adapter.id)?;
        let query = text_field(&adapter.query)?;
        let gold_answer = text_field(&adapter.gold_answer)?;
        let domain = obj.get(&adapter.domain).and_then(Json::as_str).map(str::to_string);
        let complexity = match obj.get(&adapter.complexity) {
            Some(v) => v
                .as_u64()
                .and_then(|c| u32::try_from(c).ok())
                .ok_or_else(|| malformed(format!("`{}` must be a non-negative integer", adapter.complexity)))?,
            None => complexity_from_query(&query, domain.as_deref())
                .ok_or_else(|| malformed("no complexity given and none found in the query".into()))?,
        };
        if !seen.insert(id.clone()) {
            return Err(BenchError::DuplicateId(id));
        }
        out.push(BenchInstance {
            id,
            query,
            gold_answer,
            complexity,
            domain,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, adapter: &DatasetAdapter) -> Result<Vec<BenchInstance>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text, adapter)
}

/// JSON-lines text of a dataset, one record per line.
pub fn dataset_to_jsonl(instances: &[BenchInstance]) -> String {
    instances
        .iter()
        .map(|i| {
            serde_json::to_string(i).expect("instance serializes") + "\n"
        })
        .collect()
}

/// The first `n` instances of each complexity level, in id order.
pub fn sample_per_level(instances: &[BenchInstance], n: usize) -> Vec<BenchInstance> {
    let mut sorted: Vec<&BenchInstance> = instances.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut taken: BTreeMap<u32, usize> = BTreeMap::new();
    sorted
        .into_iter()
        .filter(|i| {
            let k = taken.entry(i.complexity).or_default();
            *k += 1;
            *k <= n
        })
        .cloned()
        .collect()
}

/// Seeded synthetic dataset: `count` instances spread evenly over
/// `levels`, instance `i` generated from seed `seed + i`.
pub fn generate_dataset(
    domain: &str,
    seed: u64,
    count: usize,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<Vec<(BenchInstance, Instance)>, BenchError> {
    let span: Vec<u32> = levels.collect();
    if span.is_empty() {
        return Err(BenchError::MalformedDataset("empty level range".into()));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let level = span[i % span.len()];
        let s = seed + i as u64;
        let generated = match domain {
            "trip" => crate::domains::generate_trip_instance(s, level as usize).map(|(t, _)| Instance::Trip(t)),
            "meeting" => crate::domains::generate_meeting_instance(s, level as usize).map(Instance::Meeting),
            other => return Err(BenchError::MalformedDataset(format!("unknown domain `{other}`"))),
        };
        let inst = generated.map_err(|e| BenchError::MalformedDataset(e.to_string()))?;
        let gold_answer = inst
            .solve_and_render()
            .ok_or_else(|| BenchError::MalformedDataset(format!("generated {domain} instance {i} has no solution")))?;
        out.push((
            BenchInstance {
                id: format!("{domain}-{level}-{s:05}"),
                query: inst.query_text(),
                gold_answer,
                complexity: level,
                domain: Some(domain.to_string()),
            },
            inst,
        ));
    }
    Ok(out)
}
