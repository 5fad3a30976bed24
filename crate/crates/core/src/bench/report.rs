use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{delivery_rate, micro_macro_pass_rates, success_rate, BenchOutcome};
use crate::value::canonical_json;

pub const CSV_HEADER: &str = "level,count,success_rate,mean_cost_usd,mean_latency_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    /// Complexity level; `None` for the overall row.
    pub level: Option<u32>,
    pub count: usize,
    pub success_rate: f64,
    pub delivery_rate: f64,
    pub mean_cost_usd: f64,
    pub mean_latency_s: f64,
}

impl LevelRow {
    fn of(level: Option<u32>, outcomes: &[BenchOutcome]) -> Self {
        let n = outcomes.len().max(1) as f64;
        LevelRow {
            level,
            count: outcomes.len(),
            success_rate: success_rate(outcomes),
            delivery_rate: delivery_rate(outcomes),
            mean_cost_usd: outcomes.iter().map(|o| o.cost_usd).sum::<f64>() / n,
            mean_latency_s: outcomes.iter().map(|o| o.latency_s).sum::<f64>() / n,
        }
    }

    fn csv_line(&self) -> String {
        let level = self.level.map_or_else(|| "all".to_string(), |l| l.to_string());
        format!(
            "{level},{},{:.3},{:.6},{:.3}",
            self.count, self.success_rate, self.mean_cost_usd, self.mean_latency_s
        )
    }
}

/// Outcomes grouped by complexity level, plus an overall row when there is
/// at least one outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub levels: Vec<LevelRow>,
    pub overall: Option<LevelRow>,
    pub micro_pass_rate: Option<f64>,
    pub macro_pass_rate: Option<f64>,
}

pub fn report(outcomes: &[BenchOutcome]) -> BenchReport {
    let mut by_level: BTreeMap<u32, Vec<BenchOutcome>> = BTreeMap::new();
    for o in outcomes {
        by_level.entry(o.complexity).or_default().push(o.clone());
    }
    let pass = (!outcomes.is_empty())
        .then(|| micro_macro_pass_rates(outcomes))
        .flatten();
    BenchReport {
        levels: by_level
            .iter()
            .map(|(l, os)| LevelRow::of(Some(*l), os))
            .collect(),
        overall: (!outcomes.is_empty()).then(|| LevelRow::of(None, outcomes)),
        micro_pass_rate: pass.map(|p| p.0),
        macro_pass_rate: pass.map(|p| p.1),
    }
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in self.levels.iter().chain(&self.overall) {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("report serializes"))
    }

    pub fn level(&self, level: u32) -> Option<&LevelRow> {
        self.levels.iter().find(|r| r.level == Some(level))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(id: &str, level: u32, exact: bool, cost: f64) -> BenchOutcome {
        BenchOutcome {
            id: id.into(),
            complexity: level,
            delivered: true,
            answer: Some("x".into()),
            exact_match: exact,
            per_constraint: None,
            cost_usd: cost,
            latency_s: 1.0,
            error: None,
        }
    }

    #[test]
    fn groups_by_level_with_overall() {
        let r = report(&[o("a", 3, true, 0.002), o("b", 3, false, 0.004), o("c", 4, true, 0.0)]);
        assert_eq!(
            r.to_csv(),
            "level,count,success_rate,mean_cost_usd,mean_latency_s\n\
             3,2,0.500,0.003000,1.000\n\
             4,1,1.000,0.000000,1.000\n\
             all,3,0.667,0.002000,1.000\n"
        );
        let total: usize = r.levels.iter().map(|l| l.count).sum();
        assert_eq!(total, r.overall.as_ref().unwrap().count);
        assert_eq!(r.micro_pass_rate, None);
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = report(&[]);
        assert_eq!(r.to_csv(), format!("{CSV_HEADER}\n"));
        assert!(r.overall.is_none());
    }

    #[test]
    fn rendering_is_stable() {
        let outcomes = [o("a", 5, true, 0.1), o("b", 6, false, 0.2)];
        assert_eq!(report(&outcomes).to_json_string(), report(&outcomes).to_json_string());
    }
}
