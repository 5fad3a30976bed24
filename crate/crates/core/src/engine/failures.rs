use std::fmt;

use super::bundle::SolverBundle;
use super::enumerate::{enumerate_candidates, CandidateSet, Limit};
use super::filter::filter_plans;
use super::render::render_answer;
use crate::dsl::{CombinationSpec, DeliverSpec, FilterSpec};
use crate::repr::{ExampleCase, Plan, StructuredRepresentation, StructuredSolution};

/// Answer text with trailing whitespace removed from every line and at most
/// one trailing newline dropped.
pub fn normalize_answer(text: &str) -> String {
    let text = text.replace("\r\n", "\n");
    let body = text.strip_suffix('\n').unwrap_or(&text);
    body.split('\n')
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn answers_match(produced: &str, expected: &str) -> bool {
    normalize_answer(produced) == normalize_answer(expected)
}

/// Character offset of the first difference, `None` when equal.
pub fn first_difference(a: &str, b: &str) -> Option<usize> {
    let mut ai = a.chars();
    let mut bi = b.chars();
    let mut i = 0;
    loop {
        match (ai.next(), bi.next()) {
            (None, None) => return None,
            (x, y) if x != y => return Some(i),
            _ => i += 1,
        }
    }
}

/// Result of checking one solver stage against the example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCheck {
    /// Why the stage failed; `None` when it passed.
    pub failure: Option<String>,
    /// What the stage produced, for reflection prompts.
    pub observed: String,
}

impl StageCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    fn fail(failure: String, observed: String) -> Self {
        StageCheck {
            failure: Some(failure),
            observed,
        }
    }
}

const SHOWN_CANDIDATES: usize = 3;

/// Combination stage: the gold plan must be among the candidates.
pub fn check_combination(
    spec: &CombinationSpec,
    rep: &StructuredRepresentation,
    gold: &Plan,
    limit: Limit,
) -> (StageCheck, Option<CandidateSet>) {
    let candidates = match enumerate_candidates(spec, rep, limit) {
        Ok(c) => c,
        Err(e) => {
            let msg = format!("enumeration failed: {e}");
            return (StageCheck::fail(msg.clone(), msg), None);
        }
    };
    let mut observed = format!("{} candidate plans", candidates.len());
    for (i, plan) in candidates.iter().take(SHOWN_CANDIDATES).enumerate() {
        observed.push_str(&format!("\ncandidate {i}: {plan}"));
    }
    let check = match candidates.position(gold) {
        Some(i) => StageCheck {
            failure: None,
            observed: format!("{observed}\ngold plan is candidate {i}"),
        },
        None => {
            let detail = match candidates.iter().next() {
                Some(first) if first.fields() != gold.fields() => format!(
                    "candidates carry fields {:?} but the gold plan has {:?}",
                    first.fields(),
                    gold.fields()
                ),
                Some(_) => format!(
                    "gold plan is not among the {} candidates",
                    candidates.len()
                ),
                None => "no candidates were produced".to_string(),
            };
            StageCheck::fail(detail, observed)
        }
    };
    (check, Some(candidates))
}

/// Filter stage: the selected plan must equal the gold plan.
pub fn check_filter(
    spec: &FilterSpec,
    candidates: &CandidateSet,
    rep: &StructuredRepresentation,
    gold: &Plan,
) -> StageCheck {
    match filter_plans(spec, candidates, rep) {
        Err(e) => {
            let msg = format!("filter failed: {e}");
            StageCheck::fail(msg.clone(), msg)
        }
        Ok(None) => StageCheck::fail(
            format!("no plan selected from {} candidates", candidates.len()),
            "no plan selected".into(),
        ),
        Ok(Some(plan)) if plan.same_records(gold) => StageCheck {
            failure: None,
            observed: format!("selected {plan}"),
        },
        Ok(Some(plan)) => {
            let row = (0..plan.len().max(gold.len()))
                .find(|&i| i >= plan.len() || i >= gold.len() || plan.rows()[i] != gold.rows()[i])
                .unwrap_or(0);
            StageCheck::fail(
                format!("selected plan differs from the gold plan at record {row}"),
                format!("selected {plan}"),
            )
        }
    }
}

/// Deliver stage: rendering the gold plan must reproduce the example answer.
pub fn check_deliver(spec: &DeliverSpec, gold: &Plan, expected: &str) -> StageCheck {
    match render_answer(spec, gold) {
        Err(e) => {
            let msg = format!("rendering failed: {e}");
            StageCheck::fail(msg.clone(), msg)
        }
        Ok(text) => {
            let (a, b) = (normalize_answer(&text), normalize_answer(expected));
            match first_difference(&a, &b) {
                None => StageCheck {
                    failure: None,
                    observed: text,
                },
                Some(offset) => StageCheck::fail(
                    format!("answer differs from the expected text at character {offset}"),
                    text,
                ),
            }
        }
    }
}

/// Outcome of the three solver checks on the build example.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FailureReport {
    pub combination: Option<String>,
    pub filter: Option<String>,
    pub deliver: Option<String>,
}

impl FailureReport {
    pub fn combination_failed(&self) -> bool {
        self.combination.is_some()
    }

    pub fn filter_failed(&self) -> bool {
        self.filter.is_some()
    }

    pub fn deliver_failed(&self) -> bool {
        self.deliver.is_some()
    }

    pub fn all_passed(&self) -> bool {
        !(self.combination_failed() || self.filter_failed() || self.deliver_failed())
    }
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, detail) in [
            ("combination", &self.combination),
            ("filter", &self.filter),
            ("deliver", &self.deliver),
        ] {
            match detail {
                None => writeln!(f, "{name}: ok")?,
                Some(d) => writeln!(f, "{name}: FAILED ({d})")?,
            }
        }
        Ok(())
    }
}

/// Runs all three checks with the bundle's own schema as the example's
/// representation.
pub fn check_failures(
    bundle: &SolverBundle,
    example: &ExampleCase,
    gold: &StructuredSolution,
) -> FailureReport {
    check_failures_with(bundle, example, gold, Limit::default())
}

pub fn check_failures_with(
    bundle: &SolverBundle,
    example: &ExampleCase,
    gold: &StructuredSolution,
    limit: Limit,
) -> FailureReport {
    let (comb, candidates) =
        check_combination(&bundle.combination, &bundle.schema, &gold.records, limit);
    let filter = match &candidates {
        Some(c) => check_filter(&bundle.filter, c, &bundle.schema, &gold.records),
        None => StageCheck::fail("no candidates to filter".into(), String::new()),
    };
    let deliver = check_deliver(&bundle.deliver, &gold.records, &example.answer);
    FailureReport {
        combination: comb.failure,
        filter: filter.failure,
        deliver: deliver.failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_narrow() {
        assert_eq!(normalize_answer("a  \nb\t\n"), "a\nb");
        assert_eq!(normalize_answer("a\r\nb"), "a\nb");
        assert_ne!(normalize_answer("a\n\n"), normalize_answer("a"));
        assert_ne!(normalize_answer(" a"), normalize_answer("a"));
    }

    #[test]
    fn difference_offsets() {
        assert_eq!(first_difference("abc", "abc"), None);
        assert_eq!(first_difference("abc", "abd"), Some(2));
        assert_eq!(first_difference("ab", "abc"), Some(2));
        assert_eq!(first_difference("é1", "é2"), Some(1));
    }
}
