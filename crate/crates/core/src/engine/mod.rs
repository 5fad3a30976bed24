//! Deterministic execution of solver bundles.
//!
//! `enumerate_candidates` runs a combination spec into a [`CandidateSet`],
//! `filter_plans` selects one plan from it, and `render_answer` turns that
//! plan into text. [`check_failures`] evaluates a bundle against its build
//! example and [`infer`] chains the three stages for a new representation.

mod bundle;
mod enumerate;
mod eval;
mod failures;
mod filter;
mod render;

pub use bundle::{BundleError, SolverBundle, COMBINATION_FILE, DELIVER_FILE, FILTER_FILE, SCHEMA_FILE};
pub use enumerate::{enumerate_candidates, CandidateSet, Limit, DEFAULT_CANDIDATE_LIMIT, MAX_ITEMS};
pub use eval::{eval, eval_bool, eval_int, EvalError, Scope};
pub use failures::{
    answers_match, check_combination, check_deliver, check_failures, check_failures_with,
    check_filter, first_difference, normalize_answer, FailureReport, StageCheck,
};
pub use filter::{filter_plans, plan_passes, select_candidate};
pub use render::{clock12, render_answer};

use crate::dsl::CheckReport;
use crate::repr::{Plan, ReprError, StructuredRepresentation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("more than {limit} candidates")]
    LimitExceeded { limit: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("representation does not fit the bundle schema: {0}")]
    Schema(ReprError),
    #[error("bundle does not typecheck against this representation:\n{0}")]
    Typecheck(CheckReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inference {
    Delivered { answer: String, plan: Plan },
    /// The filter accepted no candidate.
    NonDelivery,
}

impl Inference {
    pub fn answer(&self) -> Option<&str> {
        match self {
            Inference::Delivered { answer, .. } => Some(answer),
            Inference::NonDelivery => None,
        }
    }
}

/// Runs a bundle on a representation of a new query. The bundle is only read.
pub fn infer(
    bundle: &SolverBundle,
    rep: &StructuredRepresentation,
    limit: Limit,
) -> Result<Inference, EngineError> {
    rep.validate_against(&bundle.schema)
        .map_err(EngineError::Schema)?;
    let report = bundle.check_against(rep);
    if !report.is_ok() {
        return Err(EngineError::Typecheck(report));
    }
    let candidates = enumerate_candidates(&bundle.combination, rep, limit)?;
    match filter_plans(&bundle.filter, &candidates, rep)? {
        None => Ok(Inference::NonDelivery),
        Some(plan) => Ok(Inference::Delivered {
            answer: render_answer(&bundle.deliver, &plan)?,
            plan,
        }),
    }
}
