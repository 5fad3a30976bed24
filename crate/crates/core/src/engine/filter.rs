use rayon::prelude::*;

use super::enumerate::CandidateSet;
use super::eval::{eval_bool, eval_int, EvalError, Scope};
use crate::dsl::{FilterMode, FilterSpec};
use crate::repr::{Namespace, Plan, StructuredRepresentation};

/// Evaluates every predicate on one plan.
pub fn plan_passes(
    spec: &FilterSpec,
    plan: &Plan,
    rep: &StructuredRepresentation,
) -> Result<bool, EvalError> {
    let scope = Scope::params(rep, Namespace::Constraints).with_plan(plan);
    for p in &spec.predicates {
        if !eval_bool(p, &scope)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Metric vector of a passing plan, or `None` if a predicate fails.
fn score(
    spec: &FilterSpec,
    metric: &[crate::dsl::Expr],
    plan: &Plan,
    rep: &StructuredRepresentation,
) -> Result<Option<Vec<i64>>, EvalError> {
    if !plan_passes(spec, plan, rep)? {
        return Ok(None);
    }
    let scope = Scope::params(rep, Namespace::Constraints).with_plan(plan);
    metric
        .iter()
        .map(|m| eval_int(m, &scope))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

/// Index of the selected candidate. Parallel, but the result equals the
/// sequential scan: the first passing candidate, or the first maximum.
pub fn select_candidate(
    spec: &FilterSpec,
    candidates: &CandidateSet,
    rep: &StructuredRepresentation,
) -> Result<Option<usize>, EvalError> {
    match &spec.mode {
        FilterMode::SatisfyFirst => (0..candidates.len())
            .into_par_iter()
            .find_map_first(|i| match plan_passes(spec, &candidates.get(i), rep) {
                Ok(true) => Some(Ok(i)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .transpose(),
        FilterMode::Maximize(metric) => {
            type Best = Result<Option<(Vec<i64>, usize)>, (usize, EvalError)>;
            let pick = |a: Best, b: Best| -> Best {
                match (a, b) {
                    (Err((i, e)), Err((j, f))) => Err(if i <= j { (i, e) } else { (j, f) }),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                    (Ok(None), x) | (x, Ok(None)) => x,
                    (Ok(Some((ma, ia))), Ok(Some((mb, ib)))) => {
                        let a_wins = ma > mb || (ma == mb && ia < ib);
                        Ok(Some(if a_wins { (ma, ia) } else { (mb, ib) }))
                    }
                }
            };
            (0..candidates.len())
                .into_par_iter()
                .map(|i| match score(spec, metric, &candidates.get(i), rep) {
                    Ok(s) => Ok(s.map(|m| (m, i))),
                    Err(e) => Err((i, e)),
                })
                .reduce(|| Ok(None), pick)
                .map(|best| best.map(|(_, i)| i))
                .map_err(|(_, e)| e)
        }
    }
}

/// Applies the filter, returning the selected plan if any candidate qualifies.
pub fn filter_plans(
    spec: &FilterSpec,
    candidates: &CandidateSet,
    rep: &StructuredRepresentation,
) -> Result<Option<Plan>, EvalError> {
    Ok(select_candidate(spec, candidates, rep)?.map(|i| candidates.get(i)))
}
