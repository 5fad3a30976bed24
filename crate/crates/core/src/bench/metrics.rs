use super::BenchOutcome;

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Exact matches over all outcomes; `0` for none.
pub fn success_rate(outcomes: &[BenchOutcome]) -> f64 {
    fraction(outcomes.iter().filter(|o| o.exact_match).count(), outcomes.len())
}

pub fn delivery_rate(outcomes: &[BenchOutcome]) -> f64 {
    fraction(outcomes.iter().filter(|o| o.delivered).count(), outcomes.len())
}

/// `(micro, macro)`: satisfied constraints over all constraints, and plans
/// satisfying all of their constraints over all plans. `None` when some
/// outcome has no per-constraint results.
///
/// `macro <= micro` holds whenever every plan is checked against the same
/// number of constraints; with unequal counts the pooled micro rate can fall
/// below it.
pub fn micro_macro_pass_rates(outcomes: &[BenchOutcome]) -> Option<(f64, f64)> {
    let mut satisfied = 0;
    let mut total = 0;
    let mut all = 0;
    for o in outcomes {
        let checks = o.per_constraint.as_ref()?;
        satisfied += checks.iter().filter(|(_, ok)| *ok).count();
        total += checks.len();
        all += usize::from(checks.iter().all(|(_, ok)| *ok));
    }
    Some((fraction(satisfied, total), fraction(all, outcomes.len())))
}
