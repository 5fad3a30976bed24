//! Hand-written combination, filter and deliver specs run by the engine on
//! a generated seven-city trip, with the oracle as a cross-check.
//!
//! ```text
//! cargo run --example engine_pipeline
//! ```

use scope::domains::{generate_trip_instance, solve_trip_oracle};
use scope::dsl::{parse_solver_spec, SolverSpec};
use scope::engine::{enumerate_candidates, filter_plans, render_answer, Limit};

const COMBINATION: &str = r#"{"kind": "combination",
  "root": {"op": "permutations", "args": [{"op": "param_ref", "path": ["cities"]}],
           "prune": [{"op": "pairs_in_edge_set", "args": [{"op": "param_ref", "path": ["direct_flights"]}]}],
           "emit": {"op": "sequential_day_assignment", "overlap": 1,
                    "args": [{"op": "param_ref", "path": ["city_stays"]}]}}}"#;

const FILTER: &str = r#"{"kind": "filter", "mode": "satisfy_first",
  "predicates": [{"op": "contains_days", "key_field": "city", "days_field": "days",
                  "args": [{"op": "param_ref", "path": ["specific_days"]}]}]}"#;

const DELIVER: &str = r#"{"kind": "deliver", "template": [
  {"op": "each", "body": [
    {"op": "field", "args": [{"op": "record_field", "name": "city"}]},
    ": days ",
    {"op": "field", "args": [{"op": "first", "args": [{"op": "record_field", "name": "days"}]}]},
    "-",
    {"op": "field", "args": [{"op": "last", "args": [{"op": "record_field", "name": "days"}]}]},
    {"op": "when", "position": "not_last", "then": ["\n"]}]}]}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (trip, _) = generate_trip_instance(7, 7)?;
    let rep = scope::domains::Instance::Trip(trip.clone()).to_representation();

    let (SolverSpec::Combination(comb), SolverSpec::Filter(filter), SolverSpec::Deliver(deliver)) =
        (parse_solver_spec(COMBINATION)?, parse_solver_spec(FILTER)?, parse_solver_spec(DELIVER)?)
    else {
        unreachable!("spec kinds are fixed above");
    };

    let candidates = enumerate_candidates(&comb, &rep, Limit::default())?;
    println!("{} candidates survive flight pruning (7! = 5040 orderings)", candidates.len());

    let plan = filter_plans(&filter, &candidates, &rep)?.ok_or("no candidate meets the windows")?;
    println!("{}", render_answer(&deliver, &plan)?);

    let oracle = solve_trip_oracle(&trip).ok_or("oracle found no plan")?;
    assert!(plan.same_records(&oracle.records));
    println!("matches the oracle");
    Ok(())
}
