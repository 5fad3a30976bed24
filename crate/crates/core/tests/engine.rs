use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use itertools::Itertools;
use proptest::prelude::*;
use serde_json::{json, Value as Json};

use scope::agents::extract_block;
use scope::domains::Instance;
use scope::dsl::{parse_solver_spec, CombinationSpec, DeliverSpec, FilterSpec, SolverSpec};
use scope::engine::{
    check_failures, enumerate_candidates, filter_plans, render_answer, CandidateSet, EngineError, EvalError,
    Limit, SolverBundle,
};
use scope::repr::{ExampleCase, Plan, StructuredRepresentation};

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

/// The final spec a stage's agent produced in the trip exemplar script.
fn scripted(role: &str, tag: &str) -> SolverSpec {
    let script: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&std::fs::read_to_string(asset("trip/exemplar.script.json")).unwrap()).unwrap();
    let reply = script[role].last().unwrap();
    parse_solver_spec(extract_block(reply, tag).unwrap()).unwrap()
}

fn trip_combination() -> CombinationSpec {
    match scripted("reflect_combination", "code_correction") {
        SolverSpec::Combination(c) => c,
        other => panic!("{other:?}"),
    }
}

fn trip_filter() -> FilterSpec {
    match scripted("gen_filter", "code") {
        SolverSpec::Filter(f) => f,
        other => panic!("{other:?}"),
    }
}

fn trip_deliver() -> DeliverSpec {
    match scripted("gen_deliver", "code") {
        SolverSpec::Deliver(d) => d,
        other => panic!("{other:?}"),
    }
}

fn rep(cities: &[&str], stays: &[i64], flights: &[(usize, usize)], windows: Json) -> StructuredRepresentation {
    let mut pairs = Vec::new();
    for &(a, b) in flights {
        pairs.push(json!([cities[a], cities[b]]));
        pairs.push(json!([cities[b], cities[a]]));
    }
    let stays: serde_json::Map<String, Json> =
        cities.iter().zip(stays).map(|(c, s)| (c.to_string(), json!(s))).collect();
    StructuredRepresentation::from_json(&json!({
        "combinations": {"cities": cities, "direct_flights": pairs, "city_stays": stays},
        "constraints": {"specific_days": windows},
        "combinations_description": "cities, directed flights and stays",
        "constraints_description": "first and last day per city",
    }))
    .unwrap()
}

fn complete(n: usize) -> Vec<(usize, usize)> {
    (0..n).tuple_combinations().collect()
}

fn order_of(plan: &Plan) -> Vec<String> {
    (0..plan.len())
        .map(|i| plan.get(i, "city").unwrap().as_text().unwrap().to_string())
        .collect()
}

fn days_of(plan: &Plan, i: usize) -> Vec<i64> {
    plan.get(i, "days").unwrap().as_list().unwrap().iter().map(|d| d.as_int().unwrap()).collect()
}

fn venice() -> (Instance, StructuredRepresentation) {
    let inst = Instance::load(&asset("trip/venice.inst.json")).unwrap();
    let rep = inst.to_representation();
    (inst, rep)
}

#[test]
fn three_connected_cities_give_six_five_day_candidates() {
    let r = rep(&["A", "B", "C"], &[2, 3, 2], &complete(3), json!({}));
    let cands = enumerate_candidates(&trip_combination(), &r, Limit::default()).unwrap();
    assert_eq!(cands.len(), 6);
    let orders: Vec<Vec<String>> = cands.iter().map(|p| order_of(&p)).collect();
    let lexicographic: Vec<Vec<String>> =
        ["A", "B", "C"].iter().permutations(3).map(|p| p.iter().map(|c| c.to_string()).collect()).collect();
    assert_eq!(orders, lexicographic);
    for plan in cands.iter() {
        let all: BTreeSet<i64> = (0..3).flat_map(|i| days_of(&plan, i)).collect();
        assert_eq!(all, (1..=5).collect());
    }
}

#[test]
fn venice_has_two_candidates_and_one_answer() {
    let (inst, r) = venice();
    let cands = enumerate_candidates(&trip_combination(), &r, Limit::default()).unwrap();
    // Of the six orderings only those routing through Vienna fly direct.
    let orders: BTreeSet<Vec<String>> = cands.iter().map(|p| order_of(&p)).collect();
    let expected: BTreeSet<Vec<String>> = [["Mykonos", "Vienna", "Venice"], ["Venice", "Vienna", "Mykonos"]]
        .iter()
        .map(|o| o.iter().map(|c| c.to_string()).collect())
        .collect();
    assert_eq!(orders, expected);

    let plan = filter_plans(&trip_filter(), &cands, &r).unwrap().unwrap();
    assert_eq!(order_of(&plan), ["Mykonos", "Vienna", "Venice"]);
    assert_eq!(days_of(&plan, 0), vec![1, 2]);
    assert_eq!(days_of(&plan, 1), vec![2, 3, 4, 5]);
    assert_eq!(days_of(&plan, 2), (5..=10).collect::<Vec<_>>());
    assert!(plan.same_records(&inst.solve().unwrap().records));
    assert_eq!(render_answer(&trip_deliver(), &plan).unwrap(), inst.solve_and_render().unwrap().trim_end());
}

#[test]
fn empty_constraints_take_the_first_candidate() {
    let r = rep(&["A", "B", "C"], &[2, 3, 2], &complete(3), json!({}));
    let cands = enumerate_candidates(&trip_combination(), &r, Limit::default()).unwrap();
    let vacuous = match parse_solver_spec(r#"{"kind": "filter", "mode": "satisfy_first", "predicates": []}"#).unwrap() {
        SolverSpec::Filter(f) => f,
        _ => unreachable!(),
    };
    assert_eq!(filter_plans(&vacuous, &cands, &r).unwrap(), Some(cands.get(0)));
    // The window filter is vacuous too when no windows are given.
    assert_eq!(filter_plans(&trip_filter(), &cands, &r).unwrap(), Some(cands.get(0)));
}

#[test]
fn single_city_plan_renders() {
    let plan = Plan::from_records(vec![BTreeMap::from([
        ("city".to_string(), scope::value::Value::text("A")),
        ("days".to_string(), scope::value::Value::List(vec![scope::value::Value::Int(1)])),
    ])])
    .unwrap();
    let text = render_answer(&trip_deliver(), &plan).unwrap();
    assert_eq!(
        text,
        "Here is the trip plan for visiting the 1 European cities for 1 days:\n\n\
         **Day 1-1:** Arriving in A and visit A for 1 days."
    );
}

#[test]
fn template_on_absent_field_is_missing_field() {
    let (_, r) = venice();
    let cands = enumerate_candidates(&trip_combination(), &r, Limit::default()).unwrap();
    let hotel = match parse_solver_spec(
        r#"{"kind": "deliver", "template": [{"op": "each", "body": [
              {"op": "field", "args": [{"op": "record_field", "name": "hotel"}]}]}]}"#,
    )
    .unwrap()
    {
        SolverSpec::Deliver(d) => d,
        _ => unreachable!(),
    };
    assert!(matches!(render_answer(&hotel, &cands.get(0)), Err(EvalError::MissingField(f)) if f.contains("hotel")));
}

#[test]
fn limits_are_enforced() {
    let (_, r) = venice();
    let comb = trip_combination();
    assert!(matches!(
        enumerate_candidates(&comb, &r, Limit::Exhaustive(1)),
        Err(EngineError::LimitExceeded { limit: 1 })
    ));
    assert_eq!(enumerate_candidates(&comb, &r, Limit::Exhaustive(2)).unwrap().len(), 2);
    assert_eq!(enumerate_candidates(&comb, &r, Limit::Truncate(1)).unwrap().len(), 1);
}

fn venice_bundle(combination: &str) -> (SolverBundle, ExampleCase, scope::repr::StructuredSolution) {
    let (inst, r) = venice();
    let bundle = SolverBundle::new(
        parse_solver_spec(combination).unwrap(),
        SolverSpec::Filter(trip_filter()),
        SolverSpec::Deliver(trip_deliver()),
        r,
    )
    .unwrap();
    let ex = ExampleCase::new(inst.query_text(), inst.solve_and_render().unwrap(), "trip").unwrap();
    (bundle, ex, inst.solve().unwrap())
}

const UNPRUNED: &str = r#"{"kind": "combination",
  "root": {"op": "permutations", "args": [{"op": "param_ref", "path": ["cities"]}],
           "emit": {"op": "sequential_day_assignment",
                    "args": [{"op": "param_ref", "path": ["city_stays"]}]}}}"#;

#[test]
fn containment_ignores_missing_pruning() {
    let (bundle, ex, gold) = venice_bundle(UNPRUNED);
    let report = check_failures(&bundle, &ex, &gold);
    assert!(!report.combination_failed(), "{report}");
}

#[test]
fn deliver_mismatch_reports_the_offset() {
    let (bundle, mut ex, gold) = venice_bundle(&trip_combination_json());
    assert!(check_failures(&bundle, &ex, &gold).all_passed());
    let at = ex.answer.find("Vienna").unwrap();
    ex.answer.replace_range(at..at + 1, "W");
    let report = check_failures(&bundle, &ex, &gold);
    assert!(!report.combination_failed() && !report.filter_failed());
    let detail = report.deliver.expect("deliver fails");
    assert!(detail.contains(&at.to_string()), "{detail}");
}

fn trip_combination_json() -> String {
    SolverSpec::Combination(trip_combination()).to_json().to_string()
}

/// Random trip: stays, a symmetric flight graph and windows drawn from a
/// random ordering so that some instances are satisfiable.
fn trip_case() -> impl Strategy<Value = (usize, Vec<i64>, Vec<(usize, usize)>, Vec<usize>, Vec<bool>)> {
    (1usize..=7).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = complete(n);
        let m = pairs.len();
        (
            Just(n),
            prop::collection::vec(1i64..=5, n),
            prop::collection::vec(prop::bool::weighted(0.6), m).prop_map(move |keep| {
                pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect::<Vec<_>>()
            }),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            prop::collection::vec(prop::bool::weighted(0.4), n),
        )
    })
}

const NAMES: [&str; 7] = ["Athens", "Berlin", "Cork", "Dublin", "Essen", "Faro", "Genoa"];

/// Independent day algebra: overlap 1, first city starts on day 1.
fn spans(order: &[usize], stays: &[i64]) -> Vec<(i64, i64)> {
    let mut day = 1;
    order
        .iter()
        .map(|&c| {
            let span = (day, day + stays[c] - 1);
            day = span.1;
            span
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn enumeration_matches_brute_force((n, stays, flights, reference, windowed) in trip_case()) {
        let cities = &NAMES[..n];
        let edges: BTreeSet<(usize, usize)> = flights.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        // Windows taken from one ordering's days, so that ordering is
        // feasible when its flights exist.
        let reference_spans = spans(&reference, &stays);
        let windows: serde_json::Map<String, Json> = reference
            .iter()
            .zip(&reference_spans)
            .zip(&windowed)
            .filter(|(_, w)| **w)
            .map(|((&c, &(a, b)), _)| (cities[c].to_string(), json!([a, b])))
            .collect();
        let r = rep(cities, &stays, &flights, Json::Object(windows.clone()));

        let brute: Vec<Vec<usize>> = (0..n)
            .permutations(n)
            .filter(|p| p.windows(2).all(|w| edges.contains(&(w[0], w[1]))))
            .collect();
        let cands = enumerate_candidates(&trip_combination(), &r, Limit::default()).unwrap();
        prop_assert_eq!(cands.len(), brute.len());
        for (plan, order) in cands.iter().zip(&brute) {
            let names: Vec<String> = order.iter().map(|&c| cities[c].to_string()).collect();
            prop_assert_eq!(order_of(&plan), names);
            for (i, &(a, b)) in spans(order, &stays).iter().enumerate() {
                prop_assert_eq!(days_of(&plan, i), (a..=b).collect::<Vec<_>>());
            }
        }

        // Soundness and first-match: re-evaluate the windows independently.
        let meets = |order: &[usize]| {
            spans(order, &stays).iter().zip(order).all(|(&(a, b), &c)| match windows.get(cities[c]) {
                Some(w) => {
                    let (lo, hi) = (w[0].as_i64().unwrap(), w[1].as_i64().unwrap());
                    a <= lo && hi <= b
                }
                None => true,
            })
        };
        let expected = brute.iter().find(|o| meets(o));
        let chosen = filter_plans(&trip_filter(), &cands, &r).unwrap();
        match (chosen, expected) {
            (Some(plan), Some(order)) => {
                let names: Vec<String> = order.iter().map(|&c| cities[c].to_string()).collect();
                prop_assert_eq!(order_of(&plan), names);
            }
            (None, None) => {}
            (got, want) => prop_assert!(false, "filter chose {got:?}, brute force {want:?}"),
        }
    }

    #[test]
    fn execution_is_deterministic((n, stays, flights, _ref, _w) in trip_case()) {
        let r = rep(&NAMES[..n], &stays, &flights, json!({}));
        let run = |r: &StructuredRepresentation| -> (Vec<Plan>, Option<String>) {
            let cands: CandidateSet = enumerate_candidates(&trip_combination(), r, Limit::default()).unwrap();
            let answer = filter_plans(&trip_filter(), &cands, r)
                .unwrap()
                .map(|p| render_answer(&trip_deliver(), &p).unwrap());
            (cands.iter().collect(), answer)
        };
        prop_assert_eq!(run(&r), run(&r));
    }
}
