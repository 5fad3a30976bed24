use proptest::prelude::*;
use proptest::strategy::ValueTree;
use serde_json::{json, Value as Json};

use scope::dsl::{parse_solver_spec, record_schema, typecheck_spec_with, SolverSpec};
use scope::engine::{enumerate_candidates, filter_plans, render_answer, EvalError, Limit};
use scope::repr::StructuredRepresentation;

const OPS: &[&str] = &[
    "const", "param_ref", "record_field", "compare", "arith", "all_of", "any_of", "not", "count", "sum",
    "max_over", "every_record", "len", "first", "last", "contains_days", "permutations", "subset_orderings",
    "pairs_in_edge_set", "sequential_day_assignment", "greedy_schedule", "field", "each", "when", "text",
    "shuffle",
];

/// Arbitrary JSON, biased towards op nodes.
fn any_tree() -> impl Strategy<Value = Json> {
    let leaf = prop_oneof![
        Just(Json::Null),
        any::<bool>().prop_map(Json::from),
        (-3i64..30).prop_map(Json::from),
        "[a-z_<=>+*-]{0,6}".prop_map(Json::from),
    ];
    leaf.prop_recursive(4, 40, 5, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Json::Array),
            (
                prop::sample::select(OPS),
                prop::collection::vec(inner.clone(), 0..4),
                prop::collection::btree_map(
                    prop::sample::select(&["value", "path", "name", "operator", "format", "body", "position", "then", "overlap", "rel", "from"][..]),
                    inner,
                    0..3,
                ),
            )
                .prop_map(|(op, args, attrs)| {
                    let mut m: serde_json::Map<String, Json> =
                        attrs.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                    m.insert("op".into(), json!(op));
                    m.insert("args".into(), Json::Array(args));
                    Json::Object(m)
                }),
        ]
    })
}

fn any_spec_doc() -> impl Strategy<Value = Json> {
    (
        prop::sample::select(&["combination", "filter", "deliver", "solver"][..]),
        prop::sample::select(&["satisfy_first", "maximize", "minimize"][..]),
        any_tree(),
        prop::collection::vec(any_tree(), 0..3),
        any::<bool>(),
    )
        .prop_map(|(kind, mode, root, list, with_metric)| match kind {
            "combination" => json!({"kind": kind, "root": root}),
            "filter" if with_metric => json!({"kind": kind, "mode": mode, "predicates": list, "metric": [root]}),
            "filter" => json!({"kind": kind, "mode": mode, "predicates": list}),
            "deliver" => json!({"kind": kind, "template": list}),
            _ => json!({"kind": kind, "root": root}),
        })
}

fn expr() -> impl Strategy<Value = Json> {
    expr_over(true, 4)
}

/// Structurally valid expressions with random, often ill-typed, operands.
/// Parameter references and `contains_days` only appear when `params` is
/// set.
fn expr_over(params: bool, depth: u32) -> impl Strategy<Value = Json> {
    let param_keys: &'static [&'static str] = if params {
        &["specific_days", "limit", "label", "flag", "names", "missing"]
    } else {
        &["city", "days"]
    };
    let leaf = prop_oneof![
        (-2i64..25).prop_map(|v| json!({"op": "const", "value": v})),
        any::<bool>().prop_map(|v| json!({"op": "const", "value": v})),
        prop::sample::select(&["Oslo", "Rome", ""][..]).prop_map(|v| json!({"op": "const", "value": v})),
        prop::sample::select(param_keys).prop_map(move |k| {
            if params {
                json!({"op": "param_ref", "path": [k]})
            } else {
                json!({"op": "record_field", "name": k})
            }
        }),
        prop::sample::select(&["city", "days", "hotel"][..]).prop_map(|n| json!({"op": "record_field", "name": n})),
    ];
    leaf.prop_recursive(depth, 24, 3, move |inner| {
        let mut branches: Vec<BoxedStrategy<Json>> = vec![
            (prop::sample::select(&["<", "<=", "==", ">=", ">"][..]), inner.clone(), inner.clone())
                .prop_map(|(o, a, b)| json!({"op": "compare", "operator": o, "args": [a, b]}))
                .boxed(),
            (prop::sample::select(&["+", "-", "*"][..]), inner.clone(), inner.clone())
                .prop_map(|(o, a, b)| json!({"op": "arith", "operator": o, "args": [a, b]}))
                .boxed(),
            (prop::sample::select(&["all_of", "any_of"][..]), prop::collection::vec(inner.clone(), 1..3))
                .prop_map(|(o, xs)| json!({"op": o, "args": xs}))
                .boxed(),
            (
                prop::sample::select(&["not", "count", "sum", "max_over", "every_record", "len", "first", "last"][..]),
                inner,
            )
                .prop_map(|(o, x)| json!({"op": o, "args": [x]}))
                .boxed(),
        ];
        if params {
            branches.push(
                prop::sample::select(&["specific_days", "limit", "label"][..])
                    .prop_map(|k| json!({"op": "contains_days", "args": [{"op": "param_ref", "path": [k]}]}))
                    .boxed(),
            );
        }
        prop::strategy::Union::new(branches)
    })
}

fn filter_doc() -> impl Strategy<Value = Json> {
    (any::<bool>(), prop::collection::vec(expr(), 0..3), prop::collection::vec(expr(), 1..3)).prop_map(
        |(maximize, predicates, metric)| {
            if maximize {
                json!({"kind": "filter", "mode": "maximize", "metric": metric, "predicates": predicates})
            } else {
                json!({"kind": "filter", "mode": "satisfy_first", "predicates": predicates})
            }
        },
    )
}

fn deliver_doc() -> impl Strategy<Value = Json> {
    let record = |n: &str| json!({"op": "record_field", "name": n});
    let days = record("days");
    let typed_cond = prop::sample::select(vec![
        json!({"op": "const", "value": true}),
        json!({"op": "compare", "operator": "==", "args": [record("city"), {"op": "const", "value": "Oslo"}]}),
        json!({"op": "compare", "operator": ">=", "args": [{"op": "len", "args": [days.clone()]}, {"op": "const", "value": 2}]}),
    ]);
    let typed_field = prop::sample::select(vec![
        record("city"),
        json!({"op": "first", "args": [days.clone()]}),
        json!({"op": "last", "args": [days]}),
        json!({"op": "const", "value": 7}),
    ]);
    let typed_head = prop::sample::select(vec![json!({"op": "const", "value": "Plan"}), json!({"op": "const", "value": 3})]);
    // Each slot is well typed about half the time.
    let slot = |typed: prop::sample::Select<Json>| prop_oneof![typed, expr_over(false, 2)];
    (prop::option::of(slot(typed_head)), slot(typed_cond), slot(typed_field), any::<bool>()).prop_map(|(head, cond, field, clock)| {
        let format = if clock { "clock12" } else { "plain" };
        let head = head.map_or(json!("Plan"), |h| json!({"op": "field", "args": [h]}));
        json!({"kind": "deliver", "template": [
            head,
            {"op": "each", "body": [
                {"op": "when", "args": [cond], "then": [{"op": "field", "args": [field], "format": format}],
                 "else": ["-"]},
                {"op": "when", "position": "not_last", "then": ["\n"]}
            ]}
        ]})
    })
}

fn trip_combination() -> SolverSpec {
    parse_solver_spec(
        r#"{"kind": "combination",
            "root": {"op": "permutations", "args": [{"op": "param_ref", "path": ["cities"]}],
                     "emit": {"op": "sequential_day_assignment",
                              "args": [{"op": "param_ref", "path": ["city_stays"]}]}}}"#,
    )
    .unwrap()
}

/// A small trip representation whose constraint shapes vary with `variant`.
fn representation(variant: u8) -> StructuredRepresentation {
    let combos = json!({"cities": ["Oslo", "Rome", "Nice"], "city_stays": {"Oslo": 2, "Rome": 3, "Nice": 1}});
    let constraints = match variant % 3 {
        0 => json!({"specific_days": {"Oslo": [1, 2]}, "limit": 4, "label": "x", "flag": true, "names": ["Oslo"]}),
        1 => json!({"specific_days": {"Rome": [9, 9]}, "limit": "four", "label": 3, "flag": [1], "names": []}),
        _ => json!({"specific_days": [[1, 2]], "limit": 0, "label": "", "flag": false, "names": ["a", "b"]}),
    };
    StructuredRepresentation::from_json(&json!({
        "combinations": combos,
        "constraints": constraints,
        "combinations_description": "cities and stays",
        "constraints_description": "assorted",
    }))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parsing_is_total(doc in any_spec_doc()) {
        match parse_solver_spec(&doc.to_string()) {
            Ok(spec) => {
                let again = parse_solver_spec(&spec.to_json().to_string()).unwrap();
                prop_assert_eq!(again, spec);
            }
            Err(e) => prop_assert!(e.path.starts_with('$'), "diagnostic without a node path: {e}"),
        }
    }

    #[test]
    fn parsed_specs_round_trip(doc in prop_oneof![filter_doc(), deliver_doc()]) {
        let spec = parse_solver_spec(&doc.to_string());
        prop_assert!(spec.is_ok(), "{doc}: {spec:?}");
        let spec = spec.unwrap();
        let text = spec.to_json().to_string();
        prop_assert_eq!(parse_solver_spec(&text).unwrap(), spec);
    }

    #[test]
    fn typechecked_specs_raise_no_shape_faults(
        filter in filter_doc(),
        deliver in deliver_doc(),
        variant in 0u8..3,
    ) {
        let rep = representation(variant);
        let comb = trip_combination();
        let SolverSpec::Combination(c) = &comb else { unreachable!() };
        let records = record_schema(c);
        let cands = enumerate_candidates(c, &rep, Limit::default()).unwrap();
        let shape_fault = |e: &EvalError| matches!(e, EvalError::Shape(_) | EvalError::MissingField(_));

        let f = parse_solver_spec(&filter.to_string()).unwrap();
        if typecheck_spec_with(&f, &rep, Some(&records)).is_ok() {
            let SolverSpec::Filter(f) = &f else { unreachable!() };
            if let Err(e) = filter_plans(f, &cands, &rep) {
                prop_assert!(!shape_fault(&e), "{filter} on variant {variant}: {e}");
            }
        }
        let d = parse_solver_spec(&deliver.to_string()).unwrap();
        if typecheck_spec_with(&d, &rep, Some(&records)).is_ok() {
            let SolverSpec::Deliver(d) = &d else { unreachable!() };
            for plan in cands.iter() {
                if let Err(e) = render_answer(d, &plan) {
                    prop_assert!(!shape_fault(&e), "{deliver}: {e}");
                }
            }
        }
    }
}

#[test]
fn fuzzed_specs_often_typecheck() {
    // Guards the soundness property against vacuity.
    let rep = representation(0);
    let SolverSpec::Combination(c) = trip_combination() else { unreachable!() };
    let records = record_schema(&c);
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut count = |strategy: &dyn Fn() -> BoxedStrategy<Json>| {
        (0..400)
            .filter(|_| {
                let doc = strategy().new_tree(&mut runner).unwrap().current();
                let spec = parse_solver_spec(&doc.to_string()).unwrap();
                typecheck_spec_with(&spec, &rep, Some(&records)).is_ok()
            })
            .count()
    };
    let filters = count(&|| filter_doc().boxed());
    let delivers = count(&|| deliver_doc().boxed());
    assert!(filters >= 20, "only {filters} of 400 fuzzed filters typecheck");
    assert!(delivers >= 20, "only {delivers} of 400 fuzzed deliver specs typecheck");
    eprintln!("typechecked: {filters} filters, {delivers} deliver specs of 400 each");
}

