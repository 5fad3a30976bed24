use std::collections::BTreeMap;
use std::path::PathBuf;

use scope::agents::{
    build_solver, extract_block, run_input_agent, run_problem_reasoning, wrap_block, AgentError, InputExemplar,
    PipelineConfig, Stage,
};
use scope::engine::{check_failures, infer, Inference, Limit};
use scope::llm::ScriptedProvider;
use scope::repr::{ExampleCase, StructuredRepresentation};

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(name)
}

fn exemplar() -> ExampleCase {
    serde_json::from_str(&std::fs::read_to_string(asset("trip/exemplar.ex.json")).unwrap()).unwrap()
}

fn script() -> BTreeMap<String, Vec<String>> {
    serde_json::from_str(&std::fs::read_to_string(asset("trip/exemplar.script.json")).unwrap()).unwrap()
}

fn input_exemplar() -> InputExemplar {
    let built = build_solver(&ScriptedProvider::new(script()), &exemplar(), &PipelineConfig::default()).unwrap();
    built.record.exemplar(&built.bundle)
}

#[test]
fn scripted_trip_build() {
    let ex = exemplar();
    let built = build_solver(&ScriptedProvider::new(script()), &ex, &PipelineConfig::default()).unwrap();
    assert_eq!(built.record.trace.reflection_rounds(Stage::Combination), 1);
    assert_eq!(built.record.trace.total_reflection_rounds(), 1);
    assert!(check_failures(&built.bundle, &ex, &built.solution).all_passed());
    match infer(&built.bundle, &built.bundle.schema, Limit::default()).unwrap() {
        Inference::Delivered { answer, .. } => assert_eq!(answer, ex.answer),
        other => panic!("{other:?}"),
    }
}

#[test]
fn reply_without_blocks_is_unparseable() {
    let mut s = script();
    s.insert("solution".into(), vec!["Here is the plan you asked for.".into()]);
    match build_solver(&ScriptedProvider::new(s), &exemplar(), &PipelineConfig::default()) {
        Err(AgentError::AgentOutputUnparseable { role, .. }) => assert_eq!(role, "solution"),
        other => panic!("{:?}", other.map(|b| b.bundle)),
    }
}

#[test]
fn optimization_off_keeps_the_planner_representation() {
    let mut s = script();
    for role in ["opt_filter_params", "opt_constraints_to_combos", "opt_expand"] {
        s.remove(role);
    }
    let planned =
        StructuredRepresentation::parse(extract_block(&s["planning"][0], "structured_output").unwrap()).unwrap();
    let config = PipelineConfig {
        enable_optimization: false,
        ..PipelineConfig::default()
    };
    let pr = run_problem_reasoning(&ScriptedProvider::new(s), &exemplar(), &config).unwrap();
    assert_eq!(pr.representation, planned);
}

#[test]
fn refinement_off_accepts_the_first_usable_spec() {
    let ex = exemplar();
    let config = PipelineConfig {
        enable_refinement: false,
        ..PipelineConfig::default()
    };
    let built = build_solver(&ScriptedProvider::new(script()), &ex, &config).unwrap();
    assert_eq!(built.record.trace.total_reflection_rounds(), 0);
    // The first combination spec assigns days without overlap, so the gold
    // plan is not among its candidates.
    assert!(check_failures(&built.bundle, &ex, &built.solution).combination_failed());
}

#[test]
fn input_agent_returns_the_exemplar_for_its_own_query() {
    let exemplar = input_exemplar();
    let reply = wrap_block(
        "structured_output",
        &serde_json::to_string_pretty(&exemplar.representation.parameters_json()).unwrap(),
    );
    let p = ScriptedProvider::from_pairs([("input", reply)]);
    let rep = run_input_agent(&p, &exemplar, &exemplar.query).unwrap();
    assert_eq!(rep, exemplar.representation);
}

#[test]
fn input_agent_drift_after_one_reask_is_schema_drift() {
    let exemplar = input_exemplar();
    let mut params = exemplar.representation.parameters_json();
    let combos = params["combinations"].as_object_mut().unwrap();
    let flights = combos.remove("direct_flights").unwrap();
    combos.insert("flights".into(), flights);
    let drifted = wrap_block("structured_output", &params.to_string());

    let p = ScriptedProvider::from_pairs([("input", drifted.clone()), ("input", drifted.clone())]);
    match run_input_agent(&p, &exemplar, &exemplar.query) {
        Err(AgentError::SchemaDrift { expected, found }) => {
            assert!(expected.contains("\"direct_flights\""), "{expected}");
            assert!(found.contains("\"flights\""), "{found}");
        }
        other => panic!("{other:?}"),
    }

    // One drifted answer is forgiven when the re-ask comes back right.
    let good = wrap_block("structured_output", &exemplar.representation.parameters_json().to_string());
    let p = ScriptedProvider::from_pairs([("input", drifted), ("input", good)]);
    assert_eq!(run_input_agent(&p, &exemplar, &exemplar.query).unwrap(), exemplar.representation);
}
