use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::blocks::strip_fence;
use super::{extract_block, AgentError, AgentRole, PipelineConfig, PromptSet, Stage, PLANNING_UNSPLIT};
use crate::dsl::{
    parse_solver_spec, record_schema, typecheck_spec_with, RecordSchema, SolverSpec, GRAMMAR_REFERENCE,
};
use crate::engine::{
    check_combination, check_deliver, check_filter, BundleError, CandidateSet, Limit, SolverBundle,
    StageCheck,
};
use crate::fsutil::write_atomic;
use crate::llm::{ChatExchange, ChatProvider, Usage};
use crate::repr::{ExampleCase, StructuredRepresentation, StructuredSolution};
use crate::value::{canonical_json, parse_json_strict};

/// Build metadata stored next to the bundle files.
pub const BUILD_RECORD_FILE: &str = "build.json";

const NO_INSTRUCTION: &str = "(none)";

/// Output of Stage I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemReasoning {
    pub representation: StructuredRepresentation,
    pub solution: StructuredSolution,
    /// Planner instructions keyed by agent name, as the planner wrote them.
    pub planning: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTrace {
    pub role: String,
    /// Spec text as emitted by the agent.
    pub spec: String,
    /// `None` when the spec passed its check.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: Stage,
    pub attempts: Vec<AttemptTrace>,
}

impl StageTrace {
    pub fn reflection_rounds(&self) -> usize {
        self.attempts.len().saturating_sub(1)
    }

    pub fn passed(&self) -> bool {
        self.attempts.last().is_some_and(|a| a.failure.is_none())
    }
}

/// Per-stage record of Stage II attempts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub stages: Vec<StageTrace>,
}

impl GenerationTrace {
    pub fn stage(&self, stage: Stage) -> Option<&StageTrace> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn reflection_rounds(&self, stage: Stage) -> usize {
        self.stage(stage).map_or(0, StageTrace::reflection_rounds)
    }

    pub fn total_reflection_rounds(&self) -> usize {
        self.stages.iter().map(StageTrace::reflection_rounds).sum()
    }
}

/// What the Input Agent is shown as its one-shot demonstration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputExemplar {
    pub query: String,
    pub representation: StructuredRepresentation,
    pub instruction: Option<String>,
}

/// Everything about a build besides the bundle itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildRecord {
    pub example: ExampleCase,
    pub solution: Json,
    pub planning: BTreeMap<String, String>,
    pub trace: GenerationTrace,
    /// Token usage per agent role.
    pub usage: BTreeMap<String, Usage>,
    pub latency_s: f64,
}

impl BuildRecord {
    pub fn save(&self, dir: &Path) -> Result<(), BundleError> {
        let path = dir.join(BUILD_RECORD_FILE);
        let json = serde_json::to_value(self).expect("build record serializes");
        write_atomic(&path, canonical_json(&json).as_bytes())
            .map_err(|source| BundleError::Io { path, source })
    }

    pub fn load(dir: &Path) -> Result<Self, BundleError> {
        let path = dir.join(BUILD_RECORD_FILE);
        let text = std::fs::read_to_string(&path).map_err(|source| BundleError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| BundleError::Io {
            path,
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })
    }

    pub fn total_usage(&self) -> Usage {
        self.usage.values().copied().sum()
    }

    /// The demonstration for the Input Agent: the build example with the
    /// bundle's own representation.
    pub fn exemplar(&self, bundle: &SolverBundle) -> InputExemplar {
        InputExemplar {
            query: self.example.query.clone(),
            representation: bundle.schema.clone(),
            instruction: instruction_for(&self.planning, AgentRole::Input).map(str::to_string),
        }
    }
}

/// A bundle together with how it was built.
#[derive(Debug, Clone)]
pub struct BuiltSolver {
    pub bundle: SolverBundle,
    pub solution: StructuredSolution,
    pub record: BuildRecord,
    pub exchanges: Vec<ChatExchange>,
}

impl BuiltSolver {
    /// Writes the bundle files and the build record into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), BundleError> {
        std::fs::create_dir_all(dir).map_err(|source| BundleError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        self.bundle.save(dir)?;
        self.record.save(dir)
    }
}

fn instruction_for(planning: &BTreeMap<String, String>, role: AgentRole) -> Option<&str> {
    role.planning_keys()
        .iter()
        .find_map(|k| planning.get(*k))
        .map(String::as_str)
}

fn pretty(json: &Json) -> String {
    serde_json::to_string_pretty(json).expect("json serializes")
}

fn describe_schema(schema: &RecordSchema) -> String {
    schema
        .fields
        .iter()
        .map(|(k, s)| format!("- {k}: {s}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn unparseable(role: AgentRole, detail: String) -> AgentError {
    AgentError::AgentOutputUnparseable {
        role: role.name().to_string(),
        detail,
    }
}

/// Parses the `tag` block of a response, or the whole response when the
/// block is absent.
fn parse_output<T, E: Display>(
    role: AgentRole,
    response: &str,
    tag: &str,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<T, AgentError> {
    match extract_block(response, tag) {
        Ok(inner) => parse(strip_fence(inner))
            .map_err(|e| unparseable(role, format!("<start_of_{tag}> block: {e}"))),
        Err(missing) => parse(strip_fence(response))
            .map_err(|e| unparseable(role, format!("{missing}; whole response: {e}"))),
    }
}

fn parse_planning(text: &str) -> Result<BTreeMap<String, String>, String> {
    let json = parse_json_strict(text).map_err(|e| e.to_string())?;
    let obj = json
        .as_object()
        .ok_or_else(|| "planning instructions must be a JSON object".to_string())?;
    Ok(obj
        .iter()
        .map(|(k, v)| {
            let text = match v {
                Json::String(s) => s.clone(),
                other => canonical_json(other),
            };
            (k.clone(), text)
        })
        .collect())
}

/// Planning block of a response; absent blocks leave `None`.
fn planning_block(
    role: AgentRole,
    response: &str,
) -> Result<Option<BTreeMap<String, String>>, AgentError> {
    match extract_block(response, "planning") {
        Ok(inner) => parse_planning(strip_fence(inner))
            .map(Some)
            .map_err(|e| unparseable(role, format!("<start_of_planning> block: {e}"))),
        Err(_) => Ok(None),
    }
}

/// Block tags to read a spec from, preferred first.
fn spec_tags(role: AgentRole) -> [&'static str; 2] {
    match role {
        AgentRole::ReflectCombination | AgentRole::ReflectFilter => ["code_correction", "code"],
        _ => ["code", "code_correction"],
    }
}

fn spec_text(role: AgentRole, response: &str) -> Result<String, AgentError> {
    let tags = spec_tags(role);
    for tag in tags {
        if let Ok(inner) = extract_block(response, tag) {
            return Ok(strip_fence(inner).to_string());
        }
    }
    let whole = strip_fence(response);
    if whole.starts_with('{') {
        return Ok(whole.to_string());
    }
    Err(unparseable(
        role,
        format!("no <start_of_{}> block and the response is not a JSON document", tags[0]),
    ))
}

/// Moves every constraint into the combinations.
fn merge_into_combinations(rep: StructuredRepresentation) -> StructuredRepresentation {
    if rep.constraints.is_empty() {
        return rep;
    }
    let mut combinations = rep.combinations;
    combinations.extend(rep.constraints);
    let description = format!("{} {}", rep.combinations_description, rep.constraints_description);
    StructuredRepresentation::new(combinations, BTreeMap::new(), description, "No constraints.")
        .expect("merged keys are disjoint")
}

enum Evaluated {
    Usable {
        spec: SolverSpec,
        check: StageCheck,
        candidates: Option<CandidateSet>,
    },
    Unusable(String),
}

struct StageContext<'c> {
    example: &'c ExampleCase,
    rep: &'c StructuredRepresentation,
    solution: &'c StructuredSolution,
    planning: &'c BTreeMap<String, String>,
    records: Option<RecordSchema>,
    candidates: Option<CandidateSet>,
}

/// Runs agents through a provider and keeps every exchange.
pub struct Pipeline<'a> {
    provider: &'a dyn ChatProvider,
    prompts: &'a PromptSet,
    config: PipelineConfig,
    exchanges: Vec<ChatExchange>,
    trace: GenerationTrace,
}

impl<'a> Pipeline<'a> {
    pub fn new(provider: &'a dyn ChatProvider, prompts: &'a PromptSet, config: PipelineConfig) -> Self {
        Pipeline {
            provider,
            prompts,
            config,
            exchanges: Vec::new(),
            trace: GenerationTrace::default(),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Exchanges made so far, in call order.
    pub fn exchanges(&self) -> &[ChatExchange] {
        &self.exchanges
    }

    /// Stage II attempts so far, including those of a failed run.
    pub fn trace(&self) -> &GenerationTrace {
        &self.trace
    }

    fn call(&mut self, role: AgentRole, prompt: &str) -> Result<String, AgentError> {
        let x = self.provider.complete(role.name(), prompt)?;
        let response = x.response.clone();
        self.exchanges.push(x);
        Ok(response)
    }

    fn render(&self, stem: &str, bindings: &BTreeMap<&str, String>) -> Result<String, AgentError> {
        Ok(self.prompts.render(stem, bindings)?)
    }

    /// Stage I: structured solution, representation, planner instructions.
    pub fn problem_reasoning(&mut self, example: &ExampleCase) -> Result<ProblemReasoning, AgentError> {
        self.config.validate()?;
        let mut b: BTreeMap<&str, String> = BTreeMap::new();
        b.insert("example_query", example.query.clone());
        b.insert("example_answer", example.answer.clone());

        let prompt = self.render(AgentRole::Solution.name(), &b)?;
        let response = self.call(AgentRole::Solution, &prompt)?;
        let solution = parse_output(AgentRole::Solution, &response, "structured_output", StructuredSolution::parse)?;

        b.insert("structured_solution", pretty(&solution.to_json()));
        let stem = if self.config.enable_formalization_split {
            AgentRole::Planning.name()
        } else {
            PLANNING_UNSPLIT
        };
        let prompt = self.render(stem, &b)?;
        let response = self.call(AgentRole::Planning, &prompt)?;
        let mut rep = parse_output(
            AgentRole::Planning,
            &response,
            "structured_output",
            StructuredRepresentation::parse,
        )?;
        let mut planning = planning_block(AgentRole::Planning, &response)?.unwrap_or_default();

        if self.config.enable_optimization {
            for role in [
                AgentRole::OptFilterParams,
                AgentRole::OptConstraintsToCombos,
                AgentRole::OptExpand,
            ] {
                let mut ob: BTreeMap<&str, String> = BTreeMap::new();
                ob.insert("example_query", example.query.clone());
                ob.insert("representation", pretty(&rep.to_json()));
                ob.insert("planning_instructions", pretty(&serde_json::to_value(&planning).expect("map")));
                let prompt = self.render(role.name(), &ob)?;
                let response = self.call(role, &prompt)?;
                rep = parse_output(role, &response, "structured_output", StructuredRepresentation::parse)?;
                if let Some(p) = planning_block(role, &response)? {
                    planning = p;
                }
            }
        }
        if !self.config.enable_formalization_split {
            rep = merge_into_combinations(rep);
        }
        Ok(ProblemReasoning {
            representation: rep,
            solution,
            planning,
        })
    }

    fn bindings(&self, ctx: &StageContext, role: AgentRole) -> BTreeMap<&'static str, String> {
        let mut b: BTreeMap<&'static str, String> = BTreeMap::new();
        b.insert("example_query", ctx.example.query.clone());
        b.insert("example_answer", ctx.example.answer.clone());
        b.insert("representation", pretty(&ctx.rep.to_json()));
        b.insert("structured_solution", pretty(&ctx.solution.to_json()));
        b.insert("dsl_grammar", GRAMMAR_REFERENCE.to_string());
        b.insert(
            "record_schema",
            ctx.records.as_ref().map_or_else(|| NO_INSTRUCTION.to_string(), describe_schema),
        );
        b.insert(
            "planning_instructions",
            instruction_for(ctx.planning, role).unwrap_or(NO_INSTRUCTION).to_string(),
        );
        b
    }

    fn evaluate(&self, stage: Stage, text: &str, ctx: &StageContext) -> Evaluated {
        let spec = match parse_solver_spec(text) {
            Ok(s) => s,
            Err(e) => return Evaluated::Unusable(format!("spec does not parse: {e}")),
        };
        if spec.kind().as_str() != stage.as_str() {
            return Evaluated::Unusable(format!(
                "expected a spec of kind \"{stage}\", found \"{}\"",
                spec.kind()
            ));
        }
        let report = typecheck_spec_with(&spec, ctx.rep, ctx.records.as_ref());
        if !report.is_ok() {
            return Evaluated::Unusable(format!("spec does not typecheck:\n{report}"));
        }
        let gold = &ctx.solution.records;
        let limit = Limit::Exhaustive(self.config.candidate_limit);
        let (check, candidates) = match &spec {
            SolverSpec::Combination(c) => {
                let (check, candidates) = check_combination(c, ctx.rep, gold, limit);
                if candidates.is_none() {
                    return Evaluated::Unusable(check.failure.unwrap_or_default());
                }
                (check, candidates)
            }
            SolverSpec::Filter(f) => {
                let candidates = ctx
                    .candidates
                    .as_ref()
                    .expect("filter stage runs after combination");
                (check_filter(f, candidates, ctx.rep, gold), None)
            }
            SolverSpec::Deliver(d) => (check_deliver(d, gold, &ctx.example.answer), None),
        };
        Evaluated::Usable {
            spec,
            check,
            candidates,
        }
    }

    /// Generation with reflection for one stage. Without refinement the first
    /// usable spec is kept even if its check fails.
    fn generate_stage(
        &mut self,
        stage: Stage,
        ctx: &StageContext,
    ) -> Result<(SolverSpec, Option<CandidateSet>), AgentError> {
        let base = self.bindings(ctx, stage.generator());
        let expected = match stage {
            Stage::Combination | Stage::Filter => ctx.solution.records.to_string(),
            Stage::Deliver => ctx.example.answer.clone(),
        };
        let attempts = if self.config.enable_refinement {
            self.config.patience
        } else {
            1
        };
        self.trace.stages.push(StageTrace {
            stage,
            attempts: Vec::new(),
        });
        let mut role = stage.generator();
        let mut prompt = self.render(role.name(), &base)?;
        let mut last_failure = String::new();
        for attempt in 1..=attempts {
            let response = self.call(role, &prompt)?;
            let text = spec_text(role, &response)?;
            let evaluated = self.evaluate(stage, &text, ctx);
            let (failure, observed) = match &evaluated {
                Evaluated::Usable { check, .. } => (check.failure.clone(), check.observed.clone()),
                Evaluated::Unusable(why) => (Some(why.clone()), why.clone()),
            };
            self.trace
                .stages
                .last_mut()
                .expect("stage trace pushed above")
                .attempts
                .push(AttemptTrace {
                    role: role.name().to_string(),
                    spec: text.clone(),
                    failure: failure.clone(),
                });
            match evaluated {
                Evaluated::Usable {
                    spec, candidates, ..
                } if failure.is_none() || !self.config.enable_refinement => {
                    return Ok((spec, candidates));
                }
                _ => {}
            }
            last_failure = failure.unwrap_or_default();
            if attempt < attempts {
                let mut b = base.clone();
                b.insert("previous_spec", text);
                b.insert("failure", last_failure.clone());
                b.insert("observed_output", observed);
                b.insert("expected_output", expected.clone());
                role = stage.reflector();
                prompt = self.render(role.name(), &b)?;
            }
        }
        Err(AgentError::PatienceExhausted {
            stage,
            attempts,
            last_failure,
        })
    }

    /// Stage II: the three specs, each checked against the example.
    pub fn solver_generation(
        &mut self,
        rep: &StructuredRepresentation,
        solution: &StructuredSolution,
        example: &ExampleCase,
        planning: &BTreeMap<String, String>,
    ) -> Result<SolverBundle, AgentError> {
        self.config.validate()?;
        self.trace = GenerationTrace::default();
        let mut ctx = StageContext {
            example,
            rep,
            solution,
            planning,
            records: None,
            candidates: None,
        };
        let (combination, candidates) = self.generate_stage(Stage::Combination, &ctx)?;
        if let SolverSpec::Combination(c) = &combination {
            ctx.records = Some(record_schema(c));
        }
        ctx.candidates = candidates;
        let (filter, _) = self.generate_stage(Stage::Filter, &ctx)?;
        ctx.candidates = None;
        let (deliver, _) = self.generate_stage(Stage::Deliver, &ctx)?;
        Ok(SolverBundle::new(combination, filter, deliver, rep.clone())?)
    }

    /// Stages I and II.
    pub fn build(&mut self, example: &ExampleCase) -> Result<BuiltSolver, AgentError> {
        let pr = self.problem_reasoning(example)?;
        let bundle = self.solver_generation(&pr.representation, &pr.solution, example, &pr.planning)?;
        let mut usage: BTreeMap<String, Usage> = BTreeMap::new();
        for x in &self.exchanges {
            let total = usage.entry(x.role.clone()).or_default();
            *total = *total + x.usage;
        }
        let record = BuildRecord {
            example: example.clone(),
            solution: pr.solution.to_json(),
            planning: pr.planning,
            trace: self.trace.clone(),
            usage,
            latency_s: self.exchanges.iter().map(|x| x.latency_s).sum(),
        };
        Ok(BuiltSolver {
            bundle,
            solution: pr.solution,
            record,
            exchanges: self.exchanges.clone(),
        })
    }

    /// Stage III: the representation of `test_query`, with the exemplar's key
    /// sets. One re-ask on drift.
    pub fn input_agent(
        &mut self,
        exemplar: &InputExemplar,
        test_query: &str,
    ) -> Result<StructuredRepresentation, AgentError> {
        let (ec, ek) = exemplar.representation.key_sets();
        let expected = (
            Some(ec.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>()),
            Some(ek.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>()),
        );
        let mut b: BTreeMap<&str, String> = BTreeMap::new();
        b.insert("exemplar_query", exemplar.query.clone());
        b.insert("exemplar_parameters", pretty(&exemplar.representation.parameters_json()));
        b.insert(
            "planning_instructions",
            exemplar.instruction.clone().unwrap_or_else(|| NO_INSTRUCTION.into()),
        );
        b.insert("test_query", test_query.to_string());
        b.insert("key_reminder", String::new());
        let mut found = (None, None);
        for ask in 0..2 {
            if ask == 1 {
                b.insert(
                    "key_reminder",
                    format!(
                        " Your previous answer used different keys. The keys must be exactly: {}.",
                        describe_keys(&expected)
                    ),
                );
            }
            let prompt = self.render(AgentRole::Input.name(), &b)?;
            let response = self.call(AgentRole::Input, &prompt)?;
            let json = parse_output(AgentRole::Input, &response, "structured_output", parse_json_strict)?;
            found = json_key_sets(&json);
            if found == expected {
                return StructuredRepresentation::from_parameters(&json, &exemplar.representation)
                    .map_err(|e| unparseable(AgentRole::Input, e.to_string()));
            }
        }
        Err(AgentError::SchemaDrift {
            expected: describe_keys(&expected),
            found: describe_keys(&found),
        })
    }
}

type KeySets = (Option<BTreeSet<String>>, Option<BTreeSet<String>>);

fn json_key_sets(json: &Json) -> KeySets {
    let keys = |k: &str| {
        json.get(k)
            .and_then(Json::as_object)
            .map(|o| o.keys().cloned().collect::<BTreeSet<String>>())
    };
    (keys("combinations"), keys("constraints"))
}

fn describe_keys(k: &KeySets) -> String {
    let one = |name: &str, s: &Option<BTreeSet<String>>| match s {
        None => format!("no \"{name}\" object"),
        Some(s) => format!(
            "\"{name}\" with {{{}}}",
            s.iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(", ")
        ),
    };
    format!("{}; {}", one("combinations", &k.0), one("constraints", &k.1))
}

/// Stage I with the built-in prompts.
pub fn run_problem_reasoning(
    provider: &dyn ChatProvider,
    example: &ExampleCase,
    config: &PipelineConfig,
) -> Result<ProblemReasoning, AgentError> {
    let prompts = PromptSet::default();
    Pipeline::new(provider, &prompts, config.clone()).problem_reasoning(example)
}

/// Stage II with the built-in prompts and no planner instructions.
pub fn run_solver_generation(
    provider: &dyn ChatProvider,
    rep: &StructuredRepresentation,
    solution: &StructuredSolution,
    example: &ExampleCase,
    config: &PipelineConfig,
) -> Result<SolverBundle, AgentError> {
    let prompts = PromptSet::default();
    Pipeline::new(provider, &prompts, config.clone()).solver_generation(rep, solution, example, &BTreeMap::new())
}

/// Stage III with the built-in prompts.
pub fn run_input_agent(
    provider: &dyn ChatProvider,
    exemplar: &InputExemplar,
    test_query: &str,
) -> Result<StructuredRepresentation, AgentError> {
    let prompts = PromptSet::default();
    Pipeline::new(provider, &prompts, PipelineConfig::default()).input_agent(exemplar, test_query)
}

/// Stages I and II with the built-in prompts.
pub fn build_solver(
    provider: &dyn ChatProvider,
    example: &ExampleCase,
    config: &PipelineConfig,
) -> Result<BuiltSolver, AgentError> {
    let prompts = PromptSet::default();
    Pipeline::new(provider, &prompts, config.clone()).build(example)
}
