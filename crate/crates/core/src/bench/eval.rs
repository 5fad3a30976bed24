use rayon::prelude::*;

use super::{BenchError, BenchInstance, BenchOutcome};
use crate::agents::{InputExemplar, Pipeline, PipelineConfig, PromptSet, DIRECT};
use crate::domains::{trip_constraint_checks, visits_from_plan, Instance};
use crate::engine::{answers_match, infer, Inference, Limit, SolverBundle};
use crate::llm::{compute_cost, ChatExchange, ChatProvider, PricingTable, Usage};
use crate::repr::Plan;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Worker threads; at least 1.
    pub jobs: usize,
    pub limit: Limit,
    /// Model to price token usage with; `None` records zero cost.
    pub model: Option<String>,
    pub pricing: PricingTable,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            jobs: 1,
            limit: Limit::default(),
            model: None,
            pricing: PricingTable::default(),
        }
    }
}

/// The read-only state shared by every evaluated instance.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub bundle: &'a SolverBundle,
    pub exemplar: &'a InputExemplar,
    pub prompts: &'a PromptSet,
}

fn constraint_checks(inst: &BenchInstance, plan: Option<&Plan>) -> Option<Vec<(String, bool)>> {
    let domain = inst.domain.as_deref().unwrap_or("trip");
    match Instance::parse_query(domain, &inst.query).ok()? {
        Instance::Trip(t) => {
            let visits = plan.map(|p| visits_from_plan(p).unwrap_or_default());
            Some(trip_constraint_checks(&t, visits.as_deref()))
        }
        Instance::Meeting(_) => None,
    }
}

fn cost_and_latency(exchanges: &[ChatExchange], config: &EvalConfig) -> (f64, f64) {
    let usages: Vec<Usage> = exchanges.iter().map(|x| x.usage).collect();
    let cost = config
        .model
        .as_deref()
        .map_or(0.0, |m| compute_cost(&usages, m, &config.pricing).unwrap_or(0.0));
    (cost, exchanges.iter().map(|x| x.latency_s).sum())
}

/// Input Agent then engine for one instance, in its own provider session.
/// Failures become non-delivered outcomes.
pub fn evaluate_instance(
    ctx: EvalContext,
    provider: &dyn ChatProvider,
    inst: &BenchInstance,
    config: &EvalConfig,
) -> BenchOutcome {
    let session = provider.session();
    let mut pipeline = Pipeline::new(&*session, ctx.prompts, PipelineConfig::default());
    let result = pipeline
        .input_agent(ctx.exemplar, &inst.query)
        .map_err(|e| e.to_string())
        .and_then(|rep| infer(ctx.bundle, &rep, config.limit).map_err(|e| e.to_string()));
    let (cost_usd, latency_s) = cost_and_latency(pipeline.exchanges(), config);
    let (answer, plan, error) = match result {
        Ok(Inference::Delivered { answer, plan }) => (Some(answer), Some(plan), None),
        Ok(Inference::NonDelivery) => (None, None, None),
        Err(e) => (None, None, Some(e)),
    };
    BenchOutcome {
        id: inst.id.clone(),
        complexity: inst.complexity,
        delivered: answer.is_some(),
        exact_match: answer.as_deref().is_some_and(|a| answers_match(a, &inst.gold_answer)),
        per_constraint: constraint_checks(inst, plan.as_ref()),
        answer,
        cost_usd,
        latency_s,
        error,
    }
}

/// The Direct baseline for one instance: the query alone goes to the
/// model in the `direct` role and the whole reply is the answer.
pub fn evaluate_direct_instance(
    prompts: &PromptSet,
    provider: &dyn ChatProvider,
    inst: &BenchInstance,
    config: &EvalConfig,
) -> BenchOutcome {
    let session = provider.session();
    let result = prompts
        .render(DIRECT, &[("query", inst.query.clone())].into_iter().collect())
        .map_err(|e| e.to_string())
        .and_then(|prompt| session.complete(DIRECT, &prompt).map_err(|e| e.to_string()));
    let (answer, exchanges, error) = match result {
        Ok(x) => (Some(x.response.trim().to_string()), vec![x], None),
        Err(e) => (None, Vec::new(), Some(e)),
    };
    let (cost_usd, latency_s) = cost_and_latency(&exchanges, config);
    BenchOutcome {
        id: inst.id.clone(),
        complexity: inst.complexity,
        delivered: answer.as_deref().is_some_and(|a| !a.is_empty()),
        exact_match: answer.as_deref().is_some_and(|a| answers_match(a, &inst.gold_answer)),
        per_constraint: None,
        answer,
        cost_usd,
        latency_s,
        error,
    }
}

/// How [`evaluate_with`] produces each answer.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    /// Input Agent, then the solver bundle.
    Scope(EvalContext<'a>),
    /// One call per query with no solver.
    Direct(&'a PromptSet),
}

/// Evaluates every instance on `config.jobs` workers. Outcomes are sorted by
/// id.
pub fn evaluate_with(
    method: Method,
    provider: &dyn ChatProvider,
    instances: &[BenchInstance],
    config: &EvalConfig,
) -> Result<Vec<BenchOutcome>, BenchError> {
    if config.jobs == 0 {
        return Err(BenchError::Setup("jobs must be at least 1".into()));
    }
    if let Some(m) = &config.model {
        config
            .pricing
            .price(m)
            .map_err(|e| BenchError::Setup(e.to_string()))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| BenchError::Setup(e.to_string()))?;
    let mut outcomes: Vec<BenchOutcome> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| match method {
                Method::Scope(ctx) => evaluate_instance(ctx, provider, inst, config),
                Method::Direct(prompts) => evaluate_direct_instance(prompts, provider, inst, config),
            })
            .collect()
    });
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(outcomes)
}

/// [`evaluate_with`] using the solver bundle.
pub fn evaluate(
    ctx: EvalContext,
    provider: &dyn ChatProvider,
    instances: &[BenchInstance],
    config: &EvalConfig,
) -> Result<Vec<BenchOutcome>, BenchError> {
    evaluate_with(Method::Scope(ctx), provider, instances, config)
}
