//! The agent pipeline that turns one worked example into a solver bundle,
//! and the Input Agent that maps new queries onto the bundle's schema.
//!
//! Stage I (problem reasoning) asks the Solution Agent for a structured form
//! of the example answer and the Planning Agent for a representation split
//! into `combinations` and `constraints`, then optionally runs three
//! representation passes: drop uninformative parameters, move constraints
//! that hold for every item into the combinations, and expand implied
//! entries. Stage II generates the combination, filter and deliver specs in
//! turn, checks each against the example, and on failure hands the previous
//! spec, the observed output and the expected output to a reflection agent,
//! at most `patience` attempts per stage. Stage III runs the Input Agent on
//! a test query and leaves the rest to [`crate::engine::infer`].
//!
//! Every call goes through a [`ChatProvider`](crate::llm::ChatProvider), so a
//! recorded transcript replays the whole pipeline byte for byte.

mod blocks;
mod pipeline;
mod prompts;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use blocks::{extract_block, wrap_block, BlockError};
pub use pipeline::{
    build_solver, run_input_agent, run_problem_reasoning, run_solver_generation, AttemptTrace,
    BuildRecord, BuiltSolver, GenerationTrace, InputExemplar, Pipeline, ProblemReasoning,
    StageTrace, BUILD_RECORD_FILE,
};
pub use prompts::{PromptError, PromptSet, DIRECT, PLANNING_UNSPLIT};

use crate::engine::{BundleError, DEFAULT_CANDIDATE_LIMIT};
use crate::llm::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentRole {
    Planning,
    Solution,
    OptFilterParams,
    OptConstraintsToCombos,
    OptExpand,
    GenCombination,
    GenFilter,
    GenDeliver,
    ReflectCombination,
    ReflectFilter,
    ReflectDeliver,
    Input,
}

impl AgentRole {
    pub const ALL: [AgentRole; 12] = [
        AgentRole::Planning,
        AgentRole::Solution,
        AgentRole::OptFilterParams,
        AgentRole::OptConstraintsToCombos,
        AgentRole::OptExpand,
        AgentRole::GenCombination,
        AgentRole::GenFilter,
        AgentRole::GenDeliver,
        AgentRole::ReflectCombination,
        AgentRole::ReflectFilter,
        AgentRole::ReflectDeliver,
        AgentRole::Input,
    ];

    /// Role name used in transcripts and as the template file stem.
    pub fn name(self) -> &'static str {
        match self {
            AgentRole::Planning => "planning",
            AgentRole::Solution => "solution",
            AgentRole::OptFilterParams => "opt_filter_params",
            AgentRole::OptConstraintsToCombos => "opt_constraints_to_combos",
            AgentRole::OptExpand => "opt_expand",
            AgentRole::GenCombination => "gen_combination",
            AgentRole::GenFilter => "gen_filter",
            AgentRole::GenDeliver => "gen_deliver",
            AgentRole::ReflectCombination => "reflect_combination",
            AgentRole::ReflectFilter => "reflect_filter",
            AgentRole::ReflectDeliver => "reflect_deliver",
            AgentRole::Input => "input",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Keys under which the Planning Agent may address this role, preferred
    /// first.
    pub fn planning_keys(self) -> &'static [&'static str] {
        match self {
            AgentRole::Input => &["Input Agent"],
            AgentRole::GenCombination => &["Combination Function Generator Agent"],
            AgentRole::GenFilter => &[
                "Filter Function Generator Agent",
                "Solution Function Generator Agent",
            ],
            AgentRole::GenDeliver => &["Deliver Function Generator Agent"],
            _ => &[],
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the three generated solver functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Combination,
    Filter,
    Deliver,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Combination, Stage::Filter, Stage::Deliver];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Combination => "combination",
            Stage::Filter => "filter",
            Stage::Deliver => "deliver",
        }
    }

    pub fn generator(self) -> AgentRole {
        match self {
            Stage::Combination => AgentRole::GenCombination,
            Stage::Filter => AgentRole::GenFilter,
            Stage::Deliver => AgentRole::GenDeliver,
        }
    }

    pub fn reflector(self) -> AgentRole {
        match self {
            Stage::Combination => AgentRole::ReflectCombination,
            Stage::Filter => AgentRole::ReflectFilter,
            Stage::Deliver => AgentRole::ReflectDeliver,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Generation attempts per stage, the first included. At least 1.
    pub patience: u32,
    /// Ask the Planning Agent for separate combinations and constraints.
    pub enable_formalization_split: bool,
    /// Run the three representation passes after planning.
    pub enable_optimization: bool,
    /// Retry failing stages through the reflection agents.
    pub enable_refinement: bool,
    /// Candidate cap for enumeration while checking combination specs.
    pub candidate_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            patience: 3,
            enable_formalization_split: true,
            enable_optimization: true,
            enable_refinement: true,
            candidate_limit: DEFAULT_CANDIDATE_LIMIT,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.patience == 0 {
            return Err(AgentError::InvalidConfig("patience must be at least 1".into()));
        }
        if self.candidate_limit == 0 {
            return Err(AgentError::InvalidConfig("candidate_limit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("{role} output is unparseable: {detail}")]
    AgentOutputUnparseable { role: String, detail: String },
    #[error(transparent)]
    Provider(#[from] LlmError),
    #[error("{stage} stage still failing after {attempts} attempts: {last_failure}")]
    PatienceExhausted {
        stage: Stage,
        attempts: u32,
        last_failure: String,
    },
    #[error("input agent keys drifted from the schema: expected {expected}, found {found}")]
    SchemaDrift { expected: String, found: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}
