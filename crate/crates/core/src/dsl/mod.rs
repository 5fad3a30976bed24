//! Solver specification language.
//!
//! Generator agents emit solver functions as JSON trees in this language
//! instead of free-form program code. A spec is one of three kinds:
//!
//! * `combination`: a single generator node (`permutations` or
//!   `subset_orderings`) with optional sequence-level pruning and an emit
//!   step that turns each surviving ordering into plan records;
//! * `filter`: predicates over a candidate plan and a selection mode
//!   (`satisfy_first` or `maximize` over a lexicographic metric);
//! * `deliver`: a text template over the records of a plan.
//!
//! The grammar reference shipped in `docs/dsl.md` is embedded into generator
//! prompts; [`GRAMMAR_REFERENCE`] exposes it.

mod ast;
mod parse;
mod typecheck;

pub use ast::*;
pub use parse::{parse_solver_spec, DslError, DslErrorKind};
pub use typecheck::{
    record_schema, typecheck_bundle, typecheck_spec, typecheck_spec_with, CheckReport, Finding,
    FindingKind, RecordSchema,
};

pub const GRAMMAR_REFERENCE: &str = include_str!("../../docs/dsl.md");
