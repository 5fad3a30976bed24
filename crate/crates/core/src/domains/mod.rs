//! Reference domains: instance types, brute-force oracles, seeded
//! generators, query text, and hand-written answer renderers.
//!
//! Everything here is independent of the solver-spec interpreter so it can
//! serve as ground truth for it.

pub mod meeting;
pub mod trip;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use meeting::{
    generate_meeting_instance, render_meeting_answer, schedule_from_plan, schedule_is_feasible,
    schedule_to_solution, solve_meeting_oracle, MeetingInstance, MeetingSchedule,
};
pub use trip::{
    generate_trip_instance, render_trip_answer, solve_trip_oracle, trip_constraint_checks,
    visits_from_plan, TripInstance, Visit,
};

use crate::fsutil::write_atomic;
use crate::repr::{StructuredRepresentation, StructuredSolution};
use crate::value::canonical_json;

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("cannot read query: {0}")]
    UnparseableQuery(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance file: {0}")]
    Malformed(#[from] serde_json::Error),
}

/// Contents of an `.inst.json` file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum Instance {
    Trip(TripInstance),
    Meeting(MeetingInstance),
}

impl Instance {
    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let inst: Instance = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: &Path) -> Result<(), DomainError> {
        let json = serde_json::to_value(self)?;
        write_atomic(path, canonical_json(&json).as_bytes())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            Instance::Trip(t) => t.validate(),
            Instance::Meeting(m) => m.validate(),
        }
    }

    pub fn domain_id(&self) -> &'static str {
        match self {
            Instance::Trip(_) => "trip",
            Instance::Meeting(_) => "meeting",
        }
    }

    pub fn query_text(&self) -> String {
        match self {
            Instance::Trip(t) => t.query_text(),
            Instance::Meeting(m) => m.query_text(),
        }
    }

    /// Reads a query of a known domain back into an instance.
    pub fn parse_query(domain: &str, text: &str) -> Result<Self, DomainError> {
        match domain {
            "trip" => TripInstance::parse_query(text).map(Instance::Trip),
            "meeting" => MeetingInstance::parse_query(text).map(Instance::Meeting),
            other => Err(DomainError::UnparseableQuery(format!("unknown domain `{other}`"))),
        }
    }

    pub fn to_representation(&self) -> StructuredRepresentation {
        match self {
            Instance::Trip(t) => t.to_representation(),
            Instance::Meeting(m) => m.to_representation(),
        }
    }

    /// Number of cities or friends.
    pub fn complexity(&self) -> usize {
        match self {
            Instance::Trip(t) => t.cities.len(),
            Instance::Meeting(m) => m.friends.len(),
        }
    }

    /// Oracle plan as a structured solution; `None` when infeasible.
    pub fn solve(&self) -> Option<StructuredSolution> {
        match self {
            Instance::Trip(t) => solve_trip_oracle(t),
            Instance::Meeting(m) => {
                let s = solve_meeting_oracle(m);
                (s.friends_met() > 0).then(|| schedule_to_solution(&s))
            }
        }
    }

    /// Oracle answer text; `None` when infeasible.
    pub fn solve_and_render(&self) -> Option<String> {
        match self {
            Instance::Trip(t) => trip::solve_trip_visits(t).map(|v| render_trip_answer(&v)),
            Instance::Meeting(m) => {
                let s = solve_meeting_oracle(m);
                (s.friends_met() > 0).then(|| render_meeting_answer(m, &s))
            }
        }
    }
}
