use std::path::{Path, PathBuf};

use crate::dsl::{
    parse_solver_spec, record_schema, typecheck_bundle, CheckReport, CombinationSpec, DeliverSpec,
    DslError, FilterSpec, RecordSchema, SolverSpec, SpecKind,
};
use crate::fsutil::write_atomic;
use crate::repr::{ReprError, StructuredRepresentation};
use crate::value::canonical_json;

pub const COMBINATION_FILE: &str = "combination.spec.json";
pub const FILTER_FILE: &str = "filter.spec.json";
pub const DELIVER_FILE: &str = "deliver.spec.json";
pub const SCHEMA_FILE: &str = "schema.rep.json";

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Dsl { file: String, source: DslError },
    #[error("schema: {0}")]
    Repr(#[from] ReprError),
    #[error("bundle does not typecheck:\n{0}")]
    Typecheck(CheckReport),
}

/// The three solver specs plus the representation they were built against.
/// Construction guarantees the specs typecheck against `schema`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverBundle {
    pub combination: CombinationSpec,
    pub filter: FilterSpec,
    pub deliver: DeliverSpec,
    pub schema: StructuredRepresentation,
}

impl SolverBundle {
    pub fn new(
        combination: SolverSpec,
        filter: SolverSpec,
        deliver: SolverSpec,
        schema: StructuredRepresentation,
    ) -> Result<Self, BundleError> {
        let report = typecheck_bundle(&combination, &filter, &deliver, &schema);
        if !report.is_ok() {
            return Err(BundleError::Typecheck(report));
        }
        match (combination, filter, deliver) {
            (SolverSpec::Combination(c), SolverSpec::Filter(f), SolverSpec::Deliver(d)) => {
                Ok(SolverBundle {
                    combination: c,
                    filter: f,
                    deliver: d,
                    schema,
                })
            }
            _ => unreachable!("typecheck_bundle verifies spec kinds"),
        }
    }

    pub fn specs(&self) -> [SolverSpec; 3] {
        [
            SolverSpec::Combination(self.combination.clone()),
            SolverSpec::Filter(self.filter.clone()),
            SolverSpec::Deliver(self.deliver.clone()),
        ]
    }

    pub fn record_schema(&self) -> RecordSchema {
        record_schema(&self.combination)
    }

    /// Typechecks the bundle's specs against another representation.
    pub fn check_against(&self, rep: &StructuredRepresentation) -> CheckReport {
        let [c, f, d] = self.specs();
        typecheck_bundle(&c, &f, &d, rep)
    }

    pub fn save(&self, dir: &Path) -> Result<(), BundleError> {
        let [c, f, d] = self.specs();
        let files = [
            (COMBINATION_FILE, canonical_json(&c.to_json())),
            (FILTER_FILE, canonical_json(&f.to_json())),
            (DELIVER_FILE, canonical_json(&d.to_json())),
            (SCHEMA_FILE, self.schema.to_canonical_string()),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            write_atomic(&path, text.as_bytes()).map_err(|source| BundleError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, BundleError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| BundleError::Io { path, source })
        };
        let spec = |name: &str, kind: SpecKind| -> Result<SolverSpec, BundleError> {
            let s = parse_solver_spec(&read(name)?).map_err(|source| BundleError::Dsl {
                file: name.to_string(),
                source,
            })?;
            if s.kind() != kind {
                return Err(BundleError::Dsl {
                    file: name.to_string(),
                    source: DslError {
                        kind: crate::dsl::DslErrorKind::MalformedDocument(format!(
                            "expected a {kind} spec, found {}",
                            s.kind()
                        )),
                        path: "$.kind".into(),
                    },
                });
            }
            Ok(s)
        };
        let schema = StructuredRepresentation::parse(&read(SCHEMA_FILE)?)?;
        SolverBundle::new(
            spec(COMBINATION_FILE, SpecKind::Combination)?,
            spec(FILTER_FILE, SpecKind::Filter)?,
            spec(DELIVER_FILE, SpecKind::Deliver)?,
            schema,
        )
    }
}
