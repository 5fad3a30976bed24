//! Structured representations exchanged between agents and the engine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::value::{canonical_json, parse_json_strict, Shape, Value, ValueError};

pub type ParamMap = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReprError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("{0}")]
    NonEnumerableValue(String),
    #[error("key `{0}` appears in both combinations and constraints")]
    OverlappingKey(String),
    #[error("record {index} has keys {found:?}, expected {expected:?}")]
    HeterogeneousRecords {
        index: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("representation does not match schema: {0}")]
    SchemaMismatch(String),
}

impl From<ValueError> for ReprError {
    fn from(e: ValueError) -> Self {
        ReprError::NonEnumerableValue(e.to_string())
    }
}

fn parse_doc(text: &str) -> Result<serde_json::Value, ReprError> {
    parse_json_strict(text).map_err(|e| ReprError::MalformedDocument(e.to_string()))
}

fn object<'a>(
    json: &'a serde_json::Value,
    what: &str,
) -> Result<&'a serde_json::Map<String, serde_json::Value>, ReprError> {
    json.as_object()
        .ok_or_else(|| ReprError::MalformedDocument(format!("{what} must be a map")))
}

fn description(
    doc: &serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Result<String, ReprError> {
    match doc.get(key) {
        None => Err(ReprError::MissingKey(key.to_string())),
        Some(serde_json::Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(serde_json::Value::String(_)) => {
            Err(ReprError::MalformedDocument(format!("`{key}` is empty")))
        }
        Some(_) => Err(ReprError::MalformedDocument(format!(
            "`{key}` must be text, not a nested value"
        ))),
    }
}

fn param_map(json: &serde_json::Value, key: &str) -> Result<ParamMap, ReprError> {
    object(json, key)?
        .iter()
        .map(|(k, v)| Ok((k.clone(), Value::from_json(v, &format!("{key}.{k}"))?)))
        .collect()
}

/// The (combinations, constraints) pair extracted from a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredRepresentation {
    pub combinations: ParamMap,
    pub constraints: ParamMap,
    pub combinations_description: String,
    pub constraints_description: String,
}

/// Which half of a representation a parameter lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Namespace {
    Combinations,
    Constraints,
}

impl Namespace {
    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Combinations => "combinations",
            Namespace::Constraints => "constraints",
        }
    }
}

impl StructuredRepresentation {
    pub fn new(
        combinations: ParamMap,
        constraints: ParamMap,
        combinations_description: impl Into<String>,
        constraints_description: impl Into<String>,
    ) -> Result<Self, ReprError> {
        if let Some(k) = combinations.keys().find(|k| constraints.contains_key(*k)) {
            return Err(ReprError::OverlappingKey(k.clone()));
        }
        let rep = StructuredRepresentation {
            combinations,
            constraints,
            combinations_description: combinations_description.into(),
            constraints_description: constraints_description.into(),
        };
        for d in [&rep.combinations_description, &rep.constraints_description] {
            if d.trim().is_empty() {
                return Err(ReprError::MalformedDocument("empty description".into()));
            }
        }
        Ok(rep)
    }

    pub fn parse(text: &str) -> Result<Self, ReprError> {
        Self::from_json(&parse_doc(text)?)
    }

    /// Builds a representation from a decoded document. Keys other than the
    /// four known ones are ignored.
    pub fn from_json(json: &serde_json::Value) -> Result<Self, ReprError> {
        let doc = object(json, "representation")?;
        let combinations = doc
            .get("combinations")
            .ok_or_else(|| ReprError::MissingKey("combinations".into()))?;
        let constraints = doc
            .get("constraints")
            .ok_or_else(|| ReprError::MissingKey("constraints".into()))?;
        Self::new(
            param_map(combinations, "combinations")?,
            param_map(constraints, "constraints")?,
            description(doc, "combinations_description")?,
            description(doc, "constraints_description")?,
        )
    }

    /// Parses a document carrying only parameters (as emitted for a test
    /// query), borrowing descriptions from `schema`.
    pub fn from_parameters(
        json: &serde_json::Value,
        schema: &StructuredRepresentation,
    ) -> Result<Self, ReprError> {
        let doc = object(json, "representation")?;
        let get = |k: &str| doc.get(k).ok_or_else(|| ReprError::MissingKey(k.into()));
        Self::new(
            param_map(get("combinations")?, "combinations")?,
            param_map(get("constraints")?, "constraints")?,
            schema.combinations_description.clone(),
            schema.constraints_description.clone(),
        )
    }

    pub fn namespace(&self, ns: Namespace) -> &ParamMap {
        match ns {
            Namespace::Combinations => &self.combinations,
            Namespace::Constraints => &self.constraints,
        }
    }

    pub fn resolve(&self, ns: Namespace, path: &[String]) -> Option<&Value> {
        let (head, rest) = path.split_first()?;
        self.namespace(ns).get(head)?.lookup(rest)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = |m: &ParamMap| {
            serde_json::Value::Object(m.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
        };
        serde_json::json!({
            "combinations": map(&self.combinations),
            "constraints": map(&self.constraints),
            "combinations_description": self.combinations_description,
            "constraints_description": self.constraints_description,
        })
    }

    /// Parameters only, as shown to the Input Agent.
    pub fn parameters_json(&self) -> serde_json::Value {
        let mut j = self.to_json();
        let obj = j.as_object_mut().expect("object");
        obj.remove("combinations_description");
        obj.remove("constraints_description");
        j
    }

    pub fn to_canonical_string(&self) -> String {
        canonical_json(&self.to_json())
    }

    pub fn key_sets(&self) -> (BTreeSet<&str>, BTreeSet<&str>) {
        (
            self.combinations.keys().map(String::as_str).collect(),
            self.constraints.keys().map(String::as_str).collect(),
        )
    }

    /// Checks that `self` has the schema's key sets and compatible shapes.
    pub fn validate_against(&self, schema: &StructuredRepresentation) -> Result<(), ReprError> {
        if self.key_sets() != schema.key_sets() {
            return Err(ReprError::SchemaMismatch(format!(
                "key sets differ: expected {:?}, found {:?}",
                schema.key_sets(),
                self.key_sets()
            )));
        }
        for ns in [Namespace::Combinations, Namespace::Constraints] {
            for (k, v) in self.namespace(ns) {
                let found = Shape::of(v).map_err(ReprError::NonEnumerableValue)?;
                let expected = Shape::of(&schema.namespace(ns)[k])
                    .map_err(ReprError::NonEnumerableValue)?;
                if !found.compatible(&expected) {
                    return Err(ReprError::SchemaMismatch(format!(
                        "{}.{k} has shape {found}, expected {expected}",
                        ns.as_str()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ordered records sharing one key set. Used for structured solutions and
/// candidate plans alike.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    fields: Arc<[String]>,
    rows: Vec<Vec<Value>>,
}

impl Plan {
    /// `fields` must be sorted and unique; each row holds one value per field.
    pub fn from_rows(fields: Arc<[String]>, rows: Vec<Vec<Value>>) -> Self {
        debug_assert!(fields.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(rows.iter().all(|r| r.len() == fields.len()));
        Plan { fields, rows }
    }

    pub fn from_records(records: Vec<BTreeMap<String, Value>>) -> Result<Self, ReprError> {
        let Some(first) = records.first() else {
            return Ok(Plan {
                fields: Arc::from(Vec::new()),
                rows: Vec::new(),
            });
        };
        let fields: Vec<String> = first.keys().cloned().collect();
        let mut rows = Vec::with_capacity(records.len());
        for (index, rec) in records.into_iter().enumerate() {
            if !rec.keys().eq(fields.iter()) {
                return Err(ReprError::HeterogeneousRecords {
                    index,
                    expected: fields.clone(),
                    found: rec.keys().cloned().collect(),
                });
            }
            rows.push(rec.into_values().collect());
        }
        Ok(Plan {
            fields: Arc::from(fields),
            rows,
        })
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }

    pub fn get(&self, row: usize, field: &str) -> Option<&Value> {
        Some(&self.rows.get(row)?[self.field_index(field)?])
    }

    pub fn record(&self, row: usize) -> BTreeMap<String, Value> {
        self.fields
            .iter()
            .cloned()
            .zip(self.rows[row].iter().cloned())
            .collect()
    }

    /// Record-set equality: same fields and the same records, ignoring order.
    pub fn same_records(&self, other: &Plan) -> bool {
        if self.rows.is_empty() && other.rows.is_empty() {
            return true;
        }
        if self.fields != other.fields || self.rows.len() != other.rows.len() {
            return false;
        }
        let mut a: Vec<&Vec<Value>> = self.rows.iter().collect();
        let mut b: Vec<&Vec<Value>> = other.rows.iter().collect();
        a.sort();
        b.sort();
        a == b
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows.len())
                .map(|i| {
                    serde_json::Value::Object(
                        self.fields
                            .iter()
                            .zip(&self.rows[i])
                            .map(|(k, v)| (k.clone(), v.to_json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// Machine-readable form of a gold answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredSolution {
    pub records: Plan,
    pub description: String,
}

impl StructuredSolution {
    pub fn parse(text: &str) -> Result<Self, ReprError> {
        Self::from_json(&parse_doc(text)?)
    }

    pub fn from_json(json: &serde_json::Value) -> Result<Self, ReprError> {
        let doc = object(json, "solution")?;
        let solutions = doc
            .get("solutions")
            .ok_or_else(|| ReprError::MissingKey("solutions".into()))?;
        let description = description(doc, "solutions_description")?;
        let items = solutions
            .as_array()
            .ok_or_else(|| ReprError::MalformedDocument("`solutions` must be a list".into()))?;
        let mut records = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let obj = object(item, &format!("solutions[{i}]"))?;
            let mut rec = BTreeMap::new();
            for (k, v) in obj {
                let value = normalize_field(Value::from_json(v, &format!("solutions[{i}].{k}"))?)
                    .ok_or_else(|| {
                        ReprError::MalformedDocument(format!(
                            "solutions[{i}].{k} must be a scalar or a list of integers"
                        ))
                    })?;
                rec.insert(k.clone(), value);
            }
            records.push(rec);
        }
        Ok(StructuredSolution {
            records: Plan::from_records(records)?,
            description,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "solutions": self.records.to_json(),
            "solutions_description": self.description,
        })
    }

    pub fn to_canonical_string(&self) -> String {
        canonical_json(&self.to_json())
    }
}

/// Scalars pass through; integer lists are sorted and deduplicated.
fn normalize_field(v: Value) -> Option<Value> {
    match v {
        Value::List(items) => {
            let mut ints = items
                .iter()
                .map(Value::as_int)
                .collect::<Option<Vec<i64>>>()?;
            ints.sort_unstable();
            ints.dedup();
            Some(Value::List(ints.into_iter().map(Value::Int).collect()))
        }
        Value::Map(_) => None,
        scalar => Some(scalar),
    }
}

/// A single worked query/answer pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleCase {
    pub query: String,
    pub answer: String,
    pub domain_id: String,
}

impl ExampleCase {
    pub fn new(
        query: impl Into<String>,
        answer: impl Into<String>,
        domain_id: impl Into<String>,
    ) -> Result<Self, ReprError> {
        let ex = ExampleCase {
            query: query.into(),
            answer: answer.into(),
            domain_id: domain_id.into(),
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn validate(&self) -> Result<(), ReprError> {
        if self.query.trim().is_empty() {
            return Err(ReprError::MalformedDocument("example query is empty".into()));
        }
        if self.answer.trim().is_empty() {
            return Err(ReprError::MalformedDocument("example answer is empty".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ReprError> {
        let json = parse_doc(text)?;
        let ex: ExampleCase = serde_json::from_value(json)
            .map_err(|e| ReprError::MalformedDocument(e.to_string()))?;
        ex.validate()?;
        Ok(ex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn descs() -> serde_json::Value {
        json!({"combinations_description": "c", "constraints_description": "k"})
    }

    fn with(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
        for (k, v) in extra.as_object().unwrap() {
            base[k] = v.clone();
        }
        base
    }

    #[test]
    fn empty_representation_is_valid() {
        let doc = with(descs(), json!({"combinations": {}, "constraints": {}}));
        let rep = StructuredRepresentation::from_json(&doc).unwrap();
        assert!(rep.combinations.is_empty() && rep.constraints.is_empty());
    }

    #[test]
    fn missing_constraints_is_missing_key() {
        let doc = with(descs(), json!({"combinations": {}}));
        assert_eq!(
            StructuredRepresentation::from_json(&doc),
            Err(ReprError::MissingKey("constraints".into()))
        );
    }

    #[test]
    fn overlapping_keys_are_rejected() {
        let doc = with(descs(), json!({"combinations": {"a": 1}, "constraints": {"a": 2}}));
        assert_eq!(
            StructuredRepresentation::from_json(&doc),
            Err(ReprError::OverlappingKey("a".into()))
        );
    }

    #[test]
    fn nested_description_is_malformed() {
        let doc = json!({"combinations": {}, "constraints": {},
            "combinations_description": {"cities": "list"}, "constraints_description": "k"});
        assert!(matches!(
            StructuredRepresentation::from_json(&doc),
            Err(ReprError::MalformedDocument(_))
        ));
    }

    #[test]
    fn duplicate_keys_in_text_are_rejected() {
        let text = r#"{"combinations": {"a": 1, "a": 2}, "constraints": {},
            "combinations_description": "c", "constraints_description": "k"}"#;
        assert!(matches!(
            StructuredRepresentation::parse(text),
            Err(ReprError::MalformedDocument(_))
        ));
    }

    #[test]
    fn float_parameter_is_non_enumerable() {
        let doc = with(descs(), json!({"combinations": {"a": 0.5}, "constraints": {}}));
        assert!(matches!(
            StructuredRepresentation::from_json(&doc),
            Err(ReprError::NonEnumerableValue(_))
        ));
    }

    #[test]
    fn heterogeneous_solution_records() {
        let doc = json!({"solutions": [{"city": "A"}, {"city": "B", "days": [1]}],
            "solutions_description": "d"});
        assert!(matches!(
            StructuredSolution::from_json(&doc),
            Err(ReprError::HeterogeneousRecords { index: 1, .. })
        ));
    }

    #[test]
    fn solution_days_are_sorted_and_deduplicated() {
        let doc = json!({"solutions": [{"city": "A", "days": [3, 1, 2, 2]}],
            "solutions_description": "d"});
        let sol = StructuredSolution::from_json(&doc).unwrap();
        assert_eq!(
            sol.records.get(0, "days").unwrap(),
            &Value::List(vec![Value::Int(1), Value::Int(2), Value::Int(3)])
        );
    }

    #[test]
    fn empty_solution() {
        let doc = json!({"solutions": [], "solutions_description": "d"});
        assert!(StructuredSolution::from_json(&doc).unwrap().records.is_empty());
    }

    #[test]
    fn record_set_equality_ignores_order() {
        let a = Plan::from_records(vec![
            [("c".to_string(), Value::Int(1))].into(),
            [("c".to_string(), Value::Int(2))].into(),
        ])
        .unwrap();
        let b = Plan::from_records(vec![
            [("c".to_string(), Value::Int(2))].into(),
            [("c".to_string(), Value::Int(1))].into(),
        ])
        .unwrap();
        assert!(a.same_records(&b));
    }

    #[test]
    fn schema_validation_flags_drift() {
        let schema = StructuredRepresentation::from_json(&with(
            descs(),
            json!({"combinations": {"cities": ["A"]}, "constraints": {"w": {}}}),
        ))
        .unwrap();
        let ok = StructuredRepresentation::from_parameters(
            &json!({"combinations": {"cities": ["B", "C"]}, "constraints": {"w": {"B": [1, 2]}}}),
            &schema,
        )
        .unwrap();
        assert!(ok.validate_against(&schema).is_ok());
        let bad = StructuredRepresentation::from_parameters(
            &json!({"combinations": {"cities": [1]}, "constraints": {"w": {}}}),
            &schema,
        )
        .unwrap();
        assert!(bad.validate_against(&schema).is_err());
    }
}
