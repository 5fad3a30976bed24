//! Parameter values, their shapes, and strict JSON decoding.
//!
//! Every value that flows between agents and the engine is one of a small set
//! of finitely enumerable shapes: booleans, integers, text, lists and maps.
//! Floats and nulls are rejected, as are lists whose elements disagree on
//! shape and nesting deeper than [`MAX_DEPTH`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::{Serialize, Serializer};

/// Maximum container nesting accepted in parameter values.
pub const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Text(Arc<str>),
    List(Vec<Value>),
    Map(BTreeMap<String, Value>),
}

impl Value {
    pub fn text(s: impl AsRef<str>) -> Self {
        Value::Text(Arc::from(s.as_ref()))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Value::Bool(_) | Value::Int(_) | Value::Text(_))
    }

    /// Short name of the value's outer kind, used in diagnostics.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Text(_) => "text",
            Value::List(_) => "list",
            Value::Map(_) => "map",
        }
    }

    /// Follows a key path through nested maps.
    pub fn lookup<'a>(&'a self, path: &[String]) -> Option<&'a Value> {
        let mut cur = self;
        for key in path {
            cur = cur.as_map()?.get(key)?;
        }
        Some(cur)
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Text(s) => serde_json::Value::String(s.to_string()),
            Value::List(items) => {
                serde_json::Value::Array(items.iter().map(Value::to_json).collect())
            }
            Value::Map(m) => serde_json::Value::Object(
                m.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
            ),
        }
    }

    /// Converts a decoded JSON document, rejecting anything that is not
    /// finitely enumerable. `path` names the location for diagnostics.
    pub fn from_json(json: &serde_json::Value, path: &str) -> Result<Value, ValueError> {
        let value = convert(json, path, 0)?;
        Shape::of(&value).map_err(|reason| ValueError::NonEnumerable {
            path: path.to_string(),
            reason,
        })?;
        Ok(value)
    }
}

fn convert(json: &serde_json::Value, path: &str, depth: usize) -> Result<Value, ValueError> {
    let non_enum = |reason: &str| ValueError::NonEnumerable {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    match json {
        serde_json::Value::Null => Err(non_enum("null is not a value")),
        serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| non_enum("only integers are supported")),
        serde_json::Value::String(s) => Ok(Value::text(s)),
        serde_json::Value::Array(items) => {
            if depth >= MAX_DEPTH {
                return Err(non_enum("nesting too deep"));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, item)| convert(item, &format!("{path}[{i}]"), depth + 1))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::List)
        }
        serde_json::Value::Object(m) => {
            if depth >= MAX_DEPTH {
                return Err(non_enum("nesting too deep"));
            }
            m.iter()
                .map(|(k, v)| Ok((k.clone(), convert(v, &format!("{path}.{k}"), depth + 1)?)))
                .collect::<Result<BTreeMap<_, _>, _>>()
                .map(Value::Map)
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValueError {
    #[error("value at {path} is not enumerable: {reason}")]
    NonEnumerable { path: String, reason: String },
}

/// Structural type of a value. `Any` stands for the element type of an empty
/// container, which unifies with everything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Any,
    Bool,
    Int,
    Text,
    List(Box<Shape>),
    /// Map whose values all share one shape; keys are data.
    Map(Box<Shape>),
    /// Map with a fixed key set and per-key shapes.
    Record(BTreeMap<String, Shape>),
}

impl Shape {
    pub fn of(value: &Value) -> Result<Shape, String> {
        match value {
            Value::Bool(_) => Ok(Shape::Bool),
            Value::Int(_) => Ok(Shape::Int),
            Value::Text(_) => Ok(Shape::Text),
            Value::List(items) => {
                let mut elem = Shape::Any;
                for (i, item) in items.iter().enumerate() {
                    let s = Shape::of(item)?;
                    elem = elem.unify(&s).ok_or_else(|| {
                        format!("list element {i} has shape {s}, expected {elem}")
                    })?;
                }
                Ok(Shape::List(Box::new(elem)))
            }
            Value::Map(m) => {
                let fields = m
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), Shape::of(v)?)))
                    .collect::<Result<BTreeMap<_, _>, String>>()?;
                let mut uniform = Some(Shape::Any);
                for s in fields.values() {
                    uniform = uniform.and_then(|u| u.unify(s));
                }
                match uniform {
                    Some(elem) => Ok(Shape::Map(Box::new(elem))),
                    None => Ok(Shape::Record(fields)),
                }
            }
        }
    }

    /// Least shape compatible with both, if any.
    pub fn unify(&self, other: &Shape) -> Option<Shape> {
        use Shape::*;
        match (self, other) {
            (Any, s) | (s, Any) => Some(s.clone()),
            (Bool, Bool) => Some(Bool),
            (Int, Int) => Some(Int),
            (Text, Text) => Some(Text),
            (List(a), List(b)) => a.unify(b).map(|s| List(Box::new(s))),
            (Map(a), Map(b)) => a.unify(b).map(|s| Map(Box::new(s))),
            (Record(a), Record(b)) if a.keys().eq(b.keys()) => a
                .iter()
                .map(|(k, s)| Some((k.clone(), s.unify(&b[k])?)))
                .collect::<Option<BTreeMap<_, _>>>()
                .map(Record),
            (Record(f), Map(e)) | (Map(e), Record(f)) => {
                let mut acc = (**e).clone();
                for s in f.values() {
                    acc = acc.unify(s)?;
                }
                Some(Map(Box::new(acc)))
            }
            (Record(a), Record(b)) => {
                let mut acc = Any;
                for s in a.values().chain(b.values()) {
                    acc = acc.unify(s)?;
                }
                Some(Map(Box::new(acc)))
            }
            _ => None,
        }
    }

    pub fn compatible(&self, other: &Shape) -> bool {
        self.unify(other).is_some()
    }

    /// Shape of the value found under `key`, if the shape admits that key.
    pub fn field(&self, key: &str) -> Option<Shape> {
        match self {
            Shape::Any => Some(Shape::Any),
            Shape::Map(elem) => Some((**elem).clone()),
            Shape::Record(fields) => fields.get(key).cloned(),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Shape::Any | Shape::Bool | Shape::Int | Shape::Text)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Any => write!(f, "any"),
            Shape::Bool => write!(f, "bool"),
            Shape::Int => write!(f, "int"),
            Shape::Text => write!(f, "text"),
            Shape::List(e) => write!(f, "list<{e}>"),
            Shape::Map(e) => write!(f, "map<text, {e}>"),
            Shape::Record(fields) => {
                write!(f, "{{")?;
                for (i, (k, s)) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {s}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// JSON document decoded with duplicate object keys rejected.
struct StrictJson(serde_json::Value);

impl<'de> Deserialize<'de> for StrictJson {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(StrictVisitor).map(StrictJson)
    }
}

struct StrictVisitor;

impl<'de> Visitor<'de> for StrictVisitor {
    type Value = serde_json::Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_bool<E>(self, v: bool) -> Result<Self::Value, E> {
        Ok(v.into())
    }
    fn visit_i64<E>(self, v: i64) -> Result<Self::Value, E> {
        Ok(v.into())
    }
    fn visit_u64<E>(self, v: u64) -> Result<Self::Value, E> {
        Ok(v.into())
    }
    fn visit_f64<E>(self, v: f64) -> Result<Self::Value, E> {
        Ok(serde_json::Number::from_f64(v)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null))
    }
    fn visit_str<E>(self, v: &str) -> Result<Self::Value, E> {
        Ok(v.into())
    }
    fn visit_string<E>(self, v: String) -> Result<Self::Value, E> {
        Ok(v.into())
    }
    fn visit_unit<E>(self) -> Result<Self::Value, E> {
        Ok(serde_json::Value::Null)
    }
    fn visit_none<E>(self) -> Result<Self::Value, E> {
        Ok(serde_json::Value::Null)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        let mut out = Vec::new();
        while let Some(StrictJson(v)) = seq.next_element()? {
            out.push(v);
        }
        Ok(serde_json::Value::Array(out))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut out = serde_json::Map::new();
        while let Some(key) = map.next_key::<String>()? {
            if out.contains_key(&key) {
                return Err(de::Error::custom(format!("duplicate key `{key}`")));
            }
            let StrictJson(v) = map.next_value()?;
            out.insert(key, v);
        }
        Ok(serde_json::Value::Object(out))
    }
}

/// Parses JSON text, rejecting duplicate keys within any object.
pub fn parse_json_strict(text: &str) -> Result<serde_json::Value, serde_json::Error> {
    serde_json::from_str::<StrictJson>(text).map(|s| s.0)
}

/// Canonical text form: sorted keys, two-space indentation, trailing newline.
pub fn canonical_json(json: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(json).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_json_strict(r#"{"a": 1, "b": {"c": 1, "c": 2}}"#).unwrap_err();
        assert!(err.to_string().contains("duplicate key `c`"));
        assert!(parse_json_strict(r#"{"a": 1, "b": {"c": 1}}"#).is_ok());
    }

    #[test]
    fn floats_and_nulls_are_not_enumerable() {
        assert!(Value::from_json(&json!({"x": 1.5}), "$").is_err());
        assert!(Value::from_json(&json!({"x": null}), "$").is_err());
        assert!(Value::from_json(&json!({"x": [1, "a"]}), "$").is_err());
        assert!(Value::from_json(&json!([[[[[1]]]]]), "$").is_err());
        assert!(Value::from_json(&json!({"x": [[1, 2]], "y": {"a": [1]}}), "$").is_ok());
    }

    #[test]
    fn shapes_of_typical_parameters() {
        let stays = Value::from_json(&json!({"A": 2, "B": 3}), "$").unwrap();
        assert_eq!(Shape::of(&stays).unwrap(), Shape::Map(Box::new(Shape::Int)));
        let friend = Value::from_json(&json!({"name": "X", "open": 540}), "$").unwrap();
        assert!(matches!(Shape::of(&friend).unwrap(), Shape::Record(_)));
        let friends = Value::from_json(
            &json!([{"name": "X", "open": 540}, {"name": "Y", "open": 600}]),
            "$",
        )
        .unwrap();
        assert!(matches!(Shape::of(&friends).unwrap(), Shape::List(_)));
        let empty = Value::from_json(&json!({}), "$").unwrap();
        assert_eq!(Shape::of(&empty).unwrap(), Shape::Map(Box::new(Shape::Any)));
    }

    #[test]
    fn unify_any_and_records() {
        let l = Shape::List(Box::new(Shape::Any));
        assert_eq!(
            l.unify(&Shape::List(Box::new(Shape::Int))),
            Some(Shape::List(Box::new(Shape::Int)))
        );
        assert_eq!(Shape::Int.unify(&Shape::Text), None);
    }
}
