use serde_json::{json, Map, Value as Json};

use super::ast::*;
use crate::repr::Namespace;
use crate::value::{parse_json_strict, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DslErrorKind {
    UnknownOp(String),
    ArityError {
        op: String,
        expected: String,
        found: usize,
    },
    MalformedDocument(String),
}

/// A parse diagnostic anchored at a node path such as `$.root.args[0]`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {}", describe(.kind))]
pub struct DslError {
    pub kind: DslErrorKind,
    pub path: String,
}

fn describe(kind: &DslErrorKind) -> String {
    match kind {
        DslErrorKind::UnknownOp(op) => format!("unknown op `{op}`"),
        DslErrorKind::ArityError {
            op,
            expected,
            found,
        } => format!("`{op}` takes {expected} argument(s), found {found}"),
        DslErrorKind::MalformedDocument(m) => m.clone(),
    }
}

fn malformed(path: &str, msg: impl Into<String>) -> DslError {
    DslError {
        kind: DslErrorKind::MalformedDocument(msg.into()),
        path: path.to_string(),
    }
}

const EXPR_OPS: &[&str] = &[
    "const",
    "param_ref",
    "record_field",
    "compare",
    "arith",
    "all_of",
    "any_of",
    "not",
    "count",
    "sum",
    "max_over",
    "every_record",
    "len",
    "first",
    "last",
    "contains_days",
];
const GENERATOR_OPS: &[&str] = &["permutations", "subset_orderings"];
const EMIT_OPS: &[&str] = &["sequential_day_assignment", "greedy_schedule"];
const SEQUENCE_OPS: &[&str] = &["pairs_in_edge_set"];
const TEMPLATE_OPS: &[&str] = &["text", "field", "each", "when"];

fn is_known(op: &str) -> bool {
    [EXPR_OPS, GENERATOR_OPS, EMIT_OPS, SEQUENCE_OPS, TEMPLATE_OPS]
        .iter()
        .any(|set| set.contains(&op))
}

struct Node<'a> {
    obj: &'a Map<String, Json>,
    op: &'a str,
    path: String,
}

impl<'a> Node<'a> {
    /// Reads a node whose op must belong to `allowed`.
    fn read(json: &'a Json, path: String, allowed: &[&str], place: &str) -> Result<Self, DslError> {
        let obj = json
            .as_object()
            .ok_or_else(|| malformed(&path, "expected a node object"))?;
        let op = obj
            .get("op")
            .and_then(Json::as_str)
            .ok_or_else(|| malformed(&path, "node has no string `op`"))?;
        if !allowed.contains(&op) {
            if is_known(op) {
                return Err(malformed(&path, format!("`{op}` is not allowed as {place}")));
            }
            return Err(DslError {
                kind: DslErrorKind::UnknownOp(op.to_string()),
                path,
            });
        }
        Ok(Node { obj, op, path })
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), DslError> {
        for key in self.obj.keys() {
            if key != "op" && key != "args" && !allowed.contains(&key.as_str()) {
                return Err(malformed(
                    &self.path,
                    format!("unexpected key `{key}` on `{}`", self.op),
                ));
            }
        }
        Ok(())
    }

    fn args(&self, min: usize, max: Option<usize>) -> Result<Vec<(&'a Json, String)>, DslError> {
        let list: &[Json] = match self.obj.get("args") {
            None => &[],
            Some(Json::Array(a)) => a,
            Some(_) => return Err(malformed(&self.path, "`args` must be a list")),
        };
        let ok = list.len() >= min && max.map_or(true, |m| list.len() <= m);
        if !ok {
            let expected = match max {
                Some(m) if m == min => m.to_string(),
                Some(m) => format!("{min}..={m}"),
                None => format!("at least {min}"),
            };
            return Err(DslError {
                kind: DslErrorKind::ArityError {
                    op: self.op.to_string(),
                    expected,
                    found: list.len(),
                },
                path: self.path.clone(),
            });
        }
        Ok(list
            .iter()
            .enumerate()
            .map(|(i, a)| (a, format!("{}.args[{i}]", self.path)))
            .collect())
    }

    fn exprs(&self, n: usize) -> Result<Vec<Expr>, DslError> {
        self.args(n, Some(n))?
            .into_iter()
            .map(|(j, p)| parse_expr(j, p))
            .collect()
    }

    fn str_attr(&self, key: &str, default: Option<&str>) -> Result<String, DslError> {
        match self.obj.get(key) {
            Some(Json::String(s)) => Ok(s.clone()),
            Some(_) => Err(malformed(&self.path, format!("`{key}` must be text"))),
            None => default
                .map(str::to_string)
                .ok_or_else(|| malformed(&self.path, format!("`{}` requires `{key}`", self.op))),
        }
    }

    fn list_attr(&self, key: &str) -> Result<Vec<(&'a Json, String)>, DslError> {
        match self.obj.get(key) {
            None => Ok(Vec::new()),
            Some(Json::Array(a)) => Ok(a
                .iter()
                .enumerate()
                .map(|(i, j)| (j, format!("{}.{key}[{i}]", self.path)))
                .collect()),
            Some(_) => Err(malformed(&self.path, format!("`{key}` must be a list"))),
        }
    }
}

/// Parses a spec from JSON text.
pub fn parse_solver_spec(text: &str) -> Result<SolverSpec, DslError> {
    let json = parse_json_strict(text).map_err(|e| malformed("$", e.to_string()))?;
    SolverSpec::from_json(&json)
}

impl SolverSpec {
    pub fn from_json(json: &Json) -> Result<SolverSpec, DslError> {
        let obj = json
            .as_object()
            .ok_or_else(|| malformed("$", "spec must be a map"))?;
        let kind = obj
            .get("kind")
            .and_then(Json::as_str)
            .ok_or_else(|| malformed("$", "spec has no string `kind`"))?;
        let allow = |keys: &[&str]| -> Result<(), DslError> {
            match obj.keys().find(|k| *k != "kind" && !keys.contains(&k.as_str())) {
                Some(k) => Err(malformed("$", format!("unexpected key `{k}` on {kind} spec"))),
                None => Ok(()),
            }
        };
        match kind {
            "combination" => {
                allow(&["root"])?;
                let root = obj
                    .get("root")
                    .ok_or_else(|| malformed("$", "combination spec requires `root`"))?;
                Ok(SolverSpec::Combination(CombinationSpec {
                    root: parse_generator(root, "$.root".into())?,
                }))
            }
            "filter" => {
                allow(&["mode", "metric", "predicates"])?;
                let mode = match obj.get("mode").and_then(Json::as_str) {
                    Some("satisfy_first") => {
                        if obj.contains_key("metric") {
                            return Err(malformed("$", "`metric` is only valid with `maximize`"));
                        }
                        FilterMode::SatisfyFirst
                    }
                    Some("maximize") => {
                        let metric = expr_list(obj.get("metric"), "$.metric")?;
                        if metric.is_empty() {
                            return Err(malformed("$.metric", "maximize needs at least one metric"));
                        }
                        FilterMode::Maximize(metric)
                    }
                    Some(other) => {
                        return Err(malformed("$.mode", format!("unknown filter mode `{other}`")))
                    }
                    None => return Err(malformed("$", "filter spec requires a text `mode`")),
                };
                Ok(SolverSpec::Filter(FilterSpec {
                    mode,
                    predicates: expr_list(obj.get("predicates"), "$.predicates")?,
                }))
            }
            "deliver" => {
                allow(&["template"])?;
                Ok(SolverSpec::Deliver(DeliverSpec {
                    template: template_list(obj.get("template"), "$.template")?,
                }))
            }
            other => Err(malformed("$.kind", format!("unknown spec kind `{other}`"))),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            SolverSpec::Combination(c) => json!({"kind": "combination", "root": c.root.to_json()}),
            SolverSpec::Filter(f) => {
                let mut out = json!({
                    "kind": "filter",
                    "predicates": f.predicates.iter().map(Expr::to_json).collect::<Vec<_>>(),
                });
                match &f.mode {
                    FilterMode::SatisfyFirst => out["mode"] = json!("satisfy_first"),
                    FilterMode::Maximize(metric) => {
                        out["mode"] = json!("maximize");
                        out["metric"] = Json::Array(metric.iter().map(Expr::to_json).collect());
                    }
                }
                out
            }
            SolverSpec::Deliver(d) => json!({
                "kind": "deliver",
                "template": d.template.iter().map(TemplateNode::to_json).collect::<Vec<_>>(),
            }),
        }
    }
}

fn expr_list(json: Option<&Json>, path: &str) -> Result<Vec<Expr>, DslError> {
    match json {
        None => Ok(Vec::new()),
        Some(Json::Array(a)) => a
            .iter()
            .enumerate()
            .map(|(i, j)| parse_expr(j, format!("{path}[{i}]")))
            .collect(),
        Some(_) => Err(malformed(path, "expected a list of nodes")),
    }
}

fn template_list(json: Option<&Json>, path: &str) -> Result<Vec<TemplateNode>, DslError> {
    match json {
        None => Ok(Vec::new()),
        Some(Json::Array(a)) => a
            .iter()
            .enumerate()
            .map(|(i, j)| parse_template(j, format!("{path}[{i}]")))
            .collect(),
        Some(_) => Err(malformed(path, "expected a list of template nodes")),
    }
}

fn parse_generator(json: &Json, path: String) -> Result<Generator, DslError> {
    let node = Node::read(json, path, GENERATOR_OPS, "the combination root")?;
    node.check_keys(&["prune", "emit"])?;
    let kind = match node.op {
        "permutations" => GeneratorKind::Permutations,
        _ => GeneratorKind::SubsetOrderings,
    };
    let source = node.exprs(1)?.remove(0);
    let prune = node
        .list_attr("prune")?
        .into_iter()
        .map(|(j, p)| parse_sequence_predicate(j, p))
        .collect::<Result<_, _>>()?;
    let emit_json = node
        .obj
        .get("emit")
        .ok_or_else(|| malformed(&node.path, "generator requires `emit`"))?;
    let emit = parse_emit(emit_json, format!("{}.emit", node.path))?;
    Ok(Generator {
        kind,
        source,
        prune,
        emit,
    })
}

fn parse_sequence_predicate(json: &Json, path: String) -> Result<SequencePredicate, DslError> {
    let node = Node::read(json, path, SEQUENCE_OPS, "a prune step")?;
    node.check_keys(&[])?;
    Ok(SequencePredicate::PairsInEdgeSet {
        edges: node.exprs(1)?.remove(0),
    })
}

fn parse_emit(json: &Json, path: String) -> Result<Emit, DslError> {
    let node = Node::read(json, path, EMIT_OPS, "an emit step")?;
    match node.op {
        "sequential_day_assignment" => {
            node.check_keys(&["overlap", "item_field", "days_field"])?;
            let overlap = match node.obj.get("overlap") {
                None => 1,
                Some(j) => j
                    .as_i64()
                    .filter(|o| *o >= 0)
                    .ok_or_else(|| malformed(&node.path, "`overlap` must be a non-negative integer"))?,
            };
            let item_field = node.str_attr("item_field", Some("city"))?;
            let days_field = node.str_attr("days_field", Some("days"))?;
            if item_field == days_field {
                return Err(malformed(&node.path, "`item_field` and `days_field` must differ"));
            }
            Ok(Emit::SequentialDayAssignment {
                stays: node.exprs(1)?.remove(0),
                overlap,
                item_field,
                days_field,
            })
        }
        _ => {
            node.check_keys(&[])?;
            let mut args = node.exprs(3)?.into_iter();
            Ok(Emit::GreedySchedule {
                origin_place: args.next().unwrap(),
                origin_time: args.next().unwrap(),
                travel: args.next().unwrap(),
            })
        }
    }
}

fn parse_expr(json: &Json, path: String) -> Result<Expr, DslError> {
    let node = Node::read(json, path, EXPR_OPS, "an expression")?;
    let unary = |node: &Node, f: fn(Box<Expr>) -> Expr| -> Result<Expr, DslError> {
        node.check_keys(&[])?;
        Ok(f(Box::new(node.exprs(1)?.remove(0))))
    };
    match node.op {
        "const" => {
            node.check_keys(&["value"])?;
            node.args(0, Some(0))?;
            let raw = node
                .obj
                .get("value")
                .ok_or_else(|| malformed(&node.path, "`const` requires `value`"))?;
            let value = Value::from_json(raw, &format!("{}.value", node.path))
                .map_err(|e| malformed(&node.path, e.to_string()))?;
            Ok(Expr::Const(value))
        }
        "param_ref" => {
            node.check_keys(&["path", "from"])?;
            node.args(0, Some(0))?;
            let path = match node.obj.get("path") {
                Some(Json::Array(a)) if !a.is_empty() => a
                    .iter()
                    .map(|p| p.as_str().map(str::to_string))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| malformed(&node.path, "`path` must hold text keys"))?,
                Some(Json::String(s)) if !s.is_empty() => vec![s.clone()],
                _ => return Err(malformed(&node.path, "`param_ref` requires a non-empty `path`")),
            };
            let namespace = match node.obj.get("from").map(|f| f.as_str()) {
                None => None,
                Some(Some("combinations")) => Some(Namespace::Combinations),
                Some(Some("constraints")) => Some(Namespace::Constraints),
                Some(_) => {
                    return Err(malformed(
                        &node.path,
                        "`from` must be \"combinations\" or \"constraints\"",
                    ))
                }
            };
            Ok(Expr::ParamRef { namespace, path })
        }
        "record_field" => {
            node.check_keys(&["name", "rel"])?;
            node.args(0, Some(0))?;
            let rel = match node.str_attr("rel", Some("current"))?.as_str() {
                "current" => RecordRel::Current,
                "prev" => RecordRel::Prev,
                other => return Err(malformed(&node.path, format!("unknown `rel` `{other}`"))),
            };
            Ok(Expr::RecordField {
                name: node.str_attr("name", None)?,
                rel,
            })
        }
        "compare" => {
            node.check_keys(&["operator"])?;
            let sym = node.str_attr("operator", None)?;
            let op = CmpOp::from_symbol(&sym)
                .ok_or_else(|| malformed(&node.path, format!("unknown comparison `{sym}`")))?;
            let mut a = node.exprs(2)?.into_iter();
            Ok(Expr::Compare {
                op,
                lhs: Box::new(a.next().unwrap()),
                rhs: Box::new(a.next().unwrap()),
            })
        }
        "arith" => {
            node.check_keys(&["operator"])?;
            let sym = node.str_attr("operator", None)?;
            let op = ArithOp::from_symbol(&sym)
                .ok_or_else(|| malformed(&node.path, format!("unknown arithmetic `{sym}`")))?;
            let mut a = node.exprs(2)?.into_iter();
            Ok(Expr::Arith {
                op,
                lhs: Box::new(a.next().unwrap()),
                rhs: Box::new(a.next().unwrap()),
            })
        }
        "all_of" | "any_of" => {
            node.check_keys(&[])?;
            let items = node
                .args(1, None)?
                .into_iter()
                .map(|(j, p)| parse_expr(j, p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if node.op == "all_of" {
                Expr::AllOf(items)
            } else {
                Expr::AnyOf(items)
            })
        }
        "not" => unary(&node, Expr::Not),
        "count" => unary(&node, Expr::Count),
        "sum" => unary(&node, Expr::Sum),
        "max_over" => unary(&node, Expr::MaxOver),
        "every_record" => unary(&node, Expr::EveryRecord),
        "len" => unary(&node, Expr::Len),
        "first" => unary(&node, Expr::First),
        "last" => unary(&node, Expr::Last),
        _ => {
            node.check_keys(&["key_field", "days_field"])?;
            Ok(Expr::ContainsDays {
                windows: Box::new(node.exprs(1)?.remove(0)),
                key_field: node.str_attr("key_field", Some("city"))?,
                days_field: node.str_attr("days_field", Some("days"))?,
            })
        }
    }
}

fn parse_template(json: &Json, path: String) -> Result<TemplateNode, DslError> {
    if let Json::String(s) = json {
        return Ok(TemplateNode::Text(s.clone()));
    }
    let node = Node::read(json, path, TEMPLATE_OPS, "a template node")?;
    match node.op {
        "text" => {
            node.check_keys(&["value"])?;
            node.args(0, Some(0))?;
            Ok(TemplateNode::Text(node.str_attr("value", None)?))
        }
        "field" => {
            node.check_keys(&["format"])?;
            let format = match node.str_attr("format", Some("plain"))?.as_str() {
                "plain" => FieldFormat::Plain,
                "clock12" => FieldFormat::Clock12,
                other => return Err(malformed(&node.path, format!("unknown format `{other}`"))),
            };
            Ok(TemplateNode::Field {
                expr: node.exprs(1)?.remove(0),
                format,
            })
        }
        "each" => {
            node.check_keys(&["body"])?;
            node.args(0, Some(0))?;
            Ok(TemplateNode::Each(template_list(
                node.obj.get("body"),
                &format!("{}.body", node.path),
            )?))
        }
        _ => {
            node.check_keys(&["position", "then", "else"])?;
            let cond = match (node.obj.get("position"), node.obj.get("args")) {
                (Some(p), None) => {
                    let name = p.as_str().unwrap_or_default();
                    Condition::Position(Position::parse(name).ok_or_else(|| {
                        malformed(&node.path, format!("unknown position `{p}`"))
                    })?)
                }
                (None, Some(_)) => Condition::Expr(node.exprs(1)?.remove(0)),
                _ => {
                    return Err(malformed(
                        &node.path,
                        "`when` needs exactly one of `position` or a single condition argument",
                    ))
                }
            };
            Ok(TemplateNode::When {
                cond,
                then: template_list(node.obj.get("then"), &format!("{}.then", node.path))?,
                otherwise: template_list(node.obj.get("else"), &format!("{}.else", node.path))?,
            })
        }
    }
}

impl Generator {
    pub fn to_json(&self) -> Json {
        let op = match self.kind {
            GeneratorKind::Permutations => "permutations",
            GeneratorKind::SubsetOrderings => "subset_orderings",
        };
        json!({
            "op": op,
            "args": [self.source.to_json()],
            "prune": self.prune.iter().map(|p| match p {
                SequencePredicate::PairsInEdgeSet { edges } =>
                    json!({"op": "pairs_in_edge_set", "args": [edges.to_json()]}),
            }).collect::<Vec<_>>(),
            "emit": self.emit.to_json(),
        })
    }
}

impl Emit {
    pub fn to_json(&self) -> Json {
        match self {
            Emit::SequentialDayAssignment {
                stays,
                overlap,
                item_field,
                days_field,
            } => json!({
                "op": "sequential_day_assignment",
                "args": [stays.to_json()],
                "overlap": overlap,
                "item_field": item_field,
                "days_field": days_field,
            }),
            Emit::GreedySchedule {
                origin_place,
                origin_time,
                travel,
            } => json!({
                "op": "greedy_schedule",
                "args": [origin_place.to_json(), origin_time.to_json(), travel.to_json()],
            }),
        }
    }
}

impl Expr {
    pub fn to_json(&self) -> Json {
        let un = |op: &str, e: &Expr| json!({"op": op, "args": [e.to_json()]});
        match self {
            Expr::Const(v) => json!({"op": "const", "value": v.to_json()}),
            Expr::ParamRef { namespace, path } => {
                let mut j = json!({"op": "param_ref", "path": path});
                if let Some(ns) = namespace {
                    j["from"] = json!(ns.as_str());
                }
                j
            }
            Expr::RecordField { name, rel } => {
                let mut j = json!({"op": "record_field", "name": name});
                if *rel == RecordRel::Prev {
                    j["rel"] = json!("prev");
                }
                j
            }
            Expr::Compare { op, lhs, rhs } => json!({
                "op": "compare", "operator": op.symbol(), "args": [lhs.to_json(), rhs.to_json()],
            }),
            Expr::Arith { op, lhs, rhs } => json!({
                "op": "arith", "operator": op.symbol(), "args": [lhs.to_json(), rhs.to_json()],
            }),
            Expr::AllOf(items) => {
                json!({"op": "all_of", "args": items.iter().map(Expr::to_json).collect::<Vec<_>>()})
            }
            Expr::AnyOf(items) => {
                json!({"op": "any_of", "args": items.iter().map(Expr::to_json).collect::<Vec<_>>()})
            }
            Expr::Not(e) => un("not", e),
            Expr::Count(e) => un("count", e),
            Expr::Sum(e) => un("sum", e),
            Expr::MaxOver(e) => un("max_over", e),
            Expr::EveryRecord(e) => un("every_record", e),
            Expr::Len(e) => un("len", e),
            Expr::First(e) => un("first", e),
            Expr::Last(e) => un("last", e),
            Expr::ContainsDays {
                windows,
                key_field,
                days_field,
            } => json!({
                "op": "contains_days",
                "args": [windows.to_json()],
                "key_field": key_field,
                "days_field": days_field,
            }),
        }
    }
}

impl TemplateNode {
    pub fn to_json(&self) -> Json {
        let list = |nodes: &[TemplateNode]| nodes.iter().map(TemplateNode::to_json).collect::<Vec<_>>();
        match self {
            TemplateNode::Text(s) => Json::String(s.clone()),
            TemplateNode::Field { expr, format } => {
                let mut j = json!({"op": "field", "args": [expr.to_json()]});
                if *format == FieldFormat::Clock12 {
                    j["format"] = json!("clock12");
                }
                j
            }
            TemplateNode::Each(body) => json!({"op": "each", "body": list(body)}),
            TemplateNode::When {
                cond,
                then,
                otherwise,
            } => {
                let mut j = json!({"op": "when", "then": list(then)});
                match cond {
                    Condition::Position(p) => j["position"] = json!(p.as_str()),
                    Condition::Expr(e) => j["args"] = json!([e.to_json()]),
                }
                if !otherwise.is_empty() {
                    j["else"] = Json::Array(list(otherwise));
                }
                j
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trip_combination_pipeline() {
        let spec = parse_solver_spec(
            r#"{"kind": "combination", "root": {
                "op": "permutations",
                "args": [{"op": "param_ref", "path": ["cities"]}],
                "prune": [{"op": "pairs_in_edge_set", "args": [{"op": "param_ref", "path": ["direct_flights"]}]}],
                "emit": {"op": "sequential_day_assignment", "overlap": 1,
                         "args": [{"op": "param_ref", "path": ["city_stays"]}]}}}"#,
        )
        .unwrap();
        let SolverSpec::Combination(c) = spec else {
            panic!("wrong kind")
        };
        assert_eq!(c.root.kind, GeneratorKind::Permutations);
        assert_eq!(c.root.prune.len(), 1);
        assert!(matches!(
            c.root.emit,
            Emit::SequentialDayAssignment { overlap: 1, .. }
        ));
    }

    #[test]
    fn single_literal_deliver() {
        let spec = parse_solver_spec(r#"{"kind": "deliver", "template": ["hello"]}"#).unwrap();
        assert_eq!(
            spec,
            SolverSpec::Deliver(DeliverSpec {
                template: vec![TemplateNode::Text("hello".into())]
            })
        );
    }

    #[test]
    fn unknown_op_reports_path() {
        let err = parse_solver_spec(
            r#"{"kind": "combination", "root": {"op": "permutations",
                "args": [{"op": "shuffle", "args": []}],
                "emit": {"op": "sequential_day_assignment", "args": [{"op": "const", "value": {}}]}}}"#,
        )
        .unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnknownOp("shuffle".into()));
        assert_eq!(err.path, "$.root.args[0]");
    }

    #[test]
    fn arity_is_checked() {
        let err = parse_solver_spec(
            r#"{"kind": "filter", "mode": "satisfy_first",
                "predicates": [{"op": "not", "args": []}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err.kind, DslErrorKind::ArityError { found: 0, .. }));
        assert_eq!(err.path, "$.predicates[0]");
    }

    #[test]
    fn misplaced_op_is_malformed() {
        let err = parse_solver_spec(
            r#"{"kind": "filter", "mode": "satisfy_first",
                "predicates": [{"op": "permutations", "args": []}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err.kind, DslErrorKind::MalformedDocument(_)));
    }

    #[test]
    fn maximize_requires_metric() {
        assert!(parse_solver_spec(r#"{"kind": "filter", "mode": "maximize"}"#).is_err());
        assert!(parse_solver_spec(
            r#"{"kind": "filter", "mode": "maximize", "metric": [{"op": "const", "value": 1}]}"#
        )
        .is_ok());
    }

    #[test]
    fn not_json_is_malformed() {
        let err = parse_solver_spec("def combinations_func(data): pass").unwrap_err();
        assert_eq!(err.path, "$");
    }
}
