use std::collections::BTreeMap;
use std::fmt;

use super::ast::*;
use crate::repr::{Namespace, Plan, StructuredRepresentation};
use crate::value::Shape;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FindingKind {
    /// A `param_ref` or `record_field` names something that does not exist.
    UnresolvedRef(String),
    ShapeMismatch { expected: String, found: String },
    /// A construct used where its context is unavailable.
    OutOfScope(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub kind: FindingKind,
    pub path: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FindingKind::UnresolvedRef(name) => write!(f, "{}: unresolved reference `{name}`", self.path),
            FindingKind::ShapeMismatch { expected, found } => {
                write!(f, "{}: expected {expected}, found {found}", self.path)
            }
            FindingKind::OutOfScope(what) => write!(f, "{}: {what}", self.path),
        }
    }
}

/// Outcome of a typecheck. Empty means the spec is well-typed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }

    fn merge(&mut self, other: CheckReport, prefix: &str) {
        self.findings.extend(other.findings.into_iter().map(|f| Finding {
            path: format!("{prefix}{}", f.path.trim_start_matches('$')),
            ..f
        }));
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Field shapes of the records a plan carries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordSchema {
    pub fields: BTreeMap<String, Shape>,
}

impl RecordSchema {
    /// Schema observed on a concrete plan; fields never seen are absent.
    pub fn from_plan(plan: &Plan) -> Self {
        let mut fields = BTreeMap::new();
        for (i, name) in plan.fields().iter().enumerate() {
            let mut shape = Shape::Any;
            for row in plan.rows() {
                if let Some(s) = Shape::of(&row[i]).ok().and_then(|s| shape.unify(&s)) {
                    shape = s;
                }
            }
            fields.insert(name.clone(), shape);
        }
        RecordSchema { fields }
    }
}

/// Record schema produced by a combination spec's emit step.
pub fn record_schema(spec: &CombinationSpec) -> RecordSchema {
    let fields = match &spec.root.emit {
        Emit::SequentialDayAssignment {
            item_field,
            days_field,
            ..
        } => BTreeMap::from([
            (item_field.clone(), Shape::Text),
            (days_field.clone(), Shape::List(Box::new(Shape::Int))),
        ]),
        Emit::GreedySchedule { .. } => SCHEDULE_FIELDS
            .iter()
            .map(|f| {
                let shape = match *f {
                    "friend" | "from" | "place" => Shape::Text,
                    _ => Shape::Int,
                };
                (f.to_string(), shape)
            })
            .collect(),
    };
    RecordSchema { fields }
}

/// Typechecks a single spec. Filter and deliver specs are checked without a
/// record schema, so record fields are accepted at any shape.
pub fn typecheck_spec(spec: &SolverSpec, rep: &StructuredRepresentation) -> CheckReport {
    typecheck_spec_with(spec, rep, None)
}

pub fn typecheck_spec_with(
    spec: &SolverSpec,
    rep: &StructuredRepresentation,
    records: Option<&RecordSchema>,
) -> CheckReport {
    let mut c = Checker {
        rep,
        default_ns: spec.kind().default_namespace(),
        records,
        findings: Vec::new(),
    };
    match spec {
        SolverSpec::Combination(s) => c.combination(s),
        SolverSpec::Filter(s) => c.filter(s),
        SolverSpec::Deliver(s) => c.deliver(s),
    }
    CheckReport {
        findings: c.findings,
    }
}

/// Checks the three specs as a unit: kinds, and filter/deliver against the
/// records the combination spec emits.
pub fn typecheck_bundle(
    combination: &SolverSpec,
    filter: &SolverSpec,
    deliver: &SolverSpec,
    rep: &StructuredRepresentation,
) -> CheckReport {
    let mut report = CheckReport::default();
    let expected = [
        (combination, SpecKind::Combination),
        (filter, SpecKind::Filter),
        (deliver, SpecKind::Deliver),
    ];
    for (spec, kind) in expected {
        if spec.kind() != kind {
            report.findings.push(Finding {
                kind: FindingKind::ShapeMismatch {
                    expected: format!("{kind} spec"),
                    found: format!("{} spec", spec.kind()),
                },
                path: format!("{kind}:$"),
            });
        }
    }
    if !report.is_ok() {
        return report;
    }
    let SolverSpec::Combination(comb) = combination else {
        unreachable!("kind checked above")
    };
    let schema = record_schema(comb);
    report.merge(typecheck_spec_with(combination, rep, None), "combination:$");
    report.merge(typecheck_spec_with(filter, rep, Some(&schema)), "filter:$");
    report.merge(typecheck_spec_with(deliver, rep, Some(&schema)), "deliver:$");
    report
}

/// What an expression may read at its position.
#[derive(Debug, Clone, Copy)]
struct Ctx {
    /// The whole candidate plan (aggregates, `contains_days`).
    plan: bool,
    /// A current record (`record_field`).
    record: bool,
    /// The record before the current one.
    prev: bool,
    /// Inside an `each` body, where position conditions apply.
    iterating: bool,
}

const PARAMS_ONLY: Ctx = Ctx {
    plan: false,
    record: false,
    prev: false,
    iterating: false,
};
const PLAN: Ctx = Ctx {
    plan: true,
    ..PARAMS_ONLY
};

struct Checker<'a> {
    rep: &'a StructuredRepresentation,
    default_ns: Option<Namespace>,
    records: Option<&'a RecordSchema>,
    findings: Vec<Finding>,
}

fn int() -> Shape {
    Shape::Int
}

fn list_of(s: Shape) -> Shape {
    Shape::List(Box::new(s))
}

fn map_of(s: Shape) -> Shape {
    Shape::Map(Box::new(s))
}

impl Checker<'_> {
    fn push(&mut self, kind: FindingKind, path: &str) {
        self.findings.push(Finding {
            kind,
            path: path.to_string(),
        });
    }

    fn mismatch(&mut self, expected: impl fmt::Display, found: &Shape, path: &str) {
        self.push(
            FindingKind::ShapeMismatch {
                expected: expected.to_string(),
                found: found.to_string(),
            },
            path,
        );
    }

    /// Records a mismatch unless `found` is compatible with `want`; returns
    /// the unified shape, or `want` after an error.
    fn expect(&mut self, found: &Shape, want: &Shape, path: &str) -> Shape {
        match found.unify(want) {
            Some(s) => s,
            None => {
                self.mismatch(want, found, path);
                want.clone()
            }
        }
    }

    fn combination(&mut self, spec: &CombinationSpec) {
        let g = &spec.root;
        let path = "$.root";
        let source = self.expr(&g.source, &format!("{path}.args[0]"), PARAMS_ONLY);
        let item = match &g.emit {
            Emit::SequentialDayAssignment { .. } => Shape::Text,
            Emit::GreedySchedule { .. } => {
                Shape::Record(FRIEND_KEYS.iter().map(|k| (k.to_string(), Shape::Any)).collect())
            }
        };
        let elem = match &source {
            Shape::List(e) => (**e).clone(),
            Shape::Any => Shape::Any,
            other => {
                self.mismatch("a list of items", other, &format!("{path}.args[0]"));
                Shape::Any
            }
        };
        for (i, p) in g.prune.iter().enumerate() {
            let SequencePredicate::PairsInEdgeSet { edges } = p;
            let ppath = format!("{path}.prune[{i}]");
            if !matches!(elem, Shape::Text | Shape::Any) {
                self.mismatch("text items for pair pruning", &elem, &ppath);
            }
            let found = self.expr(edges, &format!("{ppath}.args[0]"), PARAMS_ONLY);
            self.expect(&found, &list_of(list_of(Shape::Text)), &format!("{ppath}.args[0]"));
        }
        let epath = format!("{path}.emit");
        match &g.emit {
            Emit::SequentialDayAssignment { stays, .. } => {
                if !matches!(elem, Shape::Text | Shape::Any) {
                    self.mismatch(&item, &elem, &format!("{path}.args[0]"));
                }
                let found = self.expr(stays, &format!("{epath}.args[0]"), PARAMS_ONLY);
                self.expect(&found, &map_of(int()), &format!("{epath}.args[0]"));
            }
            Emit::GreedySchedule {
                origin_place,
                origin_time,
                travel,
            } => {
                self.friend_items(&elem, &format!("{path}.args[0]"));
                let s = self.expr(origin_place, &format!("{epath}.args[0]"), PARAMS_ONLY);
                self.expect(&s, &Shape::Text, &format!("{epath}.args[0]"));
                let s = self.expr(origin_time, &format!("{epath}.args[1]"), PARAMS_ONLY);
                self.expect(&s, &int(), &format!("{epath}.args[1]"));
                let s = self.expr(travel, &format!("{epath}.args[2]"), PARAMS_ONLY);
                self.expect(&s, &map_of(map_of(int())), &format!("{epath}.args[2]"));
            }
        }
    }

    fn friend_items(&mut self, elem: &Shape, path: &str) {
        match elem {
            Shape::Any => {}
            Shape::Record(fields) => {
                for key in FRIEND_KEYS {
                    let want = if key == "name" || key == "place" {
                        Shape::Text
                    } else {
                        Shape::Int
                    };
                    match fields.get(key) {
                        None => self.push(FindingKind::UnresolvedRef(key.to_string()), path),
                        Some(s) => {
                            self.expect(s, &want, &format!("{path}.{key}"));
                        }
                    }
                }
            }
            other => self.mismatch("friend records", other, path),
        }
    }

    fn filter(&mut self, spec: &FilterSpec) {
        for (i, p) in spec.predicates.iter().enumerate() {
            let path = format!("$.predicates[{i}]");
            let s = self.expr(p, &path, PLAN);
            self.expect(&s, &Shape::Bool, &path);
        }
        if let FilterMode::Maximize(metric) = &spec.mode {
            for (i, m) in metric.iter().enumerate() {
                let path = format!("$.metric[{i}]");
                let s = self.expr(m, &path, PLAN);
                self.expect(&s, &int(), &path);
            }
        }
    }

    fn deliver(&mut self, spec: &DeliverSpec) {
        self.template(&spec.template, "$.template", PLAN);
    }

    fn template(&mut self, nodes: &[TemplateNode], path: &str, ctx: Ctx) {
        for (i, node) in nodes.iter().enumerate() {
            let path = format!("{path}[{i}]");
            match node {
                TemplateNode::Text(_) => {}
                TemplateNode::Field { expr, format } => {
                    let apath = format!("{path}.args[0]");
                    let s = self.expr(expr, &apath, ctx);
                    match format {
                        FieldFormat::Clock12 => {
                            self.expect(&s, &int(), &apath);
                        }
                        FieldFormat::Plain if !s.is_scalar() => {
                            self.mismatch("a scalar", &s, &apath);
                        }
                        FieldFormat::Plain => {}
                    }
                }
                TemplateNode::Each(body) => {
                    if ctx.iterating {
                        self.push(FindingKind::OutOfScope("nested `each`".into()), &path);
                    }
                    let inner = Ctx {
                        record: true,
                        iterating: true,
                        prev: false,
                        ..ctx
                    };
                    self.template(body, &format!("{path}.body"), inner);
                }
                TemplateNode::When {
                    cond,
                    then,
                    otherwise,
                } => {
                    let mut then_ctx = ctx;
                    let mut else_ctx = ctx;
                    match cond {
                        Condition::Position(p) => {
                            if !ctx.iterating {
                                self.push(
                                    FindingKind::OutOfScope(format!(
                                        "position `{}` outside `each`",
                                        p.as_str()
                                    )),
                                    &path,
                                );
                            }
                            match p {
                                Position::NotFirst => then_ctx.prev = ctx.iterating,
                                Position::First => else_ctx.prev = ctx.iterating,
                                _ => {}
                            }
                        }
                        Condition::Expr(e) => {
                            let apath = format!("{path}.args[0]");
                            let s = self.expr(e, &apath, ctx);
                            self.expect(&s, &Shape::Bool, &apath);
                        }
                    }
                    self.template(then, &format!("{path}.then"), then_ctx);
                    self.template(otherwise, &format!("{path}.else"), else_ctx);
                }
            }
        }
    }

    fn param(&mut self, namespace: Option<Namespace>, path: &[String], at: &str) -> Shape {
        let Some(ns) = namespace.or(self.default_ns) else {
            self.push(
                FindingKind::OutOfScope("deliver specs cannot read parameters".into()),
                at,
            );
            return Shape::Any;
        };
        match self.rep.resolve(ns, path) {
            Some(v) => Shape::of(v).unwrap_or(Shape::Any),
            None => {
                self.push(FindingKind::UnresolvedRef(path.join(".")), at);
                Shape::Any
            }
        }
    }

    fn record_field(&mut self, name: &str, path: &str) -> Shape {
        match self.records {
            None => Shape::Any,
            Some(schema) => match schema.fields.get(name) {
                Some(s) => s.clone(),
                None => {
                    self.push(FindingKind::UnresolvedRef(name.to_string()), path);
                    Shape::Any
                }
            },
        }
    }

    fn aggregate_body(&mut self, body: &Expr, path: &str, ctx: Ctx, want: Shape) {
        let apath = format!("{path}.args[0]");
        if !ctx.plan {
            self.push(FindingKind::OutOfScope("aggregate needs a plan".into()), path);
        }
        let inner = Ctx {
            record: true,
            prev: false,
            iterating: false,
            plan: false,
        };
        let s = self.expr(body, &apath, inner);
        self.expect(&s, &want, &apath);
    }

    fn expr(&mut self, e: &Expr, path: &str, ctx: Ctx) -> Shape {
        let arg = |i: usize| format!("{path}.args[{i}]");
        match e {
            Expr::Const(v) => Shape::of(v).unwrap_or(Shape::Any),
            Expr::ParamRef { namespace, path: p } => self.param(*namespace, p, path),
            Expr::RecordField { name, rel } => {
                let allowed = match rel {
                    RecordRel::Current => ctx.record,
                    RecordRel::Prev => ctx.prev,
                };
                if !allowed {
                    let what = match rel {
                        RecordRel::Current => "record field outside a per-record context",
                        RecordRel::Prev => "previous record not guaranteed to exist here",
                    };
                    self.push(FindingKind::OutOfScope(what.into()), path);
                }
                self.record_field(name, path)
            }
            Expr::Compare { op, lhs, rhs } => {
                let l = self.expr(lhs, &arg(0), ctx);
                let r = self.expr(rhs, &arg(1), ctx);
                match l.unify(&r) {
                    None => self.mismatch(&l, &r, &arg(1)),
                    Some(s) if *op != CmpOp::Eq && !matches!(s, Shape::Int | Shape::Text | Shape::Any) => {
                        self.mismatch("int or text", &s, path)
                    }
                    Some(_) => {}
                }
                Shape::Bool
            }
            Expr::Arith { lhs, rhs, .. } => {
                for (i, side) in [lhs, rhs].into_iter().enumerate() {
                    let s = self.expr(side, &arg(i), ctx);
                    self.expect(&s, &int(), &arg(i));
                }
                int()
            }
            Expr::AllOf(items) | Expr::AnyOf(items) => {
                for (i, item) in items.iter().enumerate() {
                    let s = self.expr(item, &arg(i), ctx);
                    self.expect(&s, &Shape::Bool, &arg(i));
                }
                Shape::Bool
            }
            Expr::Not(inner) => {
                let s = self.expr(inner, &arg(0), ctx);
                self.expect(&s, &Shape::Bool, &arg(0))
            }
            Expr::Count(body) => {
                self.aggregate_body(body, path, ctx, Shape::Bool);
                int()
            }
            Expr::Sum(body) | Expr::MaxOver(body) => {
                self.aggregate_body(body, path, ctx, int());
                int()
            }
            Expr::EveryRecord(body) => {
                self.aggregate_body(body, path, ctx, Shape::Bool);
                Shape::Bool
            }
            Expr::Len(inner) => {
                let s = self.expr(inner, &arg(0), ctx);
                if !matches!(
                    s,
                    Shape::Any | Shape::Text | Shape::List(_) | Shape::Map(_) | Shape::Record(_)
                ) {
                    self.mismatch("a list, map or text", &s, &arg(0));
                }
                int()
            }
            Expr::First(inner) | Expr::Last(inner) => match self.expr(inner, &arg(0), ctx) {
                Shape::List(elem) => *elem,
                Shape::Any => Shape::Any,
                other => {
                    self.mismatch("a list", &other, &arg(0));
                    Shape::Any
                }
            },
            Expr::ContainsDays {
                windows,
                key_field,
                days_field,
            } => {
                if !ctx.plan {
                    self.push(
                        FindingKind::OutOfScope("`contains_days` needs a plan".into()),
                        path,
                    );
                }
                let s = self.expr(windows, &arg(0), ctx);
                self.expect(&s, &map_of(list_of(int())), &arg(0));
                let key = self.record_field(key_field, path);
                if !key.is_scalar() {
                    self.mismatch("a scalar key field", &key, path);
                }
                let days = self.record_field(days_field, path);
                self.expect(&days, &list_of(int()), path);
                Shape::Bool
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_solver_spec;

    fn trip_rep(with_stays: bool) -> StructuredRepresentation {
        let stays = if with_stays {
            r#", "city_stays": {"A": 2, "B": 3}"#
        } else {
            ""
        };
        StructuredRepresentation::parse(&format!(
            r#"{{"combinations": {{"cities": ["A", "B"], "direct_flights": [["A", "B"]]{stays}}},
                "constraints": {{"specific_days": {{"A": [1, 2]}}, "label": "x"}},
                "combinations_description": "d", "constraints_description": "d"}}"#
        ))
        .unwrap()
    }

    const COMB: &str = r#"{"kind": "combination", "root": {"op": "permutations",
        "args": [{"op": "param_ref", "path": ["cities"]}],
        "prune": [{"op": "pairs_in_edge_set", "args": [{"op": "param_ref", "path": ["direct_flights"]}]}],
        "emit": {"op": "sequential_day_assignment", "args": [{"op": "param_ref", "path": ["city_stays"]}]}}}"#;

    #[test]
    fn trip_combination_checks_clean() {
        let spec = parse_solver_spec(COMB).unwrap();
        assert!(typecheck_spec(&spec, &trip_rep(true)).is_ok());
    }

    #[test]
    fn missing_stays_is_unresolved() {
        let spec = parse_solver_spec(COMB).unwrap();
        let report = typecheck_spec(&spec, &trip_rep(false));
        assert_eq!(
            report.findings[0].kind,
            FindingKind::UnresolvedRef("city_stays".into())
        );
        assert_eq!(report.findings[0].path, "$.root.emit.args[0]");
    }

    #[test]
    fn contains_days_on_text_is_mismatch() {
        let spec = parse_solver_spec(
            r#"{"kind": "filter", "mode": "satisfy_first", "predicates": [
                {"op": "contains_days", "args": [{"op": "param_ref", "path": ["label"]}]}]}"#,
        )
        .unwrap();
        let report = typecheck_spec(&spec, &trip_rep(true));
        assert!(matches!(
            report.findings[0].kind,
            FindingKind::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn contains_days_on_text_record_field_is_mismatch() {
        let comb = parse_solver_spec(COMB).unwrap();
        let SolverSpec::Combination(c) = &comb else {
            unreachable!()
        };
        let schema = record_schema(c);
        let spec = parse_solver_spec(
            r#"{"kind": "filter", "mode": "satisfy_first", "predicates": [
                {"op": "contains_days", "days_field": "city",
                 "args": [{"op": "param_ref", "path": ["specific_days"]}]}]}"#,
        )
        .unwrap();
        let report = typecheck_spec_with(&spec, &trip_rep(true), Some(&schema));
        assert_eq!(report.findings.len(), 1);
    }

    #[test]
    fn prev_requires_guard() {
        let rep = trip_rep(true);
        let schema = RecordSchema {
            fields: BTreeMap::from([("city".to_string(), Shape::Text)]),
        };
        let unguarded = parse_solver_spec(
            r#"{"kind": "deliver", "template": [{"op": "each", "body": [
                {"op": "field", "args": [{"op": "record_field", "name": "city", "rel": "prev"}]}]}]}"#,
        )
        .unwrap();
        assert!(!typecheck_spec_with(&unguarded, &rep, Some(&schema)).is_ok());
        let guarded = parse_solver_spec(
            r#"{"kind": "deliver", "template": [{"op": "each", "body": [
                {"op": "when", "position": "not_first", "then": [
                    {"op": "field", "args": [{"op": "record_field", "name": "city", "rel": "prev"}]}]}]}]}"#,
        )
        .unwrap();
        assert!(typecheck_spec_with(&guarded, &rep, Some(&schema)).is_ok());
    }

    #[test]
    fn deliver_cannot_read_params() {
        let spec = parse_solver_spec(
            r#"{"kind": "deliver", "template": [{"op": "field", "args": [{"op": "param_ref", "path": ["cities"]}]}]}"#,
        )
        .unwrap();
        let report = typecheck_spec(&spec, &trip_rep(true));
        assert!(matches!(report.findings[0].kind, FindingKind::OutOfScope(_)));
    }

    #[test]
    fn bundle_rejects_swapped_kinds() {
        let comb = parse_solver_spec(COMB).unwrap();
        let deliver = parse_solver_spec(r#"{"kind": "deliver", "template": ["x"]}"#).unwrap();
        let report = typecheck_bundle(&deliver, &comb, &deliver, &trip_rep(true));
        assert_eq!(report.findings.len(), 2);
    }
}
