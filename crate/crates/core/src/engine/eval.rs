use std::borrow::Cow;
use std::cmp::Ordering;

use crate::dsl::{ArithOp, CmpOp, Expr, RecordRel};
use crate::repr::{Namespace, Plan, StructuredRepresentation};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    /// A value had the wrong shape for its use. Well-typed specs never raise it.
    #[error("shape fault: {0}")]
    Shape(String),
    /// The data itself cannot be evaluated (empty list, missing entry, overflow).
    #[error("data fault: {0}")]
    Data(String),
    #[error("missing field `{0}`")]
    MissingField(String),
}

/// What an expression can see while it is evaluated.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub rep: Option<&'a StructuredRepresentation>,
    pub default_ns: Option<Namespace>,
    pub plan: Option<&'a Plan>,
    pub row: Option<usize>,
}

impl<'a> Scope<'a> {
    pub fn params(rep: &'a StructuredRepresentation, ns: Namespace) -> Self {
        Scope {
            rep: Some(rep),
            default_ns: Some(ns),
            plan: None,
            row: None,
        }
    }

    pub fn with_plan(self, plan: &'a Plan) -> Self {
        Scope {
            plan: Some(plan),
            row: None,
            ..self
        }
    }

    pub fn at_row(self, row: usize) -> Self {
        Scope {
            row: Some(row),
            ..self
        }
    }

    fn plan(&self) -> Result<&'a Plan, EvalError> {
        self.plan
            .ok_or_else(|| EvalError::Shape("no plan in scope".into()))
    }

    fn field(&self, name: &str, rel: RecordRel) -> Result<&'a Value, EvalError> {
        let plan = self.plan()?;
        let row = self
            .row
            .ok_or_else(|| EvalError::Shape("no current record".into()))?;
        let row = match rel {
            RecordRel::Current => row,
            RecordRel::Prev => row
                .checked_sub(1)
                .ok_or_else(|| EvalError::Shape("no previous record".into()))?,
        };
        plan.get(row, name)
            .ok_or_else(|| EvalError::MissingField(name.to_string()))
    }
}

fn shape_fault<T>(what: &str, v: &Value) -> Result<T, EvalError> {
    Err(EvalError::Shape(format!("expected {what}, got {}", v.kind_name())))
}

pub fn eval_int(e: &Expr, scope: &Scope) -> Result<i64, EvalError> {
    let v = eval(e, scope)?;
    match v.as_int() {
        Some(i) => Ok(i),
        None => shape_fault("int", &v),
    }
}

pub fn eval_bool(e: &Expr, scope: &Scope) -> Result<bool, EvalError> {
    let v = eval(e, scope)?;
    match v.as_bool() {
        Some(b) => Ok(b),
        None => shape_fault("bool", &v),
    }
}

fn rows(scope: &Scope) -> Result<std::ops::Range<usize>, EvalError> {
    Ok(0..scope.plan()?.len())
}

pub fn eval<'a>(e: &'a Expr, scope: &Scope<'a>) -> Result<Cow<'a, Value>, EvalError> {
    let owned = |v: Value| Ok(Cow::Owned(v));
    match e {
        Expr::Const(v) => Ok(Cow::Borrowed(v)),
        Expr::ParamRef { namespace, path } => {
            let rep = scope
                .rep
                .ok_or_else(|| EvalError::Shape("parameters are not readable here".into()))?;
            let ns = namespace
                .or(scope.default_ns)
                .ok_or_else(|| EvalError::Shape("parameters are not readable here".into()))?;
            rep.resolve(ns, path)
                .map(Cow::Borrowed)
                .ok_or_else(|| EvalError::Data(format!("no parameter `{}`", path.join("."))))
        }
        Expr::RecordField { name, rel } => scope.field(name, *rel).map(Cow::Borrowed),
        Expr::Compare { op, lhs, rhs } => {
            let l = eval(lhs, scope)?;
            let r = eval(rhs, scope)?;
            let ord = match (&*l, &*r) {
                (Value::Int(a), Value::Int(b)) => a.cmp(b),
                (Value::Text(a), Value::Text(b)) => a.cmp(b),
                (a, b) if *op == CmpOp::Eq => {
                    if a == b {
                        Ordering::Equal
                    } else {
                        Ordering::Less
                    }
                }
                (a, _) => return shape_fault("int or text operands", a),
            };
            owned(Value::Bool(op.holds(ord)))
        }
        Expr::Arith { op, lhs, rhs } => {
            let a = eval_int(lhs, scope)?;
            let b = eval_int(rhs, scope)?;
            let r = match op {
                ArithOp::Add => a.checked_add(b),
                ArithOp::Sub => a.checked_sub(b),
                ArithOp::Mul => a.checked_mul(b),
            };
            r.map(|v| Cow::Owned(Value::Int(v)))
                .ok_or_else(|| EvalError::Data("integer overflow".into()))
        }
        Expr::AllOf(items) => {
            for item in items {
                if !eval_bool(item, scope)? {
                    return owned(Value::Bool(false));
                }
            }
            owned(Value::Bool(true))
        }
        Expr::AnyOf(items) => {
            for item in items {
                if eval_bool(item, scope)? {
                    return owned(Value::Bool(true));
                }
            }
            owned(Value::Bool(false))
        }
        Expr::Not(inner) => owned(Value::Bool(!eval_bool(inner, scope)?)),
        Expr::Count(body) => {
            let mut n = 0;
            for i in rows(scope)? {
                if eval_bool(body, &scope.at_row(i))? {
                    n += 1;
                }
            }
            owned(Value::Int(n))
        }
        Expr::Sum(body) => {
            let mut total: i64 = 0;
            for i in rows(scope)? {
                total = total
                    .checked_add(eval_int(body, &scope.at_row(i))?)
                    .ok_or_else(|| EvalError::Data("integer overflow".into()))?;
            }
            owned(Value::Int(total))
        }
        Expr::MaxOver(body) => {
            let mut best: Option<i64> = None;
            for i in rows(scope)? {
                let v = eval_int(body, &scope.at_row(i))?;
                best = Some(best.map_or(v, |b| b.max(v)));
            }
            owned(Value::Int(best.unwrap_or(0)))
        }
        Expr::EveryRecord(body) => {
            for i in rows(scope)? {
                if !eval_bool(body, &scope.at_row(i))? {
                    return owned(Value::Bool(false));
                }
            }
            owned(Value::Bool(true))
        }
        Expr::Len(inner) => {
            let v = eval(inner, scope)?;
            let n = match &*v {
                Value::List(items) => items.len(),
                Value::Map(m) => m.len(),
                Value::Text(s) => s.chars().count(),
                other => return shape_fault("a list, map or text", other),
            };
            owned(Value::Int(n as i64))
        }
        Expr::First(inner) | Expr::Last(inner) => {
            let v = eval(inner, scope)?;
            let item = match &*v {
                Value::List(items) if matches!(e, Expr::First(_)) => items.first(),
                Value::List(items) => items.last(),
                other => return shape_fault("a list", other),
            };
            item.cloned()
                .map(Cow::Owned)
                .ok_or_else(|| EvalError::Data("first/last of an empty list".into()))
        }
        Expr::ContainsDays {
            windows,
            key_field,
            days_field,
        } => {
            let w = eval(windows, scope)?;
            let Value::Map(windows) = &*w else {
                return shape_fault("a map of day lists", &w);
            };
            let plan = scope.plan()?;
            let key_idx = plan.field_index(key_field);
            let days_idx = plan.field_index(days_field);
            for (key, days) in windows {
                let Value::List(days) = days else {
                    return shape_fault("a day list", days);
                };
                if !window_covered(plan, key, days, key_idx, days_idx, key_field, days_field)? {
                    return owned(Value::Bool(false));
                }
            }
            owned(Value::Bool(true))
        }
    }
}

fn window_covered(
    plan: &Plan,
    key: &str,
    days: &[Value],
    key_idx: Option<usize>,
    days_idx: Option<usize>,
    key_field: &str,
    days_field: &str,
) -> Result<bool, EvalError> {
    if plan.is_empty() {
        return Ok(false);
    }
    let k = key_idx.ok_or_else(|| EvalError::MissingField(key_field.to_string()))?;
    let d = days_idx.ok_or_else(|| EvalError::MissingField(days_field.to_string()))?;
    for row in plan.rows() {
        if row[k].as_text() != Some(key) {
            continue;
        }
        let Value::List(have) = &row[d] else {
            return shape_fault("a day list", &row[d]);
        };
        if days.iter().all(|day| have.contains(day)) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn plan() -> Plan {
        let rec = |c: &str, d: &[i64]| {
            BTreeMap::from([
                ("city".to_string(), Value::text(c)),
                (
                    "days".to_string(),
                    Value::List(d.iter().map(|&x| Value::Int(x)).collect()),
                ),
            ])
        };
        Plan::from_records(vec![rec("A", &[1, 2]), rec("B", &[2, 3, 4])]).unwrap()
    }

    fn field(name: &str) -> Box<Expr> {
        Box::new(Expr::RecordField {
            name: name.into(),
            rel: RecordRel::Current,
        })
    }

    #[test]
    fn aggregates_over_records() {
        let p = plan();
        let scope = Scope {
            rep: None,
            default_ns: None,
            plan: Some(&p),
            row: None,
        };
        let max_day = Expr::MaxOver(Box::new(Expr::Last(field("days"))));
        assert_eq!(eval_int(&max_day, &scope).unwrap(), 4);
        let total = Expr::Sum(Box::new(Expr::Len(field("days"))));
        assert_eq!(eval_int(&total, &scope).unwrap(), 5);
    }

    #[test]
    fn contains_days_checks_endpoints() {
        let p = plan();
        let scope = Scope {
            rep: None,
            default_ns: None,
            plan: Some(&p),
            row: None,
        };
        let window = |c: &str, d: &[i64]| Expr::ContainsDays {
            windows: Box::new(Expr::Const(Value::Map(BTreeMap::from([(
                c.to_string(),
                Value::List(d.iter().map(|&x| Value::Int(x)).collect()),
            )])))),
            key_field: "city".into(),
            days_field: "days".into(),
        };
        assert!(eval_bool(&window("B", &[2, 4]), &scope).unwrap());
        assert!(!eval_bool(&window("B", &[1]), &scope).unwrap());
        assert!(!eval_bool(&window("C", &[1]), &scope).unwrap());
    }

    #[test]
    fn prev_on_first_row_is_a_fault() {
        let p = plan();
        let scope = Scope {
            rep: None,
            default_ns: None,
            plan: Some(&p),
            row: Some(0),
        };
        let prev = Expr::RecordField {
            name: "city".into(),
            rel: RecordRel::Prev,
        };
        assert!(matches!(eval(&prev, &scope), Err(EvalError::Shape(_))));
        assert_eq!(
            eval(&prev, &scope.at_row(1)).unwrap().as_text(),
            Some("A")
        );
    }

    #[test]
    fn overflow_is_data_fault() {
        let e = Expr::Arith {
            op: ArithOp::Mul,
            lhs: Box::new(Expr::Const(Value::Int(i64::MAX))),
            rhs: Box::new(Expr::Const(Value::Int(2))),
        };
        let scope = Scope {
            rep: None,
            default_ns: None,
            plan: None,
            row: None,
        };
        assert!(matches!(eval(&e, &scope), Err(EvalError::Data(_))));
    }
}
