use super::eval::{eval, eval_bool, EvalError, Scope};
use crate::dsl::{Condition, DeliverSpec, FieldFormat, TemplateNode};
use crate::repr::Plan;
use crate::value::Value;

/// Minutes after midnight as `H:MMAM`; wraps past midnight.
pub fn clock12(minutes: i64) -> String {
    let m = minutes.rem_euclid(24 * 60);
    let (h, mm) = (m / 60, m % 60);
    let suffix = if h < 12 { "AM" } else { "PM" };
    let h12 = if h % 12 == 0 { 12 } else { h % 12 };
    format!("{h12}:{mm:02}{suffix}")
}

/// Renders a plan through a deliver template.
pub fn render_answer(spec: &DeliverSpec, plan: &Plan) -> Result<String, EvalError> {
    if plan.is_empty() {
        return Err(EvalError::Data("cannot render an empty plan".into()));
    }
    let scope = Scope {
        rep: None,
        default_ns: None,
        plan: Some(plan),
        row: None,
    };
    let mut out = String::new();
    render_nodes(&spec.template, &scope, &mut out)?;
    Ok(out)
}

fn render_nodes(nodes: &[TemplateNode], scope: &Scope, out: &mut String) -> Result<(), EvalError> {
    for node in nodes {
        match node {
            TemplateNode::Text(s) => out.push_str(s),
            TemplateNode::Field { expr, format } => {
                let v = eval(expr, scope)?;
                match (format, &*v) {
                    (FieldFormat::Clock12, Value::Int(m)) => out.push_str(&clock12(*m)),
                    (FieldFormat::Clock12, other) => {
                        return Err(EvalError::Shape(format!(
                            "clock12 needs an int, got {}",
                            other.kind_name()
                        )))
                    }
                    (FieldFormat::Plain, Value::Int(i)) => out.push_str(&i.to_string()),
                    (FieldFormat::Plain, Value::Text(t)) => out.push_str(t),
                    (FieldFormat::Plain, Value::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
                    (FieldFormat::Plain, other) => {
                        return Err(EvalError::Shape(format!(
                            "cannot print a {} in a template",
                            other.kind_name()
                        )))
                    }
                }
            }
            TemplateNode::Each(body) => {
                let len = scope.plan.map_or(0, Plan::len);
                for i in 0..len {
                    render_nodes(body, &scope.at_row(i), out)?;
                }
            }
            TemplateNode::When {
                cond,
                then,
                otherwise,
            } => {
                let holds = match cond {
                    Condition::Position(p) => {
                        let row = scope.row.ok_or_else(|| {
                            EvalError::Shape("position condition outside `each`".into())
                        })?;
                        p.holds(row, scope.plan.map_or(0, Plan::len))
                    }
                    Condition::Expr(e) => eval_bool(e, scope)?,
                };
                render_nodes(if holds { then } else { otherwise }, scope, out)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_formatting() {
        assert_eq!(clock12(540), "9:00AM");
        assert_eq!(clock12(720), "12:00PM");
        assert_eq!(clock12(0), "12:00AM");
        assert_eq!(clock12(13 * 60 + 5), "1:05PM");
        assert_eq!(clock12(23 * 60 + 59), "11:59PM");
    }
}
