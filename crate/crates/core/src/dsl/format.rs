use std::fmt::Write;

use super::ast::*;

/// Canonical source text for a rule. Re-parsing the output yields an equal AST.
pub fn format_rule(rule: &Rule) -> String {
    let mut out = String::new();
    match rule {
        Rule::Validation(r) => {
            write!(out, "rule {}:", r.id).unwrap();
            if let Some(a) = &r.applicability {
                write!(out, " when {}", format_expr(a)).unwrap();
            }
            let severity = match r.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            write!(out, " check {} severity {}", format_expr(&r.check), severity).unwrap();
        }
        Rule::Aggregation(r) => {
            write!(out, "agg {} -> {}:", r.id, r.output_variable).unwrap();
            let mut arms: Vec<String> = r
                .branches
                .iter()
                .map(|b| format!("{} => {}", format_expr(&b.guard), output(&b.output, b.flag)))
                .collect();
            if let Some(fb) = &r.fallback {
                arms.push(format!("else => {}", output(&fb.output, fb.flag)));
            }
            for (i, arm) in arms.iter().enumerate() {
                let sep = if i + 1 < arms.len() { ";" } else { "" };
                write!(out, "\n  {arm}{sep}").unwrap();
            }
        }
    }
    out.push('\n');
    out
}

fn output(lit: &Option<Literal>, flag: Flag) -> String {
    let mut s = match lit {
        Some(l) => l.to_string(),
        None => "null".to_string(),
    };
    if flag == Flag::Dubious {
        s.push_str(" dubious");
    }
    s
}

pub fn format_expr(e: &Expr) -> String {
    match e {
        Expr::Comparison { op, left, right } => {
            format!("{} {} {}", format_expr(left), op.symbol(), format_expr(right))
        }
        Expr::Membership {
            op,
            subject,
            values,
        } => {
            let list: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            format!("{} {} [{}]", format_expr(subject), op.keyword(), list.join(", "))
        }
        Expr::Connective { op, left, right } => {
            let l = match left.as_ref() {
                Expr::Connective { op: inner, .. } if inner == op => format_expr(left),
                other => child(other),
            };
            format!("{} {} {}", l, op.keyword(), child(right))
        }
        Expr::Implication {
            antecedent,
            consequent,
        } => format!("({}) implies ({})", format_expr(antecedent), format_expr(consequent)),
        Expr::StringFn {
            func,
            variable,
            literal,
        } => format!(
            "{}({}, {})",
            func.keyword(),
            variable,
            Literal::Code(literal.clone())
        ),
        Expr::Substring {
            variable,
            start,
            end,
        } => format!("substring({variable}, {start}, {end})"),
        Expr::Var(name) => name.clone(),
        Expr::Lit(l) => l.to_string(),
    }
}

fn child(e: &Expr) -> String {
    match e {
        Expr::Connective { .. } | Expr::Implication { .. } => format!("({})", format_expr(e)),
        _ => format_expr(e),
    }
}
