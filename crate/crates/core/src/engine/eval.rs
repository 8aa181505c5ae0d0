use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::{
    AggregationRule, CompareOp, Connective, Expr, Flag, Literal, MemberOp, Severity, StringFn,
    ValidationRule,
};
use crate::record::{parse_date, Record, Value};
use crate::signature::{Category, ErrorSignature, Frame, ENGINE_COMPONENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleResult {
    Pass,
    Fail,
    Warning,
    NotApplied,
}

impl RuleResult {
    pub const ALL: [RuleResult; 4] = [
        RuleResult::Pass,
        RuleResult::Fail,
        RuleResult::Warning,
        RuleResult::NotApplied,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleResult::Pass => "Pass",
            RuleResult::Fail => "Fail",
            RuleResult::Warning => "Warning",
            RuleResult::NotApplied => "NotApplied",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RuleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleResult {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleResult::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown rule result `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` is absent")]
    MissingVariable(String),
    #[error("cannot apply `{op}` to {left} and {right}")]
    KindMismatch {
        op: &'static str,
        left: &'static str,
        right: &'static str,
    },
    #[error("`{0}` is not a calendar date")]
    DateParse(String),
    #[error("substring({start}, {end}) out of range for length {len}")]
    SubstringRange { start: u32, end: u32, len: usize },
    #[error("node is not a {0}")]
    Shape(&'static str),
}

impl EvalError {
    /// The innermost frame: where the evaluation actually failed. Details are
    /// value-independent so equal faults share a failure point.
    pub fn first_frame(&self) -> Frame {
        match self {
            EvalError::MissingVariable(_) => {
                Frame::new(ENGINE_COMPONENT, "lookup_variable", "variable absent")
            }
            EvalError::KindMismatch { left, right, .. } => {
                Frame::new(ENGINE_COMPONENT, "compare_values", format!("{left} vs {right}"))
            }
            EvalError::DateParse(_) => {
                Frame::new(ENGINE_COMPONENT, "parse_date", "text is not YYYY-MM-DD")
            }
            EvalError::SubstringRange { .. } => {
                Frame::new(ENGINE_COMPONENT, "substring", "index out of range")
            }
            EvalError::Shape(what) => Frame::new(ENGINE_COMPONENT, "eval_expression", *what),
        }
    }

    pub fn signature(&self, operation: &str, rule_id: &str) -> ErrorSignature {
        ErrorSignature::new(self.first_frame(), Category::Remaining)
            .push(Frame::new(ENGINE_COMPONENT, operation, rule_id))
    }
}

fn lookup<'r>(record: &'r Record, name: &str) -> Result<&'r Value, EvalError> {
    record
        .get(name)
        .ok_or_else(|| EvalError::MissingVariable(name.to_string()))
}

fn text_of<'r>(record: &'r Record, name: &str, op: &'static str) -> Result<&'r str, EvalError> {
    match lookup(record, name)? {
        Value::Code(s) => Ok(s),
        other => Err(EvalError::KindMismatch {
            op,
            left: other.kind_name(),
            right: "code",
        }),
    }
}

pub(crate) fn eval_term(expr: &Expr, record: &Record) -> Result<Value, EvalError> {
    match expr {
        Expr::Var(name) => lookup(record, name).cloned(),
        Expr::Lit(l) => Ok(Value::from(l.clone())),
        Expr::Substring {
            variable,
            start,
            end,
        } => {
            let text = text_of(record, variable, "substring")?;
            let chars: Vec<char> = text.chars().collect();
            let (s, e) = (*start as usize, *end as usize);
            if s > e || e > chars.len() {
                return Err(EvalError::SubstringRange {
                    start: *start,
                    end: *end,
                    len: chars.len(),
                });
            }
            Ok(Value::Code(chars[s..e].iter().collect()))
        }
        _ => Err(EvalError::Shape("value term")),
    }
}

/// Orders two values of compatible kinds. A code compared with a date is
/// parsed as a date; any other kind pairing is an error.
pub(crate) fn compare_values(op: &'static str, l: &Value, r: &Value) -> Result<Ordering, EvalError> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
        (Value::Code(a), Value::Code(b)) => Ok(a.cmp(b)),
        (Value::Date(a), Value::Date(b)) => Ok(a.cmp(b)),
        (Value::Code(s), Value::Date(d)) => parse_date(s)
            .map(|p| p.cmp(d))
            .ok_or_else(|| EvalError::DateParse(s.clone())),
        (Value::Date(d), Value::Code(s)) => parse_date(s)
            .map(|p| d.cmp(&p))
            .ok_or_else(|| EvalError::DateParse(s.clone())),
        (a, b) => Err(EvalError::KindMismatch {
            op,
            left: a.kind_name(),
            right: b.kind_name(),
        }),
    }
}

/// Boolean evaluation with left-to-right short-circuiting of `and`, `or` and
/// `implies`; errors in an operand that is never evaluated do not surface.
pub fn eval_expr(expr: &Expr, record: &Record) -> Result<bool, EvalError> {
    match expr {
        Expr::Comparison { op, left, right } => {
            let l = eval_term(left, record)?;
            let r = eval_term(right, record)?;
            let ord = compare_values(op.symbol(), &l, &r)?;
            Ok(match op {
                CompareOp::Eq => ord == Ordering::Equal,
                CompareOp::Ne => ord != Ordering::Equal,
                CompareOp::Lt => ord == Ordering::Less,
                CompareOp::Le => ord != Ordering::Greater,
                CompareOp::Gt => ord == Ordering::Greater,
                CompareOp::Ge => ord != Ordering::Less,
            })
        }
        Expr::Membership {
            op,
            subject,
            values,
        } => {
            let v = eval_term(subject, record)?;
            let mut found = false;
            for lit in values {
                let candidate = Value::from(lit.clone());
                if compare_values(op.keyword(), &v, &candidate)? == Ordering::Equal {
                    found = true;
                }
            }
            Ok(match op {
                MemberOp::In => found,
                MemberOp::NotIn => !found,
            })
        }
        Expr::Connective { op, left, right } => {
            let l = eval_expr(left, record)?;
            match (op, l) {
                (Connective::And, false) => Ok(false),
                (Connective::Or, true) => Ok(true),
                _ => eval_expr(right, record),
            }
        }
        Expr::Implication {
            antecedent,
            consequent,
        } => {
            if eval_expr(antecedent, record)? {
                eval_expr(consequent, record)
            } else {
                Ok(true)
            }
        }
        Expr::StringFn {
            func,
            variable,
            literal,
        } => {
            let text = text_of(record, variable, func.keyword())?;
            Ok(match func {
                StringFn::StartsWith => text.starts_with(literal.as_str()),
                StringFn::EndsWith => text.ends_with(literal.as_str()),
            })
        }
        Expr::Substring { .. } | Expr::Var(_) | Expr::Lit(_) => Err(EvalError::Shape("condition")),
    }
}

/// `NotApplied` when the applicability clause is false or names an absent
/// variable; otherwise the check decides between `Pass` and the rule's
/// severity. Any other error propagates.
pub fn eval_validation(rule: &ValidationRule, record: &Record) -> Result<RuleResult, EvalError> {
    if let Some(apply) = &rule.applicability {
        match eval_expr(apply, record) {
            Ok(true) => {}
            Ok(false) | Err(EvalError::MissingVariable(_)) => return Ok(RuleResult::NotApplied),
            Err(e) => return Err(e),
        }
    }
    Ok(if eval_expr(&rule.check, record)? {
        RuleResult::Pass
    } else {
        match rule.severity {
            Severity::Error => RuleResult::Fail,
            Severity::Warning => RuleResult::Warning,
        }
    })
}

fn flag_result(flag: Flag) -> RuleResult {
    match flag {
        Flag::Ok => RuleResult::Pass,
        Flag::Dubious => RuleResult::Warning,
    }
}

/// The first branch whose guard holds fires. A guard naming an absent
/// variable does not hold. With no branch and no fallback the rule fails with
/// a null output; aggregation never yields `NotApplied`.
pub fn eval_aggregation(
    rule: &AggregationRule,
    record: &Record,
) -> Result<(Option<Literal>, RuleResult), EvalError> {
    for branch in &rule.branches {
        match eval_expr(&branch.guard, record) {
            Ok(true) => return Ok((branch.output.clone(), flag_result(branch.flag))),
            Ok(false) | Err(EvalError::MissingVariable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(match &rule.fallback {
        Some(fb) => (fb.output.clone(), flag_result(fb.flag)),
        None => (None, RuleResult::Fail),
    })
}
