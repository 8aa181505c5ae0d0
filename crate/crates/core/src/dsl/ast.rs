//! Abstract syntax for validation and aggregation rules.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Comparison operators usable between two terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemberOp {
    In,
    NotIn,
}

impl MemberOp {
    pub fn keyword(self) -> &'static str {
        match self {
            MemberOp::In => "in",
            MemberOp::NotIn => "notIn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
}

impl Connective {
    pub fn keyword(self) -> &'static str {
        match self {
            Connective::And => "and",
            Connective::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StringFn {
    StartsWith,
    EndsWith,
}

impl StringFn {
    pub fn keyword(self) -> &'static str {
        match self {
            StringFn::StartsWith => "startswith",
            StringFn::EndsWith => "endswith",
        }
    }
}

/// The three literal kinds of the language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Literal {
    Code(String),
    Int(i64),
    Date(NaiveDate),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Code(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    match c {
                        '\'' => f.write_str("\\'")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("'")
            }
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Date(d) => write!(f, "@{}", d.format("%Y-%m-%d")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Comparison {
        op: CompareOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Membership {
        op: MemberOp,
        subject: Box<Expr>,
        values: Vec<Literal>,
    },
    Connective {
        op: Connective,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Implication {
        antecedent: Box<Expr>,
        consequent: Box<Expr>,
    },
    StringFn {
        func: StringFn,
        variable: String,
        literal: String,
    },
    /// Characters `start..end` of a variable's text value.
    Substring {
        variable: String,
        start: u32,
        end: u32,
    },
    Var(String),
    Lit(Literal),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn lit(literal: Literal) -> Expr {
        Expr::Lit(literal)
    }

    pub fn compare(op: CompareOp, left: Expr, right: Expr) -> Expr {
        Expr::Comparison {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn implies(antecedent: Expr, consequent: Expr) -> Expr {
        Expr::Implication {
            antecedent: Box::new(antecedent),
            consequent: Box::new(consequent),
        }
    }

    pub fn connect(op: Connective, left: Expr, right: Expr) -> Expr {
        Expr::Connective {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Calls `f` on every variable name referenced below this node, in pre-order.
    pub fn visit_variables<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Comparison { left, right, .. }
            | Expr::Connective { left, right, .. } => {
                left.visit_variables(f);
                right.visit_variables(f);
            }
            Expr::Implication {
                antecedent,
                consequent,
            } => {
                antecedent.visit_variables(f);
                consequent.visit_variables(f);
            }
            Expr::Membership { subject, .. } => subject.visit_variables(f),
            Expr::StringFn { variable, .. } | Expr::Substring { variable, .. } => f(variable),
            Expr::Var(name) => f(name),
            Expr::Lit(_) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// `when <applicability> check <check>`; an absent applicability always applies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValidationRule {
    pub id: String,
    pub applicability: Option<Expr>,
    pub check: Expr,
    pub severity: Severity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Flag {
    #[default]
    Ok,
    Dubious,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub guard: Expr,
    pub output: Option<Literal>,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fallback {
    pub output: Option<Literal>,
    pub flag: Flag,
}

/// Ordered decision table assigning `output_variable`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregationRule {
    pub id: String,
    pub output_variable: String,
    pub branches: Vec<Branch>,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Validation,
    Aggregation,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Validation => "validation",
            RuleKind::Aggregation => "aggregation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Validation(ValidationRule),
    Aggregation(AggregationRule),
}

impl Rule {
    pub fn id(&self) -> &str {
        match self {
            Rule::Validation(r) => &r.id,
            Rule::Aggregation(r) => &r.id,
        }
    }

    pub fn kind(&self) -> RuleKind {
        match self {
            Rule::Validation(_) => RuleKind::Validation,
            Rule::Aggregation(_) => RuleKind::Aggregation,
        }
    }

    /// Every variable name the rule mentions, including an aggregation's output
    /// variable, in order of first appearance.
    pub fn variables(&self) -> Vec<&str> {
        let mut all: Vec<&str> = Vec::new();
        match self {
            Rule::Validation(r) => {
                if let Some(a) = &r.applicability {
                    a.visit_variables(&mut |n| all.push(n));
                }
                r.check.visit_variables(&mut |n| all.push(n));
            }
            Rule::Aggregation(r) => {
                for b in &r.branches {
                    b.guard.visit_variables(&mut |n| all.push(n));
                }
                all.push(&r.output_variable);
            }
        }
        let mut names: Vec<&str> = Vec::new();
        for n in all {
            if !names.contains(&n) {
                names.push(n);
            }
        }
        names
    }
}
