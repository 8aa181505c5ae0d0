//! The rule language: grammar, parser, AST and canonical printer.
//!
//! ```text
//! rule V01: when messageType = 'H' check surgery = 96 implies basis > '32' severity error
//!
//! agg A01 -> morphVerified:
//!   basis in ['22', '32'] => 'Yes';
//!   basis in ['00', '10'] => 'No';
//!   else => null
//! ```
//!
//! The full grammar lives in `docs/rule-grammar.md`.

mod ast;
mod format;
mod lexer;
mod parser;

use std::fmt;

pub use ast::*;
pub use format::{format_expr, format_rule};

use crate::schema::VariableRegistry;

/// Syntax error with a 1-based source position and the tokens that would
/// have been accepted there.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: unexpected {}", self.line, self.column, self.found)?;
        if !self.expected.is_empty() {
            write!(f, ", expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Parses exactly one rule declaration.
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut p = parser::Parser::new(text)?;
    let rule = p.declaration()?;
    p.expect_eof()?;
    Ok(rule)
}

/// Parses a rule file holding zero or more declarations.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, ParseError> {
    let mut p = parser::Parser::new(text)?;
    let mut rules = Vec::new();
    while !p.at_eof() {
        rules.push(p.declaration()?);
    }
    Ok(rules)
}

/// Parses a standalone expression, mostly useful in tests and tooling.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = parser::Parser::new(text)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Names referenced by `rule` that the registry does not declare, in order of
/// first appearance.
pub fn validate_references(rule: &Rule, registry: &VariableRegistry) -> Vec<String> {
    rule.variables()
        .into_iter()
        .filter(|name| !registry.contains(name))
        .map(str::to_string)
        .collect()
}
