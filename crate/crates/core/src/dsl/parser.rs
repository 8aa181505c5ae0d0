//! Recursive-descent parser for rule source.
//!
//! Precedence, loosest first: `implies` (right-associative), `or`, `and`,
//! then atoms (comparisons, membership tests, string functions, parentheses).

use super::ast::*;
use super::lexer::{tokenize, Spanned, Tok};
use super::ParseError;

const KEYWORDS: &[&str] = &[
    "rule", "when", "check", "severity", "error", "warning", "agg", "else", "null", "dubious",
    "implies", "and", "or", "in", "notIn", "startswith", "endswith", "substring",
];

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            found: s.tok.describe(),
            expected: expected.iter().map(|e| e.to_string()).collect(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn identifier(&mut self, what: &'static str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    pub(crate) fn declaration(&mut self) -> Result<Rule, ParseError> {
        if self.eat_keyword("rule") {
            self.validation().map(Rule::Validation)
        } else if self.eat_keyword("agg") {
            self.aggregation().map(Rule::Aggregation)
        } else {
            Err(self.error(&["rule", "agg"]))
        }
    }

    fn validation(&mut self) -> Result<ValidationRule, ParseError> {
        let id = self.identifier("rule id")?;
        self.expect(Tok::Colon, "`:`")?;
        let applicability = if self.eat_keyword("when") {
            Some(self.expr()?)
        } else {
            None
        };
        if !self.at_keyword("check") {
            return Err(self.error(if applicability.is_none() {
                &["when", "check"]
            } else {
                &["check", "and", "or", "implies"]
            }));
        }
        self.advance();
        let check = self.expr()?;
        if !self.at_keyword("severity") {
            return Err(self.error(&["severity", "and", "or", "implies"]));
        }
        self.advance();
        let severity = if self.eat_keyword("error") {
            Severity::Error
        } else if self.eat_keyword("warning") {
            Severity::Warning
        } else {
            return Err(self.error(&["error", "warning"]));
        };
        Ok(ValidationRule {
            id,
            applicability,
            check,
            severity,
        })
    }

    fn aggregation(&mut self) -> Result<AggregationRule, ParseError> {
        let id = self.identifier("rule id")?;
        self.expect(Tok::Arrow, "`->`")?;
        let output_variable = self.identifier("output variable")?;
        self.expect(Tok::Colon, "`:`")?;
        let mut branches = Vec::new();
        let mut fallback = None;
        loop {
            if self.eat_keyword("else") {
                self.expect(Tok::FatArrow, "`=>`")?;
                let (output, flag) = self.output()?;
                fallback = Some(Fallback { output, flag });
                break;
            }
            let guard = self.expr()?;
            if *self.peek() != Tok::FatArrow {
                return Err(self.error(&["=>", "and", "or", "implies"]));
            }
            self.advance();
            let (output, flag) = self.output()?;
            branches.push(Branch {
                guard,
                output,
                flag,
            });
            if *self.peek() == Tok::Semi {
                self.advance();
            } else {
                break;
            }
        }
        Ok(AggregationRule {
            id,
            output_variable,
            branches,
            fallback,
        })
    }

    fn output(&mut self) -> Result<(Option<Literal>, Flag), ParseError> {
        let output = if self.eat_keyword("null") {
            None
        } else {
            match self.literal() {
                Some(l) => Some(l),
                None => return Err(self.error(&["literal", "null"])),
            }
        };
        let flag = if self.eat_keyword("dubious") {
            Flag::Dubious
        } else {
            Flag::Ok
        };
        Ok((output, flag))
    }

    fn literal(&mut self) -> Option<Literal> {
        let lit = match self.peek() {
            Tok::Str(s) => Literal::Code(s.clone()),
            Tok::Int(n) => Literal::Int(*n),
            Tok::Date(d) => Literal::Date(*d),
            _ => return None,
        };
        self.advance();
        Some(lit)
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.or_expr()?;
        if self.eat_keyword("implies") {
            let rhs = self.expr()?;
            Ok(Expr::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::connect(Connective::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while self.eat_keyword("and") {
            let rhs = self.atom()?;
            lhs = Expr::connect(Connective::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::LParen {
            self.advance();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        for (kw, func) in [
            ("startswith", StringFn::StartsWith),
            ("endswith", StringFn::EndsWith),
        ] {
            if self.eat_keyword(kw) {
                self.expect(Tok::LParen, "`(`")?;
                let variable = self.identifier("variable")?;
                self.expect(Tok::Comma, "`,`")?;
                let literal = match self.peek() {
                    Tok::Str(s) => s.clone(),
                    _ => return Err(self.error(&["string literal"])),
                };
                self.advance();
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Expr::StringFn {
                    func,
                    variable,
                    literal,
                });
            }
        }
        let subject = self.term()?;
        if self.eat_keyword("in") {
            return Ok(Expr::Membership {
                op: MemberOp::In,
                subject: Box::new(subject),
                values: self.literal_list()?,
            });
        }
        if self.eat_keyword("notIn") {
            return Ok(Expr::Membership {
                op: MemberOp::NotIn,
                subject: Box::new(subject),
                values: self.literal_list()?,
            });
        }
        let op = match self.peek() {
            Tok::Op("=") => CompareOp::Eq,
            Tok::Op("!=") => CompareOp::Ne,
            Tok::Op("<") => CompareOp::Lt,
            Tok::Op("<=") => CompareOp::Le,
            Tok::Op(">") => CompareOp::Gt,
            Tok::Op(">=") => CompareOp::Ge,
            _ => {
                return Err(
                    self.error(&["=", "!=", "<", "<=", ">", ">=", "in", "notIn"])
                )
            }
        };
        self.advance();
        let rhs = self.term()?;
        Ok(Expr::compare(op, subject, rhs))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        if let Some(l) = self.literal() {
            return Ok(Expr::Lit(l));
        }
        if self.eat_keyword("substring") {
            self.expect(Tok::LParen, "`(`")?;
            let variable = self.identifier("variable")?;
            self.expect(Tok::Comma, "`,`")?;
            let start = self.index()?;
            self.expect(Tok::Comma, "`,`")?;
            let end = self.index()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::Substring {
                variable,
                start,
                end,
            });
        }
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.advance();
                Ok(Expr::Var(s))
            }
            _ => Err(self.error(&["variable", "literal", "substring", "startswith", "endswith", "("])),
        }
    }

    fn index(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Tok::Int(n) if *n >= 0 && *n <= u32::MAX as i64 => {
                let n = *n as u32;
                self.advance();
                Ok(n)
            }
            _ => Err(self.error(&["non-negative index"])),
        }
    }

    fn literal_list(&mut self) -> Result<Vec<Literal>, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut values = Vec::new();
        loop {
            match self.literal() {
                Some(l) => values.push(l),
                None => return Err(self.error(&["literal"])),
            }
            match self.peek() {
                Tok::Comma => {
                    self.advance();
                }
                Tok::RBracket => {
                    self.advance();
                    break;
                }
                _ => return Err(self.error(&[",", "]"])),
            }
        }
        Ok(values)
    }
}
