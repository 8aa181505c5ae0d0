use std::fmt;
use std::str::FromStr;

use chrono::{Days, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::dsl::{CompareOp, Connective, Expr, Literal, MemberOp, Rule, StringFn};

/// The eight rule mutation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationOperator {
    /// Alter a date literal by one year, month or day in either direction.
    AD,
    /// `=` ↔ `!=`.
    NI,
    /// `in` ↔ `notIn`.
    RI,
    /// `>` ↔ `<=`, `<` ↔ `>=`.
    SComp,
    /// `and` ↔ `or`.
    SConn,
    /// `startswith` ↔ `endswith`.
    SSE,
    /// `A implies B` → `B implies A`; also swaps a rule's `when` and `check`.
    SSR,
    /// `substring(v, i, j)` → `substring(v, j, i)`.
    SSI,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 8] = [
        MutationOperator::AD,
        MutationOperator::NI,
        MutationOperator::RI,
        MutationOperator::SComp,
        MutationOperator::SConn,
        MutationOperator::SSE,
        MutationOperator::SSR,
        MutationOperator::SSI,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MutationOperator::AD => "AD",
            MutationOperator::NI => "NI",
            MutationOperator::RI => "RI",
            MutationOperator::SComp => "SComp",
            MutationOperator::SConn => "SConn",
            MutationOperator::SSE => "SSE",
            MutationOperator::SSR => "SSR",
            MutationOperator::SSI => "SSI",
        }
    }

    /// Every operator except AD undoes itself.
    pub fn is_involutive(self) -> bool {
        self != MutationOperator::AD
    }

    /// Sites contributed by one matching node.
    fn width(self) -> usize {
        match self {
            MutationOperator::AD => DATE_SHIFTS.len(),
            _ => 1,
        }
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MutationOperator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationOperator::ALL
            .into_iter()
            .find(|o| o.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mutation operator `{s}`"))
    }
}

/// The six AD variants, in site order. Month arithmetic clamps to month end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateShift {
    PlusYear,
    MinusYear,
    PlusMonth,
    MinusMonth,
    PlusDay,
    MinusDay,
}

pub const DATE_SHIFTS: [DateShift; 6] = [
    DateShift::PlusYear,
    DateShift::MinusYear,
    DateShift::PlusMonth,
    DateShift::MinusMonth,
    DateShift::PlusDay,
    DateShift::MinusDay,
];

impl DateShift {
    pub fn apply(self, d: NaiveDate) -> Option<NaiveDate> {
        match self {
            DateShift::PlusYear => d.checked_add_months(Months::new(12)),
            DateShift::MinusYear => d.checked_sub_months(Months::new(12)),
            DateShift::PlusMonth => d.checked_add_months(Months::new(1)),
            DateShift::MinusMonth => d.checked_sub_months(Months::new(1)),
            DateShift::PlusDay => d.checked_add_days(Days::new(1)),
            DateShift::MinusDay => d.checked_sub_days(Days::new(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("site {site} out of range: {op} has {sites} sites in rule {rule}")]
    InvalidSite {
        rule: String,
        op: MutationOperator,
        site: usize,
        sites: usize,
    },
    #[error("date shift leaves the calendar range")]
    DateOverflow,
}

/// Walks a rule in pre-order, numbering the sites of one operator and
/// rewriting the one at `target`, if any.
struct Walker {
    op: MutationOperator,
    target: Option<usize>,
    next: usize,
    overflow: bool,
}

impl Walker {
    /// Claims the sites of one matching node; returns the offset of `target`
    /// inside them when this node is the one to rewrite.
    fn claim(&mut self) -> Option<usize> {
        let start = self.next;
        self.next += self.op.width();
        match self.target {
            Some(t) if (start..self.next).contains(&t) => Some(t - start),
            _ => None,
        }
    }

    fn date(&mut self, lit: &mut Literal) {
        if let Literal::Date(d) = lit {
            if let Some(k) = self.claim() {
                match DATE_SHIFTS[k].apply(*d) {
                    Some(shifted) => *d = shifted,
                    None => self.overflow = true,
                }
            }
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        use MutationOperator as Op;
        match (self.op, &mut *e) {
            (Op::NI, Expr::Comparison { op, .. }) if matches!(op, CompareOp::Eq | CompareOp::Ne) => {
                if self.claim().is_some() {
                    *op = if *op == CompareOp::Eq { CompareOp::Ne } else { CompareOp::Eq };
                }
            }
            (Op::SComp, Expr::Comparison { op, .. })
                if matches!(op, CompareOp::Gt | CompareOp::Le | CompareOp::Lt | CompareOp::Ge) =>
            {
                if self.claim().is_some() {
                    *op = match *op {
                        CompareOp::Gt => CompareOp::Le,
                        CompareOp::Le => CompareOp::Gt,
                        CompareOp::Lt => CompareOp::Ge,
                        _ => CompareOp::Lt,
                    };
                }
            }
            (Op::RI, Expr::Membership { op, .. }) => {
                if self.claim().is_some() {
                    *op = match *op {
                        MemberOp::In => MemberOp::NotIn,
                        MemberOp::NotIn => MemberOp::In,
                    };
                }
            }
            (Op::SConn, Expr::Connective { op, .. }) => {
                if self.claim().is_some() {
                    *op = match *op {
                        Connective::And => Connective::Or,
                        Connective::Or => Connective::And,
                    };
                }
            }
            (Op::SSE, Expr::StringFn { func, .. }) => {
                if self.claim().is_some() {
                    *func = match *func {
                        StringFn::StartsWith => StringFn::EndsWith,
                        StringFn::EndsWith => StringFn::StartsWith,
                    };
                }
            }
            (Op::SSR, Expr::Implication { antecedent, consequent }) if self.claim().is_some() => {
                std::mem::swap(antecedent, consequent);
            }
            (Op::SSI, Expr::Substring { start, end, .. }) if self.claim().is_some() => {
                std::mem::swap(start, end);
            }
            _ => {}
        }
        match e {
            Expr::Comparison { left, right, .. } | Expr::Connective { left, right, .. } => {
                self.expr(left);
                self.expr(right);
            }
            Expr::Implication {
                antecedent,
                consequent,
            } => {
                self.expr(antecedent);
                self.expr(consequent);
            }
            Expr::Membership { subject, values, .. } => {
                self.expr(subject);
                if self.op == MutationOperator::AD {
                    for v in values {
                        self.date(v);
                    }
                }
            }
            Expr::Lit(l) if self.op == MutationOperator::AD => self.date(l),
            _ => {}
        }
    }

    fn output(&mut self, out: &mut Option<Literal>) {
        if self.op == MutationOperator::AD {
            if let Some(l) = out {
                self.date(l);
            }
        }
    }

    fn rule(&mut self, rule: &mut Rule) {
        match rule {
            Rule::Validation(v) => {
                if self.op == MutationOperator::SSR {
                    if let Some(apply) = &mut v.applicability {
                        if self.claim().is_some() {
                            std::mem::swap(apply, &mut v.check);
                        }
                    }
                }
                if let Some(apply) = &mut v.applicability {
                    self.expr(apply);
                }
                self.expr(&mut v.check);
            }
            Rule::Aggregation(a) => {
                for b in &mut a.branches {
                    self.expr(&mut b.guard);
                    self.output(&mut b.output);
                }
                if let Some(fb) = &mut a.fallback {
                    self.output(&mut fb.output);
                }
            }
        }
    }
}

/// Number of sites of `op` in `rule`; AD counts six per date literal.
pub fn site_count(rule: &Rule, op: MutationOperator) -> usize {
    let mut w = Walker {
        op,
        target: None,
        next: 0,
        overflow: false,
    };
    // The walker only rewrites at `target`, so a scratch copy is never changed.
    w.rule(&mut rule.clone());
    w.next
}

/// Site indices of `op` in `rule`, in pre-order.
pub fn enumerate_sites(rule: &Rule, op: MutationOperator) -> Vec<usize> {
    (0..site_count(rule, op)).collect()
}

/// Rewrites the `site`-th occurrence of `op` in `rule`.
pub fn apply_operator(rule: &Rule, op: MutationOperator, site: usize) -> Result<Rule, ApplyError> {
    let mut mutated = rule.clone();
    let mut w = Walker {
        op,
        target: Some(site),
        next: 0,
        overflow: false,
    };
    w.rule(&mut mutated);
    if site >= w.next {
        return Err(ApplyError::InvalidSite {
            rule: rule.id().to_string(),
            op,
            site,
            sites: w.next,
        });
    }
    if w.overflow {
        return Err(ApplyError::DateOverflow);
    }
    Ok(mutated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{format_rule, parse_rule};

    const EXAMPLE: &str =
        "rule V-EX: when messageType = 'H' check surgery = 96 implies basis > 32 severity error";

    #[test]
    fn example_rule_site_counts() {
        let r = parse_rule(EXAMPLE).unwrap();
        assert_eq!(site_count(&r, MutationOperator::NI), 2);
        assert_eq!(site_count(&r, MutationOperator::SSR), 2);
        assert_eq!(site_count(&r, MutationOperator::SConn), 0);
        assert_eq!(site_count(&r, MutationOperator::SComp), 1);
    }

    #[test]
    fn example_rule_rewrites() {
        let r = parse_rule(EXAMPLE).unwrap();
        let ni = apply_operator(&r, MutationOperator::NI, 1).unwrap();
        assert_eq!(
            format_rule(&ni),
            "rule V-EX: when messageType = 'H' check (surgery != 96) implies (basis > 32) severity error\n"
        );
        let ssr = apply_operator(&r, MutationOperator::SSR, 1).unwrap();
        assert!(format_rule(&ssr).contains("check (basis > 32) implies (surgery = 96)"));
        let outer = apply_operator(&r, MutationOperator::SSR, 0).unwrap();
        assert!(format_rule(&outer).starts_with("rule V-EX: when (surgery = 96) implies (basis > 32) check messageType = 'H'"));
        assert!(matches!(
            apply_operator(&r, MutationOperator::NI, 2),
            Err(ApplyError::InvalidSite { sites: 2, .. })
        ));
    }

    #[test]
    fn date_shift_clamps_to_month_end() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 31).unwrap();
        assert_eq!(DateShift::PlusMonth.apply(d), NaiveDate::from_ymd_opt(2020, 2, 29));
        let leap = NaiveDate::from_ymd_opt(2020, 2, 29).unwrap();
        assert_eq!(DateShift::PlusYear.apply(leap), NaiveDate::from_ymd_opt(2021, 2, 28));
        assert_eq!(DateShift::MinusDay.apply(NaiveDate::from_ymd_opt(2020, 3, 1).unwrap()), Some(leap));
    }

    #[test]
    fn ad_has_six_sites_per_date_and_reaches_lists_and_outputs() {
        let r = parse_rule("agg X -> d: a in [@2020-01-31, 5] => @2000-01-01; else => null").unwrap();
        assert_eq!(site_count(&r, MutationOperator::AD), 12);
        let m = apply_operator(&r, MutationOperator::AD, 2).unwrap();
        assert!(format_rule(&m).contains("@2020-02-29"));
        let m = apply_operator(&r, MutationOperator::AD, 11).unwrap();
        assert!(format_rule(&m).contains("=> @1999-12-31"));
    }
}
