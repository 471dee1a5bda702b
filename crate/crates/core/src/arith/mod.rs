//! Deterministic verification of arithmetic assertions inside step text.
//!
//! This is the computational engine behind the factual-support signal: every
//! `⟨expr⟩ = ⟨number⟩` claim found in a step is parsed and re-evaluated in
//! exact rational arithmetic, and a step's support is the product of the
//! per-assertion verdicts (vacuously 1 for prose-only steps).

mod parser;

pub use parser::parse_expression_at;

use std::sync::LazyLock;

use num_rational::BigRational;
use num_traits::Zero;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::chain::ReasoningStep;
use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational};

/// Byte range `[start, end)` into the step text an item was parsed from.
pub type Span = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    /// The mathematical inverse used by symbolic error injection.
    pub fn inverse(self) -> BinOp {
        match self {
            BinOp::Add => BinOp::Sub,
            BinOp::Sub => BinOp::Add,
            BinOp::Mul => BinOp::Div,
            BinOp::Div => BinOp::Mul,
        }
    }

    pub fn apply(self, lhs: &BigRational, rhs: &BigRational) -> Result<BigRational> {
        match self {
            BinOp::Add => Ok(lhs + rhs),
            BinOp::Sub => Ok(lhs - rhs),
            BinOp::Mul => Ok(lhs * rhs),
            BinOp::Div => {
                if rhs.is_zero() {
                    Err(Error::Eval("division by zero".into()))
                } else {
                    Ok(lhs / rhs)
                }
            }
        }
    }

    pub fn canonical_char(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    /// Spelling of the inverse operator that stays in the source spelling's
    /// family, so that swapping twice restores the original text: ASCII maps
    /// to ASCII, Unicode to Unicode. The lone `x` spelling of multiplication
    /// normalizes to `/`.
    pub fn inverse_spelling(source: char) -> Option<char> {
        match source {
            '+' => Some('-'),
            '-' | '\u{2212}' => Some('+'),
            '*' => Some('/'),
            '/' => Some('*'),
            '\u{00d7}' => Some('\u{00f7}'),
            '\u{00f7}' => Some('\u{00d7}'),
            'x' | 'X' => Some('/'),
            _ => None,
        }
    }
}

/// Expression tree with source spans.
///
/// `Group` nodes record explicit parentheses so that pretty-printing followed
/// by re-parsing reproduces the tree exactly.
#[derive(Debug, Clone)]
pub enum ArithExpr {
    Number {
        value: BigRational,
        span: Span,
    },
    /// Unary negation.
    Unary {
        expr: Box<ArithExpr>,
        span: Span,
    },
    Binary {
        op: BinOp,
        lhs: Box<ArithExpr>,
        rhs: Box<ArithExpr>,
        op_span: Span,
    },
    Group {
        inner: Box<ArithExpr>,
        span: Span,
    },
}

impl ArithExpr {
    pub fn binary(op: BinOp, lhs: ArithExpr, rhs: ArithExpr, op_span: Span) -> ArithExpr {
        ArithExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            op_span,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            ArithExpr::Number { span, .. }
            | ArithExpr::Unary { span, .. }
            | ArithExpr::Group { span, .. } => *span,
            ArithExpr::Binary { lhs, rhs, .. } => (lhs.span().0, rhs.span().1),
        }
    }

    /// Binary operators in breadth-first order: outermost first, then left to
    /// right. Each entry is (path from root, operator, operator span).
    pub fn binary_ops_outermost(&self) -> Vec<(Vec<usize>, BinOp, Span)> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back((self, Vec::new()));
        while let Some((node, path)) = queue.pop_front() {
            match node {
                ArithExpr::Binary {
                    op,
                    lhs,
                    rhs,
                    op_span,
                } => {
                    out.push((path.clone(), *op, *op_span));
                    let mut lp = path.clone();
                    lp.push(0);
                    queue.push_back((lhs, lp));
                    let mut rp = path;
                    rp.push(1);
                    queue.push_back((rhs, rp));
                }
                ArithExpr::Unary { expr, .. } => {
                    let mut p = path;
                    p.push(0);
                    queue.push_back((expr, p));
                }
                ArithExpr::Group { inner, .. } => {
                    let mut p = path;
                    p.push(0);
                    queue.push_back((inner, p));
                }
                ArithExpr::Number { .. } => {}
            }
        }
        out
    }

    /// Returns a copy with the operator at `path` replaced by `new_op`.
    pub fn with_op_at(&self, path: &[usize], new_op: BinOp) -> ArithExpr {
        let mut copy = self.clone();
        {
            let mut node = &mut copy;
            for &branch in path {
                node = match node {
                    ArithExpr::Binary { lhs, rhs, .. } => {
                        if branch == 0 {
                            lhs
                        } else {
                            rhs
                        }
                    }
                    ArithExpr::Unary { expr, .. } => expr,
                    ArithExpr::Group { inner, .. } => inner,
                    ArithExpr::Number { .. } => break,
                };
            }
            if let ArithExpr::Binary { op, .. } = node {
                *op = new_op;
            }
        }
        copy
    }
}

/// Structural equality: shape, operators, and values; spans are ignored so a
/// re-parsed pretty-print compares equal.
impl PartialEq for ArithExpr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ArithExpr::Number { value: a, .. }, ArithExpr::Number { value: b, .. }) => a == b,
            (ArithExpr::Unary { expr: a, .. }, ArithExpr::Unary { expr: b, .. }) => a == b,
            (
                ArithExpr::Binary {
                    op: oa,
                    lhs: la,
                    rhs: ra,
                    ..
                },
                ArithExpr::Binary {
                    op: ob,
                    lhs: lb,
                    rhs: rb,
                    ..
                },
            ) => oa == ob && la == lb && ra == rb,
            (ArithExpr::Group { inner: a, .. }, ArithExpr::Group { inner: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl std::fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArithExpr::Number { value, .. } => f.write_str(&format_rational(value)),
            ArithExpr::Unary { expr, .. } => write!(f, "-{expr}"),
            ArithExpr::Binary { op, lhs, rhs, .. } => {
                write!(f, "{lhs} {} {rhs}", op.canonical_char())
            }
            ArithExpr::Group { inner, .. } => write!(f, "({inner})"),
        }
    }
}

/// Parses a standalone expression (spans relative to the given text).
pub fn parse_expression(text: &str) -> Result<ArithExpr> {
    parse_expression_at(text, 0)
}

/// Evaluates in exact rational arithmetic; division by zero is an error.
pub fn eval_expression(expr: &ArithExpr) -> Result<BigRational> {
    match expr {
        ArithExpr::Number { value, .. } => Ok(value.clone()),
        ArithExpr::Unary { expr, .. } => Ok(-eval_expression(expr)?),
        ArithExpr::Binary { op, lhs, rhs, .. } => {
            let l = eval_expression(lhs)?;
            let r = eval_expression(rhs)?;
            op.apply(&l, &r)
        }
        ArithExpr::Group { inner, .. } => eval_expression(inner),
    }
}

/// One `⟨expr⟩ = ⟨number⟩` claim found in step text.
#[derive(Debug, Clone, PartialEq)]
pub struct ArithAssertion {
    pub lhs: ArithExpr,
    pub claimed: BigRational,
    /// Byte range of the whole assertion within the step text.
    pub source_span: Span,
    /// Byte range of the claimed number (including sign) within the step text.
    pub claimed_span: Span,
}

impl ArithAssertion {
    pub fn text<'a>(&self, step_text: &'a str) -> &'a str {
        &step_text[self.source_span.0..self.source_span.1]
    }
}

/// Assertions plus the near-misses that were skipped.
#[derive(Debug, Clone, Default)]
pub struct ExtractionResult {
    pub assertions: Vec<ArithAssertion>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScanTok {
    Num,
    Op(char),
    LParen,
    RParen,
    Eq,
}

static SCAN_NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[$€£¥]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)%?").expect("valid regex")
});

/// Lexes step text into math-relevant tokens split into runs at any
/// non-mathematical content (words, punctuation).
fn scan_runs(text: &str) -> Vec<Vec<(ScanTok, Span)>> {
    let mut runs: Vec<Vec<(ScanTok, Span)>> = Vec::new();
    let mut current: Vec<(ScanTok, Span)> = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < text.len() {
        let c = text[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let tok = match c {
            '=' => Some((ScanTok::Eq, 1)),
            '+' => Some((ScanTok::Op('+'), 1)),
            '-' | '\u{2212}' | '*' | '\u{00d7}' | '/' | '\u{00f7}' => {
                Some((ScanTok::Op(c), c.len_utf8()))
            }
            '(' => Some((ScanTok::LParen, 1)),
            ')' => Some((ScanTok::RParen, 1)),
            'x' | 'X' => {
                // single letter x between operands reads as multiplication
                let standalone = !bytes
                    .get(i + 1)
                    .is_some_and(|b| b.is_ascii_alphanumeric())
                    && (i == 0 || !bytes[i - 1].is_ascii_alphanumeric());
                let prev_is_value = matches!(
                    current.last(),
                    Some((ScanTok::Num, _)) | Some((ScanTok::RParen, _))
                );
                if standalone && prev_is_value {
                    Some((ScanTok::Op(c), 1))
                } else {
                    None
                }
            }
            _ => {
                if c.is_ascii_digit() || (matches!(c, '$' | '€' | '£' | '¥')) {
                    SCAN_NUMBER
                        .find(&text[i..])
                        .map(|m| (ScanTok::Num, m.as_str().len()))
                } else {
                    None
                }
            }
        };
        match tok {
            Some((tok, len)) => {
                current.push((tok, (i, i + len)));
                i += len;
            }
            None => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
                // skip the full word so "x" inside "extra" is never an operator
                if c.is_alphanumeric() {
                    while i < text.len() {
                        let d = text[i..].chars().next().expect("in bounds");
                        if d.is_alphanumeric() {
                            i += d.len_utf8();
                        } else {
                            break;
                        }
                    }
                } else {
                    i += c.len_utf8();
                }
            }
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

/// Scans step text left to right for maximal non-overlapping
/// `⟨expr⟩ = ⟨number⟩` assertions. Near-misses (an `=` without a parseable
/// expression before it or a number after it) are skipped and recorded.
pub fn extract_assertions(step_text: &str) -> ExtractionResult {
    let mut result = ExtractionResult::default();
    for run in scan_runs(step_text) {
        let mut floor = 0usize; // first token index usable as lhs material
        let mut j = 0usize;
        while j < run.len() {
            if run[j].0 != ScanTok::Eq {
                j += 1;
                continue;
            }
            let eq_span = run[j].1;
            // claimed number: NUM or '-' NUM immediately after '='
            let claimed = match run.get(j + 1) {
                Some((ScanTok::Num, span)) => Some((j + 1, *span)),
                Some((ScanTok::Op('-' | '\u{2212}'), sign_span)) => match run.get(j + 2) {
                    Some((ScanTok::Num, span)) => Some((j + 2, (sign_span.0, span.1))),
                    _ => None,
                },
                _ => None,
            };
            let Some((claimed_end_idx, claimed_span)) = claimed else {
                result.diagnostics.push(format!(
                    "no claimed number after '=' at byte {}",
                    eq_span.0
                ));
                j += 1;
                continue;
            };
            let claimed_text = &step_text[claimed_span.0..claimed_span.1];
            let Some(claimed_value) = parse_rational(claimed_text) else {
                result
                    .diagnostics
                    .push(format!("unparseable claimed number '{claimed_text}'"));
                j += 1;
                continue;
            };
            if floor >= j {
                result.diagnostics.push(format!(
                    "no expression before '=' at byte {}",
                    eq_span.0
                ));
                floor = claimed_end_idx + 1;
                j = claimed_end_idx + 1;
                continue;
            }
            // longest suffix of the run segment [floor, j) that parses
            let mut lhs = None;
            let mut lo = floor;
            while lo < j {
                let span = (run[lo].1 .0, run[j - 1].1 .1);
                match parse_expression_at(&step_text[span.0..span.1], span.0) {
                    Ok(expr) => {
                        lhs = Some((expr, span));
                        break;
                    }
                    Err(_) => lo += 1,
                }
            }
            match lhs {
                Some((expr, lhs_span)) => {
                    result.assertions.push(ArithAssertion {
                        lhs: expr,
                        claimed: claimed_value,
                        source_span: (lhs_span.0, claimed_span.1),
                        claimed_span,
                    });
                }
                None => {
                    result.diagnostics.push(format!(
                        "no parseable expression before '=' at byte {}",
                        eq_span.0
                    ));
                }
            }
            floor = claimed_end_idx + 1;
            j = claimed_end_idx + 1;
        }
    }
    result
}

/// Verdict for one assertion, kept for trace serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssertionCheck {
    pub text: String,
    pub span: Span,
    pub holds: bool,
    /// Exact re-evaluated value, absent when evaluation itself failed.
    pub expected: Option<String>,
    pub claimed: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// True iff the left-hand side re-evaluates exactly to the claimed value.
/// Evaluation failures (division by zero) yield a false verdict.
pub fn verify_assertion(assertion: &ArithAssertion) -> bool {
    matches!(eval_expression(&assertion.lhs), Ok(v) if v == assertion.claimed)
}

fn check_assertion(assertion: &ArithAssertion, step_text: &str) -> AssertionCheck {
    let (holds, expected, note) = match eval_expression(&assertion.lhs) {
        Ok(v) => {
            let holds = v == assertion.claimed;
            (holds, Some(format_rational(&v)), None)
        }
        Err(e) => (false, None, Some(e.to_string())),
    };
    AssertionCheck {
        text: assertion.text(step_text).to_string(),
        span: assertion.source_span,
        holds,
        expected,
        claimed: format_rational(&assertion.claimed),
        note,
    }
}

/// Per-step arithmetic verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepArithReport {
    /// 1 when every assertion holds (vacuously 1 with no assertions).
    pub support: u8,
    pub checks: Vec<AssertionCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub diagnostics: Vec<String>,
}

/// Factual support with full detail for the trace.
pub fn verify_step(step_text: &str) -> StepArithReport {
    let extraction = extract_assertions(step_text);
    let checks: Vec<AssertionCheck> = extraction
        .assertions
        .iter()
        .map(|a| check_assertion(a, step_text))
        .collect();
    let support = u8::from(checks.iter().all(|c| c.holds));
    StepArithReport {
        support,
        checks,
        diagnostics: extraction.diagnostics,
    }
}

/// Product of assertion verdicts over the step: the factual-support bit.
pub fn factual_support(step: &ReasoningStep) -> u8 {
    verify_step(&step.text).support
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    #[test]
    fn evaluates_case_study_values() {
        let e = parse_expression("125 * 8").unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(1000));
    }

    #[test]
    fn division_is_exact() {
        let e = parse_expression("1 / 3").unwrap();
        assert_eq!(
            eval_expression(&e).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(3))
        );
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse_expression("5 / 0").unwrap();
        assert!(matches!(eval_expression(&e), Err(Error::Eval(_))));
    }

    #[test]
    fn extracts_case_study_assertion() {
        let r = extract_assertions("So 125 * 8 = 1,005 apples");
        assert_eq!(r.assertions.len(), 1);
        let a = &r.assertions[0];
        assert_eq!(a.claimed, rat(1005));
        assert_eq!(a.text("So 125 * 8 = 1,005 apples"), "125 * 8 = 1,005");
        assert!(!verify_assertion(a));
    }

    #[test]
    fn corrected_assertion_verifies() {
        let r = extract_assertions("So 125 * 8 = 1,000 apples");
        assert!(verify_assertion(&r.assertions[0]));
    }

    #[test]
    fn no_math_yields_empty() {
        let r = extract_assertions("no math here");
        assert!(r.assertions.is_empty());
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn multiple_assertions_scan_left_to_right() {
        let r = extract_assertions("1+1=2 and 2+2=5");
        assert_eq!(r.assertions.len(), 2);
        assert!(verify_assertion(&r.assertions[0]));
        assert!(!verify_assertion(&r.assertions[1]));
    }

    #[test]
    fn near_miss_is_skipped_with_diagnostic() {
        let r = extract_assertions("we know x = 5 here");
        assert!(r.assertions.is_empty());
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn division_by_zero_claim_is_false_with_note() {
        let report = verify_step("so 1 / 0 = 0 obviously");
        assert_eq!(report.support, 0);
        assert_eq!(report.checks.len(), 1);
        assert!(!report.checks[0].holds);
        assert!(report.checks[0].note.as_deref().unwrap().contains("zero"));
    }

    #[test]
    fn factual_support_is_vacuously_one() {
        let step = ReasoningStep::new(1, "purely prose reasoning");
        assert_eq!(factual_support(&step), 1);
    }

    #[test]
    fn factual_support_vetoes_single_false_claim() {
        let step = ReasoningStep::new(2, "we get 125 * 8 = 1,005 apples");
        assert_eq!(factual_support(&step), 0);
        let step = ReasoningStep::new(2, "we get 125 * 8 = 1,000 apples");
        assert_eq!(factual_support(&step), 1);
    }

    #[test]
    fn factual_support_two_true_claims() {
        let step = ReasoningStep::new(1, "3 + 4 = 7 and 2 * 5 = 10");
        assert_eq!(factual_support(&step), 1);
    }

    #[test]
    fn support_is_monotone_under_added_assertions() {
        let base = "3 + 4 = 7";
        let with_true = format!("{base} and 1 + 1 = 2");
        let with_false = format!("{base} and 1 + 1 = 3");
        let g = |t: &str| verify_step(t).support;
        assert!(g(&with_true) <= g(base));
        assert!(g(&with_false) <= g(base));
        assert_eq!(g(&with_false), 0);
    }

    #[test]
    fn negative_claims_parse() {
        let r = extract_assertions("so 3 - 4 = -1 holds");
        assert_eq!(r.assertions.len(), 1);
        assert!(verify_assertion(&r.assertions[0]));
    }

    #[test]
    fn chained_equalities_do_not_overlap() {
        let r = extract_assertions("2 + 3 = 5 = 5");
        assert_eq!(r.assertions.len(), 1);
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn display_reparses_to_identical_tree() {
        for text in [
            "125 * 8",
            "(2 + 3) * 4",
            "2 + 3 * 4",
            "-5 + (1 - 2)",
            "10 / 4",
            "3 - -4",
        ] {
            let e = parse_expression(text).unwrap();
            let printed = e.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            assert_eq!(reparsed, e, "{text} -> {printed}");
        }
    }

    #[test]
    fn outermost_op_enumeration_is_breadth_first() {
        let e = parse_expression("1 + 2 * 3").unwrap();
        let ops: Vec<BinOp> = e
            .binary_ops_outermost()
            .into_iter()
            .map(|(_, op, _)| op)
            .collect();
        assert_eq!(ops, vec![BinOp::Add, BinOp::Mul]);
    }

    #[test]
    fn op_swap_by_path() {
        let e = parse_expression("3 + 4").unwrap();
        let ops = e.binary_ops_outermost();
        let swapped = e.with_op_at(&ops[0].0, ops[0].1.inverse());
        assert_eq!(eval_expression(&swapped).unwrap(), rat(-1));
    }
}
