//! Recursive-descent parser for arithmetic expressions.
//!
//! Grammar (standard precedence, left associative):
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/' | 'x' | '×' | '÷') unary)*
//! unary := '-' unary | atom
//! atom  := NUMBER | '(' expr ')'
//! ```
//! Numbers may carry comma thousands separators, decimals, a leading currency
//! symbol, and a trailing percent sign; adornments are stripped from the
//! operand value. All spans are byte ranges into the original step text
//! (shifted by the parser's base offset).

use std::sync::LazyLock;

use num_rational::BigRational;
use regex::Regex;

use super::{ArithExpr, BinOp, Span};
use crate::error::{Error, Result};
use crate::numeric::parse_rational;

static NUMBER_AT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[$€£¥]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)%?").expect("valid regex")
});

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Op(BinOp),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    span: Span,
}

fn lex(text: &str, base: usize) -> Result<Vec<SpannedTok>> {
    let mut toks = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some(&(i, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Op(BinOp::Add)),
            '-' | '\u{2212}' => Some(Tok::Op(BinOp::Sub)),
            '*' | '\u{00d7}' => Some(Tok::Op(BinOp::Mul)),
            '/' | '\u{00f7}' => Some(Tok::Op(BinOp::Div)),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            let end = i + c.len_utf8();
            toks.push(SpannedTok {
                tok,
                span: (base + i, base + end),
            });
            iter.next();
            continue;
        }
        if c == 'x' || c == 'X' {
            // letter-x multiplication: only between a value and another operand
            let prev_ok = matches!(
                toks.last().map(|t| &t.tok),
                Some(Tok::Num(_)) | Some(Tok::RParen)
            );
            let next_ok = text[i + 1..]
                .trim_start()
                .chars()
                .next()
                .is_some_and(|n| n.is_ascii_digit() || n == '(' || n == '$');
            if prev_ok && next_ok {
                toks.push(SpannedTok {
                    tok: Tok::Op(BinOp::Mul),
                    span: (base + i, base + i + 1),
                });
                iter.next();
                continue;
            }
            return Err(Error::Parse {
                position: base + i,
                message: format!("unexpected character '{c}'"),
            });
        }
        if let Some(m) = NUMBER_AT.find(&text[i..]) {
            let lit = m.as_str();
            let value = parse_rational(lit).ok_or_else(|| Error::Parse {
                position: base + i,
                message: format!("bad numeric literal '{lit}'"),
            })?;
            toks.push(SpannedTok {
                tok: Tok::Num(value),
                span: (base + i, base + i + lit.len()),
            });
            for _ in 0..lit.chars().count() {
                iter.next();
            }
            continue;
        }
        return Err(Error::Parse {
            position: base + i,
            message: format!("unexpected character '{c}'"),
        });
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
    end_of_input: usize,
}

impl Parser {
    fn peek(&self) -> Option<&SpannedTok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<SpannedTok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, message: impl Into<String>) -> Error {
        let position = self
            .peek()
            .map(|t| t.span.0)
            .unwrap_or(self.end_of_input);
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<ArithExpr> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            let (op, op_span) = match &t.tok {
                Tok::Op(op @ (BinOp::Add | BinOp::Sub)) => (*op, t.span),
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ArithExpr::binary(op, lhs, rhs, op_span);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ArithExpr> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            let (op, op_span) = match &t.tok {
                Tok::Op(op @ (BinOp::Mul | BinOp::Div)) => (*op, t.span),
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = ArithExpr::binary(op, lhs, rhs, op_span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ArithExpr> {
        if let Some(t) = self.peek() {
            if matches!(t.tok, Tok::Op(BinOp::Sub)) {
                let start = t.span.0;
                self.pos += 1;
                let inner = self.unary()?;
                let span = (start, inner.span().1);
                return Ok(ArithExpr::Unary {
                    expr: Box::new(inner),
                    span,
                });
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<ArithExpr> {
        match self.next() {
            Some(SpannedTok {
                tok: Tok::Num(value),
                span,
            }) => Ok(ArithExpr::Number { value, span }),
            Some(SpannedTok {
                tok: Tok::LParen,
                span,
            }) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(SpannedTok {
                        tok: Tok::RParen,
                        span: rspan,
                    }) => Ok(ArithExpr::Group {
                        inner: Box::new(inner),
                        span: (span.0, rspan.1),
                    }),
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        Err(self.error_at("expected ')'"))
                    }
                }
            }
            Some(other) => Err(Error::Parse {
                position: other.span.0,
                message: "expected a number or '('".into(),
            }),
            None => Err(self.error_at("unexpected end of expression")),
        }
    }
}

/// Parses `text` as a full expression; `base` shifts all spans so they index
/// into the enclosing step text.
pub fn parse_expression_at(text: &str, base: usize) -> Result<ArithExpr> {
    let toks = lex(text, base)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            position: base,
            message: "empty expression".into(),
        });
    }
    let end_of_input = base + text.len();
    let mut p = Parser {
        toks,
        pos: 0,
        end_of_input,
    };
    let expr = p.expr()?;
    if let Some(extra) = p.peek() {
        return Err(Error::Parse {
            position: extra.span.0,
            message: "trailing input after expression".into(),
        });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::eval_expression;
    use num_bigint::BigInt;

    fn rat(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    #[test]
    fn parses_case_study_product() {
        let e = parse_expression_at("125 * 8", 0).unwrap();
        match &e {
            ArithExpr::Binary { op, lhs, rhs, .. } => {
                assert_eq!(*op, BinOp::Mul);
                assert!(matches!(**lhs, ArithExpr::Number { ref value, .. } if *value == rat(125)));
                assert!(matches!(**rhs, ArithExpr::Number { ref value, .. } if *value == rat(8)));
            }
            other => panic!("expected binary node, got {other:?}"),
        }
    }

    #[test]
    fn precedence_binds_products_tighter() {
        let e = parse_expression_at("2 + 3 * 4", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(14));
    }

    #[test]
    fn parens_group() {
        let e = parse_expression_at("(2 + 3) * 4", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(20));
        assert!(matches!(e, ArithExpr::Binary { ref lhs, .. } if matches!(**lhs, ArithExpr::Group { .. })));
    }

    #[test]
    fn accepts_operator_spellings() {
        for text in ["6 × 7", "6 * 7", "6 x 7"] {
            let e = parse_expression_at(text, 0).unwrap();
            assert_eq!(eval_expression(&e).unwrap(), rat(42), "{text}");
        }
        for text in ["84 ÷ 2", "84 / 2"] {
            let e = parse_expression_at(text, 0).unwrap();
            assert_eq!(eval_expression(&e).unwrap(), rat(42), "{text}");
        }
    }

    #[test]
    fn accepts_adorned_numbers() {
        let e = parse_expression_at("$1,000 + 15", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(1015));
        let e = parse_expression_at("50% + 50", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(100));
    }

    #[test]
    fn left_associativity() {
        let e = parse_expression_at("10 - 3 - 2", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(5));
        let e = parse_expression_at("24 / 4 / 2", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(3));
    }

    #[test]
    fn unary_negation() {
        let e = parse_expression_at("-5 + 3", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(-2));
        let e = parse_expression_at("3 - -4", 0).unwrap();
        assert_eq!(eval_expression(&e).unwrap(), rat(7));
    }

    #[test]
    fn reports_error_position() {
        match parse_expression_at("12 + abc", 0) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_expression_at("(1 + 2", 0) {
            Err(Error::Parse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bare_x_as_variable() {
        assert!(parse_expression_at("x + 1", 0).is_err());
    }

    #[test]
    fn spans_index_original_text_with_base() {
        let text = "125 * 8";
        let e = parse_expression_at(text, 10).unwrap();
        match e {
            ArithExpr::Binary { op_span, .. } => assert_eq!(op_span, (14, 15)),
            other => panic!("expected binary node, got {other:?}"),
        }
    }
}
