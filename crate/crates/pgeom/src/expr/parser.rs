//! Recursive-descent / Pratt parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ['^' integer]
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom
//! ```
//!
//! Unary minus binds looser than `*` and `/` (so `-x1*x2` is `-(x1*x2)` and
//! `-x1^2` is `-(x1^2)`), which accepts the same language as the grammar
//! above. Identifiers must be declared coordinates or one of the function
//! names sin, cos, exp, ln, sqrt. `^` takes a literal (optionally negative)
//! integer exponent.

use super::{Expr, Func};

#[derive(Debug, Clone, thiserror::Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.pos >= self.bytes.len() {
                return Ok(out);
            }
            let start = self.pos;
            let b = self.bytes[self.pos];
            let tok = match b {
                b'+' => {
                    self.pos += 1;
                    Tok::Plus
                }
                b'-' => {
                    self.pos += 1;
                    Tok::Minus
                }
                b'*' => {
                    self.pos += 1;
                    Tok::Star
                }
                b'/' => {
                    self.pos += 1;
                    Tok::Slash
                }
                b'^' => {
                    self.pos += 1;
                    Tok::Caret
                }
                b'(' => {
                    self.pos += 1;
                    Tok::LParen
                }
                b')' => {
                    self.pos += 1;
                    Tok::RParen
                }
                b'0'..=b'9' => self.lex_number(start)?,
                _ if b.is_ascii_alphabetic() || b == b'_' => {
                    while self.pos < self.bytes.len()
                        && (self.bytes[self.pos].is_ascii_alphanumeric()
                            || self.bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    Tok::Ident(self.src[start..self.pos].to_string())
                }
                _ => {
                    return err(
                        start,
                        format!("unexpected character `{}`", &self.src[start..start + 1]),
                    )
                }
            };
            out.push((start, tok));
        }
    }

    fn lex_number(&mut self, start: usize) -> Result<Tok, ParseError> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_digit() {
                return err(self.pos, "expected digits after decimal point");
            }
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.bytes.len() && (self.bytes[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len()
                && (self.bytes[self.pos] == b'+' || self.bytes[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. `2*exp(x)` lexed as `2`, `exp`)
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            _ => err(start, format!("invalid number literal `{text}`")),
        }
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    cursor: usize,
    coords: &'a [String],
    len: usize,
}

// Binding powers; the printer's precedence table mirrors these.
const BP_ADD: u8 = 10;
const BP_NEG: u8 = 15;
const BP_MUL: u8 = 20;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map(|(o, _)| *o)
            .unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.cursor).map(|(_, t)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.cursor += 1;
                Ok(())
            }
            Some(_) => err(self.offset(), format!("expected {what}")),
            None => err(
                self.len,
                format!("unexpected end of input, expected {what}"),
            ),
        }
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let (lbp, tok) = match self.peek() {
                Some(Tok::Plus) => (BP_ADD, Tok::Plus),
                Some(Tok::Minus) => (BP_ADD, Tok::Minus),
                Some(Tok::Star) => (BP_MUL, Tok::Star),
                Some(Tok::Slash) => (BP_MUL, Tok::Slash),
                Some(Tok::Caret) => {
                    return err(
                        self.offset(),
                        "unexpected `^` (a factor takes a single integer exponent)",
                    )
                }
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.cursor += 1;
            let rhs = self.parse_expr(lbp + 1)?;
            lhs = match tok {
                Tok::Plus => Expr::add(lhs, rhs),
                Tok::Minus => Expr::sub(lhs, rhs),
                Tok::Star => Expr::mul(lhs, rhs),
                Tok::Slash => Expr::div(lhs, rhs),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Minus) => {
                let inner = self.parse_expr(BP_NEG)?;
                Ok(Expr::neg(inner))
            }
            Some(Tok::Num(v)) => self.maybe_pow(Expr::constant(v)),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let Some(func) = Func::from_name(&name) else {
                        return err(offset, format!("unknown function `{name}`"));
                    };
                    self.cursor += 1;
                    let arg = self.parse_expr(0)?;
                    self.expect(Tok::RParen, "`)`")?;
                    self.maybe_pow(Expr::call(func, arg))
                } else {
                    match self.coords.iter().position(|c| *c == name) {
                        Some(index) => self.maybe_pow(Expr::var(name, index)),
                        None => err(
                            offset,
                            format!("unknown identifier `{name}` (not a declared coordinate)"),
                        ),
                    }
                }
            }
            Some(Tok::LParen) => {
                let inner = self.parse_expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                self.maybe_pow(inner)
            }
            Some(t) => err(offset, format!("unexpected token `{t:?}`")),
            None => err(self.len, "unexpected end of input"),
        }
    }

    fn maybe_pow(&mut self, base: Expr) -> Result<Expr, ParseError> {
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.cursor += 1;
        let offset = self.offset();
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.cursor += 1;
            true
        } else {
            false
        };
        match self.bump() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX) => {
                let mut n = v as i32;
                if negative {
                    n = -n;
                }
                Ok(Expr::pow(base, n))
            }
            Some(Tok::Num(_)) => err(offset, "exponent must be an integer"),
            _ => err(offset, "expected integer exponent after `^`"),
        }
    }
}

/// Parse `src` against the declared coordinate names.
pub fn parse(src: &str, coords: &[String]) -> Result<Expr, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser {
        toks,
        cursor: 0,
        coords,
        len: src.len(),
    };
    let e = p.parse_expr(0)?;
    if p.cursor < p.toks.len() {
        return err(p.offset(), "unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprKind;

    fn coords() -> Vec<String> {
        vec!["x1".to_string(), "x2".to_string()]
    }

    #[test]
    fn grammar_examples() {
        let c = coords();
        // x1^2 + sin(x2)  ->  Add(Pow(x1,2), Sin(x2))
        let e = parse("x1^2 + sin(x2)", &c).unwrap();
        match e.kind() {
            ExprKind::Add(a, b) => {
                assert!(matches!(a.kind(), ExprKind::Pow(_, 2)));
                assert!(matches!(b.kind(), ExprKind::Call(Func::Sin, _)));
            }
            other => panic!("unexpected shape {other:?}"),
        }
        // -x1*x2  ->  Neg(Mul(x1,x2))
        let e = parse("-x1*x2", &c).unwrap();
        match e.kind() {
            ExprKind::Neg(inner) => assert!(matches!(inner.kind(), ExprKind::Mul(..))),
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let c = coords();
        let e = parse("x1 +", &c).unwrap_err();
        assert!(e.message.contains("end of input"), "{e}");
        assert_eq!(e.offset, 4);

        let e = parse("x1 + y", &c).unwrap_err();
        assert!(e.message.contains("unknown identifier"), "{e}");
        assert_eq!(e.offset, 5);

        let e = parse("x1 + tan(x2)", &c).unwrap_err();
        assert!(e.message.contains("unknown function"), "{e}");

        assert!(parse("x1^x2", &c).is_err());
        assert!(parse("x1^2^3", &c).is_err());
        assert!(parse("(x1", &c).is_err());
        assert!(parse("x1 x2", &c).is_err());
    }

    #[test]
    fn numbers_and_exponents() {
        let c = coords();
        assert_eq!(parse("2*3", &c).unwrap(), Expr::constant(6.0));
        assert_eq!(parse("1.5e2", &c).unwrap(), Expr::constant(150.0));
        let e = parse("x1^-2", &c).unwrap();
        assert!(matches!(e.kind(), ExprKind::Pow(_, -2)));
        // `2e` is a number followed by an identifier, not an exponent
        assert!(parse("2e", &c).is_err());
    }

    #[test]
    fn unary_minus_nests() {
        let c = coords();
        let e = parse("x1 * -x2", &c).unwrap();
        assert!(matches!(e.kind(), ExprKind::Mul(..)));
        let p = [3.0, 5.0];
        assert_eq!(e.eval(&p).unwrap(), -15.0);
        assert_eq!(parse("-x1^2", &c).unwrap().eval(&[2.0, 0.0]).unwrap(), -4.0);
        assert_eq!(
            parse("(-x1)^2", &c).unwrap().eval(&[2.0, 0.0]).unwrap(),
            4.0
        );
    }
}
