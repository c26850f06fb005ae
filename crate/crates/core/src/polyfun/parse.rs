//! Recursive-descent parser for the objective expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' index | '(' expr ')'
//! ```
//!
//! Variables are `x1 .. xn`. Division is allowed only by nonzero constants,
//! so `3/4*x1` and `(x1 + x2)/2` parse but `1/x1` does not.

use num_traits::Zero;

use super::multivariate::Polynomial;
use crate::error::ParseError;
use crate::scalar::{parse_decimal, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars().take(offset) {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, msg: impl Into<String>) -> ParseError {
        let (line, col) = position(self.text, offset);
        ParseError::new(line, col, msg)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(&c) = self.chars.get(self.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            let tok = match c {
                '+' => Tok::Plus,
                '-' | '\u{2212}' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                'x' | 'X' => {
                    let mut end = self.pos + 1;
                    while end < self.chars.len() && self.chars[end].is_ascii_digit() {
                        end += 1;
                    }
                    if end == self.pos + 1 {
                        return Err(self.error(start, "expected a variable index after 'x'"));
                    }
                    let digits: String = self.chars[self.pos + 1..end].iter().collect();
                    let idx: usize = digits
                        .parse()
                        .map_err(|_| self.error(start, "variable index out of range"))?;
                    self.pos = end;
                    out.push((Tok::Var(idx), start));
                    continue;
                }
                d if d.is_ascii_digit() || d == '.' => {
                    let mut end = self.pos;
                    while end < self.chars.len()
                        && (self.chars[end].is_ascii_digit() || self.chars[end] == '.')
                    {
                        end += 1;
                    }
                    let lit: String = self.chars[self.pos..end].iter().collect();
                    let value = parse_decimal(&lit)
                        .ok_or_else(|| self.error(start, format!("malformed number {lit:?}")))?;
                    self.pos = end;
                    out.push((Tok::Num(value), start));
                    continue;
                }
                other => return Err(self.error(start, format!("unexpected character {other:?}"))),
            };
            self.pos += 1;
            out.push((tok, start));
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    nvars: usize,
    text: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn offset(&self) -> usize {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn error(&self, offset: usize, msg: impl Into<String>) -> ParseError {
        let (line, col) = position(self.text, offset);
        ParseError::new(line, col, msg)
    }

    fn expr(&mut self) -> Result<Polynomial<Rational>, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial<Rational>, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Tok::Slash => {
                    let at = self.offset();
                    self.bump();
                    let rhs = self.unary()?;
                    let c = rhs
                        .as_constant()
                        .ok_or_else(|| self.error(at, "division is only allowed by constants"))?;
                    if c.is_zero() {
                        return Err(self.error(at, "division by zero"));
                    }
                    acc = acc.scale(&(Rational::from_integer(1.into()) / c));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial<Rational>, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial<Rational>, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        match self.bump() {
            Tok::Num(e) if e.is_integer() => {
                let k: u32 = e
                    .to_integer()
                    .try_into()
                    .map_err(|_| self.error(at, "exponent too large"))?;
                Ok(base.pow(k))
            }
            _ => Err(self.error(at, "expected a nonnegative integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Polynomial<Rational>, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Polynomial::constant(self.nvars, v)),
            Tok::Var(i) => {
                if i == 0 || i > self.nvars {
                    return Err(self.error(
                        at,
                        format!("variable x{i} out of range (x1..x{})", self.nvars),
                    ));
                }
                Ok(Polynomial::variable(self.nvars, i - 1))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.offset();
                match self.bump() {
                    Tok::RParen => Ok(inner),
                    _ => Err(self.error(close, "expected ')'")),
                }
            }
            Tok::End => Err(self.error(at, "unexpected end of expression")),
            other => Err(self.error(at, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse an objective expression in `nvars` variables.
pub fn parse_polynomial(text: &str, nvars: usize) -> Result<Polynomial<Rational>, ParseError> {
    let toks = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        text,
    }
    .tokens()?;
    let mut parser = Parser {
        toks,
        idx: 0,
        nvars,
        text,
    };
    let p = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(parser.offset(), "unexpected trailing input"));
    }
    Ok(p)
}
