//! Polynomial text: signed terms, integer, `p/q` and decimal literals,
//! identifiers, nonnegative integer powers, optional `*`, parentheses.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{MPoly, ParseError, Rational};

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

fn err(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        line: 1,
        column: pos + 1,
        message: msg.into(),
    }
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MPoly, ParseError> {
        let mut acc = MPoly::zero();
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    1
                }
                Some('-') => {
                    self.pos += 1;
                    -1
                }
                _ if first => 1,
                _ => break,
            };
            first = false;
            let t = self.term()?;
            acc = if sign > 0 { &acc + &t } else { &acc - &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<MPoly, ParseError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '(' || c == '.' => {
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<MPoly, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(err(start, "expected a nonnegative integer exponent"));
            }
            let s: String = self.chars[start..self.pos].iter().collect();
            let k: u32 = s.parse().map_err(|_| err(start, "exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MPoly, ParseError> {
        match self.peek() {
            None => Err(err(self.pos, "unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(err(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let r = self.number()?;
                Ok(MPoly::constant(r))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                Ok(MPoly::var(&name))
            }
            Some(c) => Err(err(self.pos, format!("unexpected character `{c}`"))),
        }
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn number(&mut self) -> Result<Rational, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let int_part = self.digits();
        let mut value = if int_part.is_empty() {
            Rational::zero()
        } else {
            Rational::from_integer(int_part.parse::<BigInt>().unwrap())
        };
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            let frac = self.digits();
            if int_part.is_empty() && frac.is_empty() {
                return Err(err(start, "malformed number"));
            }
            if !frac.is_empty() {
                let den = num_traits::pow(BigInt::from(10), frac.len());
                value += Rational::new(frac.parse::<BigInt>().unwrap(), den);
            }
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E'))
            && self
                .chars
                .get(self.pos + 1)
                .map(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
                .unwrap_or(false)
        {
            let save = self.pos;
            self.pos += 1;
            let neg = match self.chars.get(self.pos) {
                Some('-') => {
                    self.pos += 1;
                    true
                }
                Some('+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let e = self.digits();
            if e.is_empty() {
                self.pos = save;
            } else {
                let k: usize = e.parse().map_err(|_| err(save, "exponent too large"))?;
                let p = Rational::from_integer(num_traits::pow(BigInt::from(10), k));
                value = if neg { value / p } else { value * p };
            }
        }
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&'/') {
            self.pos += 1;
            self.skip_ws();
            let dstart = self.pos;
            let d = self.digits();
            if d.is_empty() {
                return Err(err(dstart, "expected a denominator"));
            }
            let d: BigInt = d.parse().unwrap();
            if d.is_zero() {
                return Err(err(dstart, "zero denominator"));
            }
            value /= Rational::from_integer(d);
        }
        Ok(value)
    }
}

pub fn parse_poly(s: &str) -> Result<MPoly, ParseError> {
    let mut p = Parser {
        chars: s.chars().collect(),
        pos: 0,
    };
    if p.peek().is_none() {
        return Err(err(p.pos, "empty polynomial"));
    }
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(err(p.pos, format!("unexpected character `{c}`")));
    }
    Ok(e)
}

/// Parses a signed rational literal such as `-3/4`, `0.125` or `1e-4`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    let mut p = Parser {
        chars: s.chars().collect(),
        pos: 0,
    };
    let neg = match p.peek() {
        Some('-') => {
            p.pos += 1;
            true
        }
        Some('+') => {
            p.pos += 1;
            false
        }
        _ => false,
    };
    match p.peek() {
        Some(c) if c.is_ascii_digit() || c == '.' => {}
        _ => return Err(err(p.pos, "expected a rational number")),
    }
    let v = p.number()?;
    if let Some(c) = p.peek() {
        return Err(err(p.pos, format!("unexpected character `{c}`")));
    }
    Ok(if neg { -v } else { v })
}
