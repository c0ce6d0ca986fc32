//! Complex amplitude expressions: decimal literals, `i`, `pi`, `+ - * /`,
//! unary minus, `sqrt`, `exp`, parentheses and named real constants.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{QpnError, Result};

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    I,
    Pi,
    /// Named constant resolved at parse time.
    Var(String, f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self) -> Complex64 {
        match self {
            Expr::Num(x) => C::new(*x, 0.0),
            Expr::I => C::new(0.0, 1.0),
            Expr::Pi => C::new(std::f64::consts::PI, 0.0),
            Expr::Var(_, x) => C::new(*x, 0.0),
            Expr::Neg(a) => -a.eval(),
            Expr::Add(a, b) => a.eval() + b.eval(),
            Expr::Sub(a, b) => a.eval() - b.eval(),
            Expr::Mul(a, b) => a.eval() * b.eval(),
            Expr::Div(a, b) => a.eval() / b.eval(),
            Expr::Sqrt(a) => {
                let z = a.eval();
                // real square roots stay exact for non-negative reals
                if z.im == 0.0 && z.re >= 0.0 {
                    C::new(z.re.sqrt(), 0.0)
                } else {
                    z.sqrt()
                }
            }
            Expr::Exp(a) => a.eval().exp(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            // `{:?}` keeps every bit of the literal
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::I => write!(f, "i"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(name, _) => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " {} ", if matches!(self, Expr::Add(..)) { '+' } else { '-' })?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { '*' } else { '/' })?;
                wrap(f, b, 3)
            }
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    consts: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> QpnError {
        QpnError::Parse {
            line: 1,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let n = self.number()?;
                // `2.5i` is an imaginary literal
                if self.src.get(self.pos) == Some(&b'i') && !self.ident_continues(self.pos + 1) {
                    self.pos += 1;
                    return Ok(Expr::Mul(Box::new(n), Box::new(Expr::I)));
                }
                Ok(n)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.ident_continues(self.pos) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match name {
                    "i" => Ok(Expr::I),
                    "pi" => Ok(Expr::Pi),
                    "sqrt" | "exp" => {
                        if !self.eat(b'(') {
                            return Err(self.error(format!("expected `(` after `{name}`")));
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(b')') {
                            return Err(self.error("expected `)`"));
                        }
                        Ok(if name == "sqrt" {
                            Expr::Sqrt(arg)
                        } else {
                            Expr::Exp(arg)
                        })
                    }
                    _ if self.consts.contains_key(name) => Ok(Expr::Var(name.to_string(), self.consts[name])),
                    _ => {
                        self.pos = start;
                        Err(self.error(format!("unknown identifier `{name}`")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
        }
    }

    fn ident_continues(&self, at: usize) -> bool {
        self.src
            .get(at)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.src.get(p.pos).is_some_and(u8::is_ascii_digit) {
                p.pos += 1;
            }
            p.pos > s
        };
        let int = digits(self);
        let mut frac = false;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = digits(self);
        }
        if !int && !frac {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|e| QpnError::Parse {
            line: 1,
            column: start + 1,
            message: e.to_string(),
        })
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    parse_expr_with(text, &BTreeMap::new())
}

/// Parses with the given named constants in scope. `i`, `pi`, `sqrt` and
/// `exp` cannot be shadowed.
pub fn parse_expr_with(text: &str, consts: &BTreeMap<String, f64>) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        consts,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

/// Parses and evaluates an amplitude expression; the value must be finite.
pub fn parse_amplitude(text: &str) -> Result<Complex64> {
    parse_amplitude_with(text, &BTreeMap::new())
}

pub fn parse_amplitude_with(text: &str, consts: &BTreeMap<String, f64>) -> Result<Complex64> {
    let z = parse_expr_with(text, consts)?.eval();
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(QpnError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::format_complex;

    #[test]
    fn literals_and_functions() {
        let z = parse_amplitude("1/sqrt(2)").unwrap();
        assert!((z - C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() <= 2e-16);
        let t = parse_amplitude("exp(i*pi/4)").unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((t - C::new(h, h)).norm() < 1e-15);
        let su = parse_amplitude("(-1+i)/(sqrt(2)*sqrt(6))").unwrap();
        assert!((su - C::new(-1.0, 1.0) / 12f64.sqrt()).norm() < 1e-15);
        assert_eq!(parse_amplitude("2.5i").unwrap(), C::new(0.0, 2.5));
        assert_eq!(parse_amplitude("-3").unwrap(), C::new(-3.0, 0.0));
        assert_eq!(parse_amplitude("1e-3").unwrap(), C::new(1e-3, 0.0));
        assert_eq!(parse_amplitude("2 - 3 - 4").unwrap(), C::new(-5.0, 0.0));
        assert_eq!(parse_amplitude("8/4/2").unwrap(), C::new(1.0, 0.0));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_amplitude("1 + foo") {
            Err(QpnError::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_amplitude("(1"), Err(QpnError::Parse { .. })));
        assert!(matches!(parse_amplitude("1 2"), Err(QpnError::Parse { .. })));
        assert!(matches!(parse_amplitude(""), Err(QpnError::Parse { .. })));
        assert!(matches!(parse_amplitude("1/0"), Err(QpnError::NonFinite)));
    }

    #[test]
    fn named_constants() {
        let consts = BTreeMap::from([("R".to_string(), 2.5), ("K".to_string(), 6.0)]);
        assert_eq!(parse_amplitude_with("2*R", &consts).unwrap(), C::new(5.0, 0.0));
        let e = parse_expr_with("K/R - 1", &consts).unwrap();
        assert_eq!(e.to_string(), "K/R - 1.0");
        assert!(parse_amplitude("R").is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        for text in [
            "1/sqrt(2)",
            "exp(i*pi/4)",
            "-(1+i)/sqrt(6)",
            "2 - (3 - 4)",
            "1/(2*3)",
            "--1",
            "0.1 + 0.2i",
            "-exp(-i*pi)",
        ] {
            let e = parse_expr(text).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert!((e.eval() - again.eval()).norm() <= 1e-15, "{text} -> {e}");
        }
    }

    #[test]
    fn formatted_values_parse_back() {
        for z in [
            C::new(0.5, -0.25),
            C::new(-1e-9, 3.0),
            C::new(0.0, 0.0),
            C::new(1.0 / 3.0, 2e12),
        ] {
            let back = parse_amplitude(&format_complex(z)).unwrap();
            assert!((back - z).norm() <= 1e-11 * z.norm().max(1.0));
        }
    }
}
