//! The small expression language for angular profiles such as ω₀:
//! numbers, `pi`, `theta`, `phi`, `cos(..)`, `sin(..)`, `+`, `-`, `*` and
//! parentheses.

use std::fmt;

use nullflow::{ScalarField, SphereGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Theta,
    Phi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.pos + 1, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                i += 1;
            }
            // exponent: 1e-3, 2.5E+2
            if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = bytes[start..i].iter().collect();
            let v = text.parse().map_err(|_| ParseError {
                pos: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(bytes[start..i].iter().collect())));
        } else if "+-*()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat('*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of expression");
        };
        match tok {
            Tok::Num(v) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.at += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return self.fail("expected ')'");
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                let start = self.pos();
                self.at += 1;
                match name.as_str() {
                    "theta" => Ok(Expr::Theta),
                    "phi" => Ok(Expr::Phi),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "cos" | "sin" => {
                        if !self.eat('(') {
                            return self.fail(format!("expected '(' after {name}"));
                        }
                        let arg = Box::new(self.sum()?);
                        if !self.eat(')') {
                            return self.fail("expected ')'");
                        }
                        Ok(if name == "cos" { Expr::Cos(arg) } else { Expr::Sin(arg) })
                    }
                    _ => Err(ParseError {
                        pos: start,
                        message: format!("unknown name '{name}' (expected theta, phi, pi, cos or sin)"),
                    }),
                }
            }
            Tok::Sym(c) => self.fail(format!("unexpected '{c}'")),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut p = Parser {
            toks: lex(src)?,
            at: 0,
            end: src.chars().count(),
        };
        let e = p.sum()?;
        if p.at != p.toks.len() {
            return p.fail("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Theta => theta,
            Expr::Phi => phi,
            Expr::Neg(a) => -a.eval(theta, phi),
            Expr::Add(a, b) => a.eval(theta, phi) + b.eval(theta, phi),
            Expr::Sub(a, b) => a.eval(theta, phi) - b.eval(theta, phi),
            Expr::Mul(a, b) => a.eval(theta, phi) * b.eval(theta, phi),
            Expr::Cos(a) => a.eval(theta, phi).cos(),
            Expr::Sin(a) => a.eval(theta, phi).sin(),
        }
    }

    pub fn uses_phi(&self) -> bool {
        match self {
            Expr::Phi => true,
            Expr::Num(_) | Expr::Theta => false,
            Expr::Neg(a) | Expr::Cos(a) | Expr::Sin(a) => a.uses_phi(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.uses_phi() || b.uses_phi(),
        }
    }

    pub fn to_field(&self, grid: SphereGrid) -> ScalarField {
        ScalarField::from_fn(grid, |t, p| self.eval(t, p))
    }
}
