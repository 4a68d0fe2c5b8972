//! Closed arithmetic expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | name | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp
//! ```
//!
//! Names resolve to positional variables at parse time. Exponents must be
//! free of variables; this keeps symbolic differentiation inside the
//! grammar. Evaluation order is fixed by the tree, so results are
//! reproducible bit for bit.

use std::fmt;
use std::sync::Arc;

use crate::error::{HolabError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

/// Parses `src` with the given variable names bound to positions.
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        vars,
        src,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Name(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| HolabError::Expr(format!("bad number '{text}' in '{src}'")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Name(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(HolabError::Expr(format!("unexpected character '{c}' in '{src}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> HolabError {
        HolabError::Expr(format!("{what} at token {} in '{}'", self.pos, self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            if exponent.max_var().is_some() {
                return Err(self.error("exponent must not depend on variables"));
            }
            let k = exponent.eval(&[]);
            if !k.is_finite() {
                return Err(self.error("exponent is not finite"));
            }
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Op(c) => {
                self.pos -= 1;
                Err(self.error(&format!("unexpected '{c}'")))
            }
            Token::Name(name) => {
                if let Some(f) = ["sin", "cos", "exp"].iter().find(|f| **f == name) {
                    self.expect('(')?;
                    let arg = Box::new(self.expr()?);
                    self.expect(')')?;
                    return Ok(match *f {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Exp(arg),
                    });
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                self.pos -= 1;
                Err(self.error(&format!("unknown name '{name}'")))
            }
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), _) if *x == 0.0 => neg(b),
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) | (_, Expr::Const(x)) if *x == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, k) => {
                let base = a.eval(x);
                if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 {
                    base.powi(*k as i32)
                } else {
                    base.powf(*k)
                }
            }
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                );
                div(num, Expr::Pow(b.clone(), 2.0))
            }
            Expr::Pow(a, k) => {
                let da = a.derivative(var);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let lowered = if *k - 1.0 == 1.0 {
                    (**a).clone()
                } else if *k - 1.0 == 0.0 {
                    Expr::Const(1.0)
                } else {
                    Expr::Pow(a.clone(), k - 1.0)
                };
                mul(mul(Expr::Const(*k), lowered), da)
            }
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.derivative(var)),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.derivative(var))),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.derivative(var)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "#{i}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a} ^ {k})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// A vector of expressions sharing one variable list, with its Jacobian.
#[derive(Clone, Debug)]
pub struct ExprMap {
    pub source: Vec<String>,
    pub components: Vec<Expr>,
    pub jacobian: Vec<Vec<Expr>>,
    pub arity: usize,
}

impl ExprMap {
    pub fn parse(sources: &[String], vars: &[&str]) -> Result<Self> {
        let components = sources
            .iter()
            .map(|s| parse(s, vars))
            .collect::<Result<Vec<_>>>()?;
        let jacobian = components
            .iter()
            .map(|c| (0..vars.len()).map(|j| c.derivative(j)).collect())
            .collect();
        Ok(Self {
            source: sources.to_vec(),
            components,
            jacobian,
            arity: vars.len(),
        })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// `J(x)·v`.
    pub fn jvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.jacobian
            .iter()
            .map(|row| row.iter().zip(v).map(|(d, vi)| d.eval(x) * vi).sum())
            .collect()
    }

    pub fn into_fn(self) -> Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync> {
        Arc::new(move |x| self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        parse(src, &["x", "y"]).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[0.0, 0.0]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[0.0, 0.0]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[0.0, 0.0]), -4.0);
        assert_eq!(ev("8 / 4 / 2", &[0.0, 0.0]), 1.0);
        assert_eq!(ev("x - y - 1", &[5.0, 2.0]), 2.0);
        assert!((ev("2.5e-1 * pi", &[0.0, 0.0]) - std::f64::consts::PI / 4.0).abs() < 1e-16);
    }

    #[test]
    fn functions_and_variables() {
        let v = ev("sin(x) * cos(y) + exp(x - y)", &[0.3, -0.2]);
        let expected = 0.3f64.sin() * (-0.2f64).cos() + 0.5f64.exp();
        assert_eq!(v, expected);
    }

    #[test]
    fn rejects_unknown_names_and_junk() {
        for bad in ["z + 1", "sqrt(x)", "x +", "(x", "x ^ y", "1 $ 2", "x y"] {
            assert!(parse(bad, &["x", "y"]).is_err(), "{bad}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let srcs = [
            "x * y ^ 3 - sin(x * y)",
            "2 * y / (1 + x ^ 2 + y ^ 2)",
            "exp(-x) * cos(2 * pi * y) + x ^ 0.5",
            "-(x - y) ^ 2",
        ];
        let p = [0.7, -0.4];
        for s in srcs {
            let e = parse(s, &["x", "y"]).unwrap();
            for var in 0..2 {
                let d = e.derivative(var).eval(&p);
                let h = 1e-5;
                let mut a = p;
                let mut b = p;
                a[var] += h;
                b[var] -= h;
                let fd = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-8 * (1.0 + d.abs()), "{s} d/d{var}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn derivative_of_constant_in_a_variable_is_exact_zero() {
        let e = parse("3 * x + sin(x)", &["x", "y"]).unwrap();
        assert!(e.derivative(1).is_zero());
    }
}
