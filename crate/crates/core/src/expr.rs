//! A small arithmetic expression language for coefficient fields.
//!
//! Grammar: numeric literals, variables `t` and `x1..xd`, binary `+ - * / ^`
//! (with `^` right-associative and binding tightest), unary minus, the
//! functions `sin cos exp abs`, and parentheses.

use std::fmt;

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    T,
    /// 1-based spatial coordinate, `x1..xd`.
    X(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn parse(text: &str) -> Result<Expr> {
        Parser::new(text)?.parse()
    }

    /// Whether evaluation reads the time variable.
    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == Var::T,
            Expr::Unary(_, e) => e.depends_on_t(),
            Expr::Binary(_, a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }

    /// Largest spatial coordinate index referenced, or 0.
    pub fn max_x_index(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(Var::X(i)) => *i,
            Expr::Var(Var::T) => 0,
            Expr::Unary(_, e) => e.max_x_index(),
            Expr::Binary(_, a, b) => a.max_x_index().max(b.max_x_index()),
        }
    }

    pub fn eval<S: Scalar>(&self, t: S, x: &[S]) -> Result<S> {
        match self {
            Expr::Num(v) => Ok(S::from_f64_c(*v)),
            Expr::Var(Var::T) => Ok(t),
            Expr::Var(Var::X(i)) => x
                .get(i - 1)
                .copied()
                .ok_or_else(|| Error::Expr(format!("unbound variable x{i} (dimension is {})", x.len()))),
            Expr::Unary(op, e) => {
                let v = e.eval(t, x)?;
                Ok(match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Abs => v.abs(),
                })
            }
            Expr::Binary(op, a, b) => {
                let va = a.eval(t, x)?;
                let vb = b.eval(t, x)?;
                let out = match op {
                    BinOp::Add => va + vb,
                    BinOp::Sub => va - vb,
                    BinOp::Mul => va * vb,
                    BinOp::Div => {
                        if vb == S::zero() {
                            return Err(Error::Expr("division by zero".into()));
                        }
                        va / vb
                    }
                    BinOp::Pow => pow(va, vb)?,
                };
                if !out.is_finite() {
                    return Err(Error::Expr("non-finite result".into()));
                }
                Ok(out)
            }
        }
    }
}

/// Integer exponents use repeated squaring so that negative bases are legal;
/// fractional exponents fall back to `powf` and demand a positive base.
fn pow<S: Scalar>(base: S, exponent: S) -> Result<S> {
    if exponent.fract() == S::zero() && exponent.abs() <= S::from_f64_c(1e9) {
        let e = exponent
            .to_f64()
            .map(|v| v as i32)
            .ok_or_else(|| Error::Expr("exponent out of range".into()))?;
        Ok(base.powi(e))
    } else if base > S::zero() {
        Ok(base.powf(exponent))
    } else {
        Err(Error::Expr(
            "fractional power of a non-positive base".into(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
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

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser> {
        let mut tokens = Vec::new();
        let bytes: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                ' ' | '\t' => i += 1,
                '+' => {
                    tokens.push(Token::Plus);
                    i += 1;
                }
                '-' => {
                    tokens.push(Token::Minus);
                    i += 1;
                }
                '*' => {
                    tokens.push(Token::Star);
                    i += 1;
                }
                '/' => {
                    tokens.push(Token::Slash);
                    i += 1;
                }
                '^' => {
                    tokens.push(Token::Caret);
                    i += 1;
                }
                '(' => {
                    tokens.push(Token::LParen);
                    i += 1;
                }
                ')' => {
                    tokens.push(Token::RParen);
                    i += 1;
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_digit()
                            || bytes[i] == '.'
                            || bytes[i] == 'e'
                            || bytes[i] == 'E'
                            || ((bytes[i] == '+' || bytes[i] == '-')
                                && i > start
                                && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                    {
                        i += 1;
                    }
                    let s: String = bytes[start..i].iter().collect();
                    let v = s
                        .parse::<f64>()
                        .map_err(|_| Error::Expr(format!("bad numeric literal '{s}'")))?;
                    tokens.push(Token::Num(v));
                }
                c if c.is_ascii_alphabetic() => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                        i += 1;
                    }
                    tokens.push(Token::Ident(bytes[start..i].iter().collect()));
                }
                other => return Err(Error::Expr(format!("unexpected character '{other}'"))),
            }
        }
        Ok(Parser { tokens, pos: 0 })
    }

    fn parse(mut self) -> Result<Expr> {
        let e = self.expr()?;
        if self.pos != self.tokens.len() {
            return Err(Error::Expr(format!(
                "trailing input at token {:?}",
                self.tokens[self.pos]
            )));
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            // right-associative; the exponent may carry a unary minus
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::Expr("expected ')'".into())),
                }
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Var(Var::T)),
                "sin" | "cos" | "exp" | "abs" => {
                    if !matches!(self.bump(), Some(Token::LParen)) {
                        return Err(Error::Expr(format!("expected '(' after {name}")));
                    }
                    let arg = self.expr()?;
                    if !matches!(self.bump(), Some(Token::RParen)) {
                        return Err(Error::Expr(format!("expected ')' closing {name}")));
                    }
                    let op = match name.as_str() {
                        "sin" => UnaryOp::Sin,
                        "cos" => UnaryOp::Cos,
                        "exp" => UnaryOp::Exp,
                        _ => UnaryOp::Abs,
                    };
                    Ok(Expr::Unary(op, Box::new(arg)))
                }
                _ => {
                    if let Some(idx) = name.strip_prefix('x') {
                        if let Ok(i) = idx.parse::<usize>() {
                            if i >= 1 {
                                return Ok(Expr::Var(Var::X(i)));
                            }
                        }
                    }
                    Err(Error::Expr(format!("unknown identifier '{name}'")))
                }
            },
            other => Err(Error::Expr(format!("unexpected token {other:?}"))),
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized normalized form; reparsing reproduces the AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X(i)) => write!(f, "x{i}"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(UnaryOp::Sin, e) => write!(f, "sin({e})"),
            Expr::Unary(UnaryOp::Cos, e) => write!(f, "cos({e})"),
            Expr::Unary(UnaryOp::Exp, e) => write!(f, "exp({e})"),
            Expr::Unary(UnaryOp::Abs, e) => write!(f, "abs({e})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}
