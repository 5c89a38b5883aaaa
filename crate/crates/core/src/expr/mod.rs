//! Immersion expression DSL: parsing, printing, and jet evaluation.
//!
//! Grammar (whitespace insignificant):
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?          // '^' binds tightest, right-assoc
//! unary  := '-'? atom
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ident  := 'u' digits | parameter-name
//! func   ∈ { exp, ln, sin, cos, atan, sqrt }
//! ```
//! Parameters are substituted as numeric constants at parse time. Only smooth
//! primitives are available, so jets of any order stay well defined on the
//! interior of the coordinate domain.

pub mod jet;

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub use jet::{Jet, JetSpace};

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("domain error in `{subexpr}`: {msg}")]
    Domain { subexpr: String, msg: String },
    #[error("requested derivative order {asked} exceeds jet order {have}")]
    OrderExceeded { asked: usize, have: usize },
    #[error("point dimension {got} does not match variable count {expect}")]
    PointDimension { got: usize, expect: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Atan,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan" => Func::Atan,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Abstract syntax tree over variables `u1..un` and numeric constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// zero-based variable index (`u1` is `Var(0)`)
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Apply(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn pow_int(self, k: i32) -> Expr {
        Expr::Pow(Box::new(self), Box::new(Expr::Num(k as f64)))
    }

    pub fn apply(f: Func, e: Expr) -> Expr {
        Expr::Apply(f, Box::new(e))
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::apply(Func::Exp, e)
    }

    pub fn ln(e: Expr) -> Expr {
        Expr::apply(Func::Ln, e)
    }

    pub fn sin(e: Expr) -> Expr {
        Expr::apply(Func::Sin, e)
    }

    pub fn cos(e: Expr) -> Expr {
        Expr::apply(Func::Cos, e)
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::apply(Func::Sqrt, e)
    }

    /// Largest variable index used, plus one.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Neg(a) | Expr::Apply(_, a) => a.max_var(),
        }
    }

    /// Shifts every variable index by `offset` (used when charts are glued
    /// into product charts).
    pub fn shift_vars(&self, offset: usize) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(i) => Expr::Var(i + offset),
            Expr::Add(a, b) => Expr::Add(Box::new(a.shift_vars(offset)), Box::new(b.shift_vars(offset))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.shift_vars(offset)), Box::new(b.shift_vars(offset))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.shift_vars(offset)), Box::new(b.shift_vars(offset))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.shift_vars(offset)), Box::new(b.shift_vars(offset))),
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.shift_vars(offset)), Box::new(b.shift_vars(offset))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.shift_vars(offset))),
            Expr::Apply(f, a) => Expr::Apply(*f, Box::new(a.shift_vars(offset))),
        }
    }

    /// Substitutes expressions for variables (`subs[i]` replaces `Var(i)`).
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(i) => subs[*i].clone(),
            Expr::Add(a, b) => Expr::Add(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(subs))),
            Expr::Apply(f, a) => Expr::Apply(*f, Box::new(a.substitute(subs))),
        }
    }

    /// Plain numeric evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => point[*i],
            Expr::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Expr::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Expr::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Expr::Div(a, b) => {
                let d = b.eval(point)?;
                if d == 0.0 {
                    return Err(ExprError::Domain {
                        subexpr: b.to_string(),
                        msg: "division by zero".into(),
                    });
                }
                a.eval(point)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval(point)?;
                let e = b.eval(point)?;
                if e.fract() != 0.0 && base <= 0.0 {
                    return Err(ExprError::Domain {
                        subexpr: self.to_string(),
                        msg: "non-integer power of a non-positive base".into(),
                    });
                }
                base.powf(e)
            }
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Apply(f, a) => {
                let x = a.eval(point)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(ExprError::Domain {
                                subexpr: self.to_string(),
                                msg: format!("ln of non-positive value {x}"),
                            });
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Atan => x.atan(),
                    Func::Sqrt => {
                        if x <= 0.0 {
                            return Err(ExprError::Domain {
                                subexpr: self.to_string(),
                                msg: format!("sqrt of non-positive value {x}"),
                            });
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }

    /// Evaluates the expression as a truncated Taylor jet at `point`.
    ///
    /// The coefficients of the result are exact Taylor coefficients
    /// `f_α = ∂^α f / α!` up to rounding.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet, ExprError> {
        let space = JetSpace::get(point.len(), order);
        self.eval_jet_in(&space, point)
    }

    pub fn eval_jet_in(&self, space: &std::sync::Arc<JetSpace>, point: &[f64]) -> Result<Jet, ExprError> {
        if point.len() != space.vars() {
            return Err(ExprError::PointDimension {
                got: point.len(),
                expect: space.vars(),
            });
        }
        Ok(match self {
            Expr::Num(v) => Jet::constant(space.clone(), *v),
            Expr::Var(i) => Jet::variable(space.clone(), *i, point[*i]),
            Expr::Add(a, b) => a.eval_jet_in(space, point)?.add(&b.eval_jet_in(space, point)?),
            Expr::Sub(a, b) => a.eval_jet_in(space, point)?.sub(&b.eval_jet_in(space, point)?),
            Expr::Mul(a, b) => a.eval_jet_in(space, point)?.mul(&b.eval_jet_in(space, point)?),
            Expr::Div(a, b) => {
                let den = b.eval_jet_in(space, point)?;
                if den.value() == 0.0 {
                    return Err(ExprError::Domain {
                        subexpr: b.to_string(),
                        msg: "division by zero".into(),
                    });
                }
                a.eval_jet_in(space, point)?.mul(&den.recip())
            }
            Expr::Pow(a, b) => {
                let base = a.eval_jet_in(space, point)?;
                let e = b.eval_jet_in(space, point)?;
                if e.is_constant() {
                    let p = e.value();
                    if p.fract() == 0.0 && p.abs() < 1e9 {
                        let k = p as i64;
                        if k >= 0 {
                            base.powi(k as u32)
                        } else {
                            if base.value() == 0.0 {
                                return Err(ExprError::Domain {
                                    subexpr: self.to_string(),
                                    msg: "negative power of zero".into(),
                                });
                            }
                            base.powi((-k) as u32).recip()
                        }
                    } else {
                        if base.value() <= 0.0 {
                            return Err(ExprError::Domain {
                                subexpr: self.to_string(),
                                msg: "non-integer power of a non-positive base".into(),
                            });
                        }
                        base.powf(p)
                    }
                } else {
                    // variable exponent: a^b = exp(b ln a), needs positive base
                    if base.value() <= 0.0 {
                        return Err(ExprError::Domain {
                            subexpr: self.to_string(),
                            msg: "variable power of a non-positive base".into(),
                        });
                    }
                    e.mul(&base.ln()).exp()
                }
            }
            Expr::Neg(a) => a.eval_jet_in(space, point)?.neg(),
            Expr::Apply(f, a) => {
                let x = a.eval_jet_in(space, point)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x.value() <= 0.0 {
                            return Err(ExprError::Domain {
                                subexpr: self.to_string(),
                                msg: format!("ln of non-positive value {}", x.value()),
                            });
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Atan => x.atan(),
                    Func::Sqrt => {
                        if x.value() <= 0.0 {
                            return Err(ExprError::Domain {
                                subexpr: self.to_string(),
                                msg: format!("sqrt of non-positive value {}", x.value()),
                            });
                        }
                        x.powf(0.5)
                    }
                }
            }
        })
    }
}

/// Extracts `∂^α f(point) = α! * coeff(α)` from a jet.
pub fn partial(j: &Jet, alpha: &[usize]) -> Result<f64, ExprError> {
    let total: usize = alpha.iter().sum();
    if total > j.order() {
        return Err(ExprError::OrderExceeded {
            asked: total,
            have: j.order(),
        });
    }
    let mut fact = 1.0f64;
    for &a in alpha {
        for k in 2..=a {
            fact *= k as f64;
        }
    }
    Ok(j.coeff(alpha) * fact)
}

// ---------------------------------------------------------------------------
// parser

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
    params: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            got => Err(ExprError::Syntax {
                pos: self.pos,
                msg: format!("expected `{}`, found {:?}", c as char, got.map(|g| g as char)),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?; // right-associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            got => Err(ExprError::Syntax {
                pos: self.pos,
                msg: format!("expected a number, identifier or `(`, found {:?}", got.map(|g| g as char)),
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        // optional exponent
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Expr::Num).map_err(|_| ExprError::Syntax {
            pos: start,
            msg: format!("invalid number literal `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        if let Some(f) = Func::from_name(&name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Apply(f, Box::new(arg)));
        }
        if let Some(rest) = name.strip_prefix('u') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let idx: usize = rest.parse().map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: format!("invalid variable `{name}`"),
                })?;
                if idx == 0 || idx > self.n {
                    return Err(ExprError::UnknownIdentifier { name, pos: start });
                }
                return Ok(Expr::Var(idx - 1));
            }
        }
        match self.params.get(&name) {
            Some(v) => Ok(Expr::Num(*v)),
            None => Err(ExprError::UnknownIdentifier { name, pos: start }),
        }
    }
}

/// Parses an expression over `u1..un`; named parameters are substituted as
/// constants.
pub fn parse(text: &str, n: usize, params: &BTreeMap<String, f64>) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        n,
        params,
    };
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Syntax {
            pos: p.pos,
            msg: format!("unexpected trailing input `{}`", &text[p.pos..]),
        });
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// printer (round-trippable)

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Apply(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8, rhs: bool) -> fmt::Result {
        let prec = self.precedence();
        let needs_paren = prec < parent || (prec == parent && rhs && matches!(self, Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) | Expr::Div(..)));
        if needs_paren {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    // negative literals print via unary minus to stay in-grammar
                    write!(f, "(-{:?})", -v)?;
                } else {
                    write!(f, "{v:?}")?;
                }
            }
            Expr::Var(i) => write!(f, "u{}", i + 1)?,
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1, false)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 1, true)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1, false)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 1, true)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2, false)?;
                write!(f, "*")?;
                b.fmt_prec(f, 2, true)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2, false)?;
                write!(f, "/")?;
                b.fmt_prec(f, 2, true)?;
            }
            Expr::Pow(a, b) => {
                // base must be an atom-level item to re-parse identically
                match a.as_ref() {
                    Expr::Num(_) | Expr::Var(_) | Expr::Apply(..) | Expr::Neg(..) => a.fmt_prec(f, 5, false)?,
                    _ => {
                        write!(f, "(")?;
                        a.fmt_prec(f, 0, false)?;
                        write!(f, ")")?;
                    }
                }
                write!(f, "^")?;
                match b.as_ref() {
                    Expr::Num(_) | Expr::Var(_) | Expr::Apply(..) | Expr::Neg(..) | Expr::Pow(..) => b.fmt_prec(f, 4, true)?,
                    _ => {
                        write!(f, "(")?;
                        b.fmt_prec(f, 0, false)?;
                        write!(f, ")")?;
                    }
                }
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                match a.as_ref() {
                    Expr::Num(_) | Expr::Var(_) | Expr::Apply(..) => a.fmt_prec(f, 5, false)?,
                    _ => {
                        write!(f, "(")?;
                        a.fmt_prec(f, 0, false)?;
                        write!(f, ")")?;
                    }
                }
            }
            Expr::Apply(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0, false)?;
                write!(f, ")")?;
            }
        }
        if needs_paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str, n: usize) -> Expr {
        parse(text, n, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn parse_basic_shapes() {
        assert_eq!(
            p("u1^2 + u2", 2),
            Expr::Add(
                Box::new(Expr::Pow(Box::new(Expr::Var(0)), Box::new(Expr::Num(2.0)))),
                Box::new(Expr::Var(1))
            )
        );
        assert_eq!(
            p("exp(u1)*sin(u2)", 2),
            Expr::Mul(
                Box::new(Expr::apply(Func::Exp, Expr::Var(0))),
                Box::new(Expr::apply(Func::Sin, Expr::Var(1)))
            )
        );
    }

    #[test]
    fn out_of_range_variable() {
        let err = parse("u3 + 1", 2, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, ExprError::UnknownIdentifier { name, .. } if name == "u3"));
    }

    #[test]
    fn params_substituted() {
        let mut params = BTreeMap::new();
        params.insert("alpha".to_string(), 2.5);
        let e = parse("alpha * u1", 1, &params).unwrap();
        assert_eq!(e, Expr::Mul(Box::new(Expr::Num(2.5)), Box::new(Expr::Var(0))));
    }

    #[test]
    fn pow_right_associative_and_tight() {
        // 2^3^2 = 2^(3^2) = 512
        let e = p("2^3^2", 1);
        assert!((e.eval(&[0.0]).unwrap() - 512.0).abs() < 1e-12);
        // '*' binds looser than '^'
        let e = p("2*u1^3", 1);
        assert!((e.eval(&[2.0]).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn jet_examples() {
        let e = p("u1^2", 1);
        let j = e.eval_jet(&[3.0], 2).unwrap();
        assert!((j.coeff(&[0]) - 9.0).abs() < 1e-13);
        assert!((j.coeff(&[1]) - 6.0).abs() < 1e-13);
        assert!((j.coeff(&[2]) - 1.0).abs() < 1e-13);

        let e = p("exp(u1)", 1);
        let j = e.eval_jet(&[0.0], 3).unwrap();
        for (k, expect) in [(0usize, 1.0), (1, 1.0), (2, 0.5), (3, 1.0 / 6.0)] {
            assert!((j.coeff(&[k]) - expect).abs() < 1e-14);
        }

        let e = p("u1*u2", 2);
        let j = e.eval_jet(&[2.0, 5.0], 2).unwrap();
        assert!((j.coeff(&[0, 0]) - 10.0).abs() < 1e-13);
        assert!((j.coeff(&[1, 0]) - 5.0).abs() < 1e-13);
        assert!((j.coeff(&[0, 1]) - 2.0).abs() < 1e-13);
        assert!((j.coeff(&[1, 1]) - 1.0).abs() < 1e-13);
        assert!(j.coeff(&[2, 0]).abs() < 1e-13);
        assert!(j.coeff(&[0, 2]).abs() < 1e-13);
    }

    #[test]
    fn partial_examples() {
        let j = p("u1^2", 1).eval_jet(&[3.0], 2).unwrap();
        assert!((partial(&j, &[2]).unwrap() - 2.0).abs() < 1e-13);
        let j = p("exp(u1)", 1).eval_jet(&[0.0], 3).unwrap();
        assert!((partial(&j, &[3]).unwrap() - 1.0).abs() < 1e-13);
        let j = p("u1*u2", 2).eval_jet(&[2.0, 5.0], 2).unwrap();
        assert!((partial(&j, &[1, 1]).unwrap() - 1.0).abs() < 1e-13);
        assert!(matches!(
            partial(&j, &[2, 1]),
            Err(ExprError::OrderExceeded { .. })
        ));
    }

    #[test]
    fn domain_errors_carry_subexpression() {
        let e = p("ln(u1 - 2)", 1);
        let err = e.eval_jet(&[1.0], 2).unwrap_err();
        match err {
            ExprError::Domain { subexpr, .. } => assert!(subexpr.contains("ln")),
            other => panic!("unexpected error {other:?}"),
        }
        let e = p("sqrt(u1)", 1);
        assert!(e.eval_jet(&[-1.0], 2).is_err());
    }

    #[test]
    fn variable_exponent_needs_positive_base() {
        let e = p("u1^u2", 2);
        assert!(e.eval_jet(&[2.0, 0.5], 2).is_ok());
        assert!(e.eval_jet(&[-2.0, 0.5], 2).is_err());
        // integer constant exponent works on negative bases
        let e = p("u1^3", 1);
        let j = e.eval_jet(&[-2.0], 1).unwrap();
        assert!((j.value() + 8.0).abs() < 1e-13);
    }

    #[test]
    fn printer_round_trip_structural() {
        for src in [
            "u1^2 + u2",
            "exp(u1)*sin(u2)",
            "-u1^2",
            "1/(2*u1) - u1*(-ln(u1) + 0.5*ln(u2))",
            "(u1 + u2)^(u1 - 3)",
            "sqrt(1 - u1^2 - u2^2)",
            "2^3^2",
            "u1 - (u2 - 1) - u2/(u1/2)",
        ] {
            let e = p(src, 2);
            let printed = e.to_string();
            let e2 = p(&printed, 2);
            assert_eq!(e, e2, "round trip failed for `{src}` -> `{printed}`");
        }
    }
}
