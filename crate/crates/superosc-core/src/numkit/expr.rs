//! Power-law expression trees with exact rational exponents.
//!
//! The grammar (see [`parse_expr`]) covers what the coefficient functions of
//! the classification problems need: sums, products, rational-exponent powers,
//! and exponentials. Exponents are kept exact so differentiation never loses
//! the power-law structure.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::fp::{self, PowerMode};

/// Exact rational `num/den`, always stored reduced with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational with zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Rational {
            num: sign * num / g,
            den: sign.abs() * den.abs() / g,
        }
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == 1 && self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

}

impl core::ops::Add for Rational {
    type Output = Rational;
    fn add(self, other: Rational) -> Rational {
        Rational::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }
}

impl core::ops::Sub for Rational {
    type Output = Rational;
    fn sub(self, other: Rational) -> Rational {
        Rational::new(self.num * other.den - other.num * self.den, self.den * other.den)
    }
}

impl core::ops::Mul for Rational {
    type Output = Rational;
    fn mul(self, other: Rational) -> Rational {
        Rational::new(self.num * other.num, self.den * other.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Exact rational constant.
    Rat(Rational),
    /// Real constant (from decimal literals).
    Real(f64),
    /// Named variable.
    Var(String),
    /// n-ary sum.
    Sum(Vec<Expr>),
    /// n-ary product.
    Product(Vec<Expr>),
    /// Power with exact rational exponent.
    Pow(Box<Expr>, Rational),
    /// Exponential of a subexpression.
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprError {
    /// Syntax error at a byte position in the input.
    Syntax { pos: usize, msg: String },
    /// Exponent was not an integer or `int/int` rational.
    BadExponent { pos: usize },
    /// Evaluation left the real domain (negative base to a fractional power).
    Domain { what: String },
    /// Unknown variable encountered during evaluation.
    UnknownVar { name: String },
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::Syntax { pos, msg } => write!(f, "syntax error at byte {pos}: {msg}"),
            ExprError::BadExponent { pos } => {
                write!(f, "exponent at byte {pos} is not a rational int/int")
            }
            ExprError::Domain { what } => write!(f, "domain error: {what}"),
            ExprError::UnknownVar { name } => write!(f, "unknown variable `{name}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ExprError {}

impl Expr {
    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::Rat(Rational::new(n, d))
    }

    pub fn int(n: i64) -> Expr {
        Expr::Rat(Rational::integer(n))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn pow(self, num: i64, den: i64) -> Expr {
        Expr::Pow(Box::new(self), Rational::new(num, den))
    }

    pub fn negated(self) -> Expr {
        Expr::Product(alloc::vec![Expr::int(-1), self])
    }

    /// Evaluate with a single variable bound to `x`; fractional powers of
    /// negative bases are domain errors.
    pub fn eval(&self, var: &str, x: f64) -> Result<f64, ExprError> {
        self.eval_mode(var, x, PowerMode::PositiveBase)
    }

    /// Evaluate with an explicit [`PowerMode`] for fractional powers.
    pub fn eval_mode(&self, var: &str, x: f64, mode: PowerMode) -> Result<f64, ExprError> {
        match self {
            Expr::Rat(r) => Ok(r.to_f64()),
            Expr::Real(v) => Ok(*v),
            Expr::Var(name) => {
                if name == var {
                    Ok(x)
                } else {
                    Err(ExprError::UnknownVar { name: name.clone() })
                }
            }
            Expr::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval_mode(var, x, mode)?;
                }
                Ok(acc)
            }
            Expr::Product(factors) => {
                let mut acc = 1.0;
                for t in factors {
                    acc *= t.eval_mode(var, x, mode)?;
                }
                Ok(acc)
            }
            Expr::Pow(base, r) => {
                let b = base.eval_mode(var, x, mode)?;
                fp::powr(b, r.to_f64(), mode).ok_or(ExprError::Domain {
                    what: format!("{b}^({r})"),
                })
            }
            Expr::Exp(arg) => Ok(fp::exp(arg.eval_mode(var, x, mode)?)),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_zero())
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_one())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Rat(r) => {
                // negative constants print parenthesized so sums and products
                // stay inside the grammar; a/b is not in the grammar either,
                // so fractions print as a*b^(-1)
                let num = if r.num() < 0 {
                    alloc::format!("(-{})", -r.num())
                } else {
                    alloc::format!("{}", r.num())
                };
                if r.is_integer() {
                    write!(f, "{num}")
                } else {
                    write!(f, "{num}*{}^(-1)", r.den())
                }
            }
            Expr::Real(v) => {
                if *v < 0.0 {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Sum(terms) => {
                write!(f, "(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Expr::Product(factors) => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Expr::Pow(base, r) => write!(f, "({base})^({r})"),
            Expr::Exp(arg) => write!(f, "exp({arg})"),
        }
    }
}

/// Parse the expression grammar:
///
/// ```text
/// expr     := ['-'] term (('+'|'-') term)*
/// term     := factor ('*' factor)*
/// factor   := base ('^' '(' rational ')')?
/// base     := number | ident | '(' expr ')' | 'exp' '(' expr ')'
/// rational := int ('/' int)?
/// ```
///
/// The optional leading minus is a convenience superset of the published
/// grammar; it parses as multiplication by -1.
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Syntax {
            pos: p.pos,
            msg: "trailing input".to_string(),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.pos,
                msg: format!("expected `{}`", c as char),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let negate = self.eat(b'-');
        let mut terms = Vec::new();
        let first = self.term()?;
        terms.push(if negate { first.negated() } else { first });
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    terms.push(self.term()?.negated());
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = Vec::new();
        factors.push(self.factor()?);
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                factors.push(self.factor()?);
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            self.expect(b'(')?;
            let r = self.rational()?;
            self.skip_ws();
            self.expect(b')')?;
            Ok(Expr::Pow(Box::new(base), r))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.ident();
                if name == "exp" {
                    self.skip_ws();
                    self.expect(b'(')?;
                    let e = self.expr()?;
                    self.skip_ws();
                    self.expect(b')')?;
                    Ok(Expr::Exp(Box::new(e)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(ExprError::Syntax {
                pos: self.pos,
                msg: "expected number, identifier, `(` or `exp(`".to_string(),
            }),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let mut is_real = false;
        if self.peek() == Some(b'.') {
            is_real = true;
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if is_real {
            text.parse::<f64>()
                .map(Expr::Real)
                .map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: "bad number".to_string(),
                })
        } else {
            text.parse::<i64>()
                .map(Expr::int)
                .map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: "integer literal out of range".to_string(),
                })
        }
    }

    fn rational(&mut self) -> Result<Rational, ExprError> {
        let start = self.pos;
        let num = self.int()?;
        self.skip_ws();
        if self.eat(b'/') {
            self.skip_ws();
            let den = self.int()?;
            if den == 0 {
                return Err(ExprError::BadExponent { pos: start });
            }
            Ok(Rational::new(num, den))
        } else {
            Ok(Rational::integer(num))
        }
    }

    fn int(&mut self) -> Result<i64, ExprError> {
        let start = self.pos;
        let neg = self.eat(b'-');
        let digits_start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ExprError::BadExponent { pos: start });
        }
        let text = core::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
        let v: i64 = text.parse().map_err(|_| ExprError::BadExponent { pos: start })?;
        Ok(if neg { -v } else { v })
    }
}

/// Symbolic derivative of `e` with respect to `var`.
///
/// The result is lightly simplified (dropped zero terms, folded rational
/// constants) so repeated differentiation stays manageable.
pub fn diff_expr(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Rat(_) | Expr::Real(_) => Expr::int(0),
        Expr::Var(name) => {
            if name == var {
                Expr::int(1)
            } else {
                Expr::int(0)
            }
        }
        Expr::Sum(terms) => simplify_sum(terms.iter().map(|t| diff_expr(t, var)).collect()),
        Expr::Product(factors) => {
            let mut terms = Vec::new();
            for (i, fi) in factors.iter().enumerate() {
                let d = diff_expr(fi, var);
                if d.is_zero() {
                    continue;
                }
                let mut fs: Vec<Expr> = Vec::with_capacity(factors.len());
                for (j, fj) in factors.iter().enumerate() {
                    if i == j {
                        fs.push(d.clone());
                    } else {
                        fs.push(fj.clone());
                    }
                }
                terms.push(simplify_product(fs));
            }
            simplify_sum(terms)
        }
        Expr::Pow(base, r) => {
            let d = diff_expr(base, var);
            if d.is_zero() || r.is_zero() {
                return Expr::int(0);
            }
            let new_pow = Expr::Pow(base.clone(), *r - Rational::integer(1));
            simplify_product(alloc::vec![Expr::Rat(*r), new_pow, d])
        }
        Expr::Exp(arg) => {
            let d = diff_expr(arg, var);
            if d.is_zero() {
                return Expr::int(0);
            }
            simplify_product(alloc::vec![Expr::Exp(arg.clone()), d])
        }
    }
}

fn simplify_sum(terms: Vec<Expr>) -> Expr {
    let mut out = Vec::new();
    let mut rat = Rational::integer(0);
    for t in terms {
        match t {
            Expr::Sum(inner) => {
                for x in inner {
                    if let Expr::Rat(r) = x {
                        rat = rat + r;
                    } else if !x.is_zero() {
                        out.push(x);
                    }
                }
            }
            Expr::Rat(r) => rat = rat + r,
            other => {
                if !other.is_zero() {
                    out.push(other)
                }
            }
        }
    }
    if !rat.is_zero() {
        out.push(Expr::Rat(rat));
    }
    match out.len() {
        0 => Expr::int(0),
        1 => out.pop().unwrap(),
        _ => Expr::Sum(out),
    }
}

fn simplify_product(factors: Vec<Expr>) -> Expr {
    let mut out = Vec::new();
    let mut rat = Rational::integer(1);
    for t in factors {
        match t {
            Expr::Product(inner) => {
                for x in inner {
                    match x {
                        Expr::Rat(r) => rat = rat * r,
                        other => out.push(other),
                    }
                }
            }
            Expr::Rat(r) => rat = rat * r,
            other => out.push(other),
        }
    }
    if rat.is_zero() {
        return Expr::int(0);
    }
    if !rat.is_one() || out.is_empty() {
        out.insert(0, Expr::Rat(rat));
    }
    match out.len() {
        1 => out.pop().unwrap(),
        _ => {
            if out.len() == 2 && out[0].is_one() {
                out.pop().unwrap()
            } else {
                Expr::Product(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: f64) -> f64 {
        parse_expr(text).unwrap().eval("w", x).unwrap()
    }

    #[test]
    fn parse_trivia() {
        assert!((ev("2*w^(1/2)", 4.0) - 4.0).abs() < 1e-15);
        assert!((ev("w^(-2/3) + 1", 1.0) - 2.0).abs() < 1e-15);
        assert!((ev("exp(2*w)", 0.0) - 1.0).abs() < 1e-15);
        assert!((ev("-w + 3", 1.0) - 2.0).abs() < 1e-15);
        assert!((ev("2.5*w", 2.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn parse_reports_position() {
        match parse_expr("2*w^(1/2") {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse_expr("w^(x)"),
            Err(ExprError::BadExponent { .. })
        ));
    }

    #[test]
    fn print_reparse_is_evaluation_equivalent() {
        let samples = ["2*w^(1/2)", "w^(-2/3) + 1", "exp(2*w)*w - 3*w^(2)", "-w"];
        for s in samples {
            let e = parse_expr(s).unwrap();
            let printed = alloc::format!("{e}");
            let e2 = parse_expr(&printed).unwrap_or_else(|err| panic!("reparse `{printed}`: {err}"));
            for &x in &[0.3, 1.0, 2.7] {
                let a = e.eval("w", x).unwrap();
                let b = e2.eval("w", x).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{s} at {x}");
            }
        }
    }

    #[test]
    fn diff_basics() {
        // d/dw (w^2 + 3) = 2w
        let e = parse_expr("w^(2) + 3").unwrap();
        let d = diff_expr(&e, "w");
        for &x in &[0.5, 1.0, 4.0] {
            assert!((d.eval("w", x).unwrap() - 2.0 * x).abs() < 1e-14);
        }
        // d/dw w^(-2/3) at w=1 is -2/3
        let e = parse_expr("w^(-2/3)").unwrap();
        let d = diff_expr(&e, "w");
        assert!((d.eval("w", 1.0).unwrap() + 2.0 / 3.0).abs() < 1e-14);
        // chain rule through exp
        let e = parse_expr("exp(3*w)").unwrap();
        let d = diff_expr(&e, "w");
        let x = 0.4;
        assert!((d.eval("w", x).unwrap() - 3.0 * (3.0 * x).exp()).abs() < 1e-12);
    }

    #[test]
    fn fourth_derivative_matches_finite_differences() {
        // M(w) of the Duffing-Van der Pol construction at m=2, mu=1:
        // M = 1 + 9/8 * w^(-2)
        let m = parse_expr("1 + 9*8^(-1)*w^(-2)").unwrap();
        let mut d = m.clone();
        for _ in 0..4 {
            d = diff_expr(&d, "w");
        }
        let w = 1.0;
        let analytic = d.eval("w", w).unwrap();
        // Richardson-extrapolated central 5-point fourth-derivative stencil
        let f = |x: f64| m.eval("w", x).unwrap();
        let stencil = |h: f64| {
            (f(w - 2.0 * h) - 4.0 * f(w - h) + 6.0 * f(w) - 4.0 * f(w + h) + f(w + 2.0 * h))
                / h.powi(4)
        };
        let h = 1e-2;
        // the stencil's leading error is O(h^2)
        let fd = (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0;
        assert!(
            (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1.0),
            "analytic {analytic} vs fd {fd}"
        );
    }
}
