//! Expression front end: parses rational-function text over named
//! variables into an AST that evaluates over the ambient prime field, over
//! exact rationals, or expands symbolically into a canonical
//! numerator/denominator pair.
//!
//! Grammar (explicit `*` required, no implicit multiplication):
//! `^` (right-associative, constant non-negative integer exponents) binds
//! tighter than unary `-`, which binds tighter than `*`/`/`, which bind
//! tighter than `+`/`-`; the binary operators are left-associative.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ffield::FieldElement;
use crate::polyint::{MultiIndex, SparsePolynomial};
use crate::ratint::RationalFunction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable {name:?} at position {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("negative exponent at position {pos}")]
    NegativeExponent { pos: usize },
    #[error("fractional exponent at position {pos}")]
    FractionalExponent { pos: usize },
    #[error("denominator is identically zero")]
    ZeroDenominator,
}

fn syntax(pos: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        pos,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

/// One-based character position of each token, for error messages.
fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push((Tok::Int(s.parse().expect("digit run")), pos));
                continue;
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
                continue;
            }
            other => return Err(syntax(pos, format!("unexpected character {other:?}"))),
        };
        out.push((tok, pos));
        i += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Int(BigInt),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    cursor: usize,
    vars: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.cursor).map(|(t, _)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.cursor += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    /// additive := multiplicative (('+'|'-') multiplicative)*
    fn additive(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.multiplicative()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.cursor += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.multiplicative()?));
                }
                Some(Tok::Minus) => {
                    self.cursor += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.multiplicative()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// multiplicative := unary (('*'|'/') unary)*
    fn multiplicative(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.cursor += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.cursor += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.cursor += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    /// power := atom ('^' exponent)?
    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.cursor += 1;
            let k = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    /// Exponents are compile-time constants: an integer literal or a
    /// parenthesized constant expression, with `^` chains applying
    /// right-associatively.
    fn exponent(&mut self) -> Result<u32, ExprError> {
        let pos = self.pos();
        let base: BigRational = match self.peek() {
            Some(Tok::Minus) => return Err(ExprError::NegativeExponent { pos }),
            Some(Tok::Int(_)) => {
                let Some(Tok::Int(n)) = self.bump() else {
                    unreachable!()
                };
                BigRational::from_integer(n)
            }
            Some(Tok::LParen) => {
                self.cursor += 1;
                let inner = self.additive()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                const_fold(&inner, pos)?
            }
            _ => return Err(syntax(pos, "expected integer exponent")),
        };
        let value = if self.peek() == Some(&Tok::Caret) {
            self.cursor += 1;
            let upper = self.exponent()?;
            num_traits::pow::pow(base, upper as usize)
        } else {
            base
        };
        exponent_value(&value, pos)
    }

    /// atom := INT | IDENT | '(' additive ')'
    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Int(n)),
            Some(Tok::Ident(name)) => match self.vars.iter().position(|v| *v == name) {
                Some(idx) => Ok(Expr::Var(idx)),
                None => Err(ExprError::UnknownVariable { pos, name }),
            },
            Some(Tok::LParen) => {
                let inner = self.additive()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some(other) => Err(syntax(pos, format!("unexpected token {other:?}"))),
            None => Err(syntax(pos, "unexpected end of input")),
        }
    }
}

/// Validates an exact exponent value: non-negative integer fitting u32.
fn exponent_value(value: &BigRational, pos: usize) -> Result<u32, ExprError> {
    if !value.denom().is_one() {
        return Err(ExprError::FractionalExponent { pos });
    }
    if value.numer().is_negative() {
        return Err(ExprError::NegativeExponent { pos });
    }
    value
        .numer()
        .to_u32()
        .ok_or_else(|| syntax(pos, "exponent too large"))
}

/// Exact evaluation of a constant (variable-free) subexpression.
fn const_fold(e: &Expr, pos: usize) -> Result<BigRational, ExprError> {
    match e {
        Expr::Int(n) => Ok(BigRational::from_integer(n.clone())),
        Expr::Var(_) => Err(syntax(pos, "exponent must be a constant")),
        Expr::Neg(a) => Ok(-const_fold(a, pos)?),
        Expr::Add(a, b) => Ok(const_fold(a, pos)? + const_fold(b, pos)?),
        Expr::Sub(a, b) => Ok(const_fold(a, pos)? - const_fold(b, pos)?),
        Expr::Mul(a, b) => Ok(const_fold(a, pos)? * const_fold(b, pos)?),
        Expr::Div(a, b) => {
            let d = const_fold(b, pos)?;
            if d.is_zero() {
                return Err(syntax(pos, "division by zero in constant exponent"));
            }
            Ok(const_fold(a, pos)? / d)
        }
        Expr::Pow(a, k) => Ok(num_traits::pow::pow(const_fold(a, pos)?, *k as usize)),
    }
}

/// A parsed rational-function expression over a fixed variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Expr,
    n_vars: usize,
}

impl Expression {
    pub fn parse(text: &str, vars: &[String]) -> Result<Self, ExprError> {
        let toks = lex(text)?;
        let mut parser = Parser {
            toks: &toks,
            cursor: 0,
            vars,
            end: text.chars().count() + 1,
        };
        let ast = parser.additive()?;
        if parser.cursor != toks.len() {
            return Err(syntax(parser.pos(), "trailing input"));
        }
        Ok(Expression {
            ast,
            n_vars: vars.len(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Evaluates over the ambient prime field; division by zero yields
    /// zero, matching the field convention.
    pub fn evaluate(&self, point: &[FieldElement]) -> FieldElement {
        assert_eq!(point.len(), self.n_vars);
        eval_field(&self.ast, point)
    }

    /// Exact rational evaluation; `None` when a division by zero occurs.
    pub fn evaluate_rational(&self, point: &[BigRational]) -> Option<BigRational> {
        assert_eq!(point.len(), self.n_vars);
        eval_rational(&self.ast, point)
    }

    /// Expands symbolically into a numerator/denominator pair, normalized
    /// by the canonical convention (no common-factor cancellation is
    /// attempted).
    pub fn to_rational_function(&self) -> Result<RationalFunction<BigRational>, ExprError> {
        let (num, den) = expand(&self.ast, self.n_vars);
        if den.is_zero() {
            return Err(ExprError::ZeroDenominator);
        }
        Ok(RationalFunction::new(num, den).normalize())
    }
}

fn eval_field(e: &Expr, point: &[FieldElement]) -> FieldElement {
    match e {
        Expr::Int(n) => FieldElement::from_bigint(n),
        Expr::Var(i) => point[*i],
        Expr::Neg(a) => -eval_field(a, point),
        Expr::Add(a, b) => eval_field(a, point) + eval_field(b, point),
        Expr::Sub(a, b) => eval_field(a, point) - eval_field(b, point),
        Expr::Mul(a, b) => eval_field(a, point) * eval_field(b, point),
        Expr::Div(a, b) => eval_field(a, point) / eval_field(b, point),
        Expr::Pow(a, k) => eval_field(a, point).pow(*k as u64),
    }
}

fn eval_rational(e: &Expr, point: &[BigRational]) -> Option<BigRational> {
    match e {
        Expr::Int(n) => Some(BigRational::from_integer(n.clone())),
        Expr::Var(i) => Some(point[*i].clone()),
        Expr::Neg(a) => Some(-eval_rational(a, point)?),
        Expr::Add(a, b) => Some(eval_rational(a, point)? + eval_rational(b, point)?),
        Expr::Sub(a, b) => Some(eval_rational(a, point)? - eval_rational(b, point)?),
        Expr::Mul(a, b) => Some(eval_rational(a, point)? * eval_rational(b, point)?),
        Expr::Div(a, b) => {
            let d = eval_rational(b, point)?;
            if d.is_zero() {
                return None;
            }
            Some(eval_rational(a, point)? / d)
        }
        Expr::Pow(a, k) => Some(num_traits::pow::pow(eval_rational(a, point)?, *k as usize)),
    }
}

/// Symbolic expansion as a (numerator, denominator) polynomial pair.
fn expand(
    e: &Expr,
    n: usize,
) -> (SparsePolynomial<BigRational>, SparsePolynomial<BigRational>) {
    let one = || SparsePolynomial::constant(n, BigRational::one());
    match e {
        Expr::Int(c) => (
            SparsePolynomial::constant(n, BigRational::from_integer(c.clone())),
            one(),
        ),
        Expr::Var(i) => {
            let mut exps = vec![0u32; n];
            exps[*i] = 1;
            let mut p = SparsePolynomial::zero(n);
            p.add_term(MultiIndex(exps), BigRational::one());
            (p, one())
        }
        Expr::Neg(a) => {
            let (na, da) = expand(a, n);
            (na.scale(&-BigRational::one()), da)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (na, da) = expand(a, n);
            let (nb, db) = expand(b, n);
            let cross = nb.mul(&da);
            let lhs = na.mul(&db);
            let num = if matches!(e, Expr::Add(..)) {
                lhs.add(&cross)
            } else {
                lhs.sub(&cross)
            };
            (num, da.mul(&db))
        }
        Expr::Mul(a, b) => {
            let (na, da) = expand(a, n);
            let (nb, db) = expand(b, n);
            (na.mul(&nb), da.mul(&db))
        }
        Expr::Div(a, b) => {
            let (na, da) = expand(a, n);
            let (nb, db) = expand(b, n);
            (na.mul(&db), da.mul(&nb))
        }
        Expr::Pow(a, k) => {
            let (na, da) = expand(a, n);
            (na.pow(*k), da.pow(*k))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::prime_scope;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn fe(n: u64) -> FieldElement {
        FieldElement::new(n)
    }

    #[test]
    fn worked_example_parses_and_evaluates() {
        let _s = prime_scope(509);
        let e = Expression::parse(
            "(3*z1+7*z2)/(z1+z2+4*z1*z2)",
            &vars(&["z1", "z2"]),
        )
        .unwrap();
        // (3 + 70)/(1 + 10 + 40) = 73/51 = 73*10 = 221 mod 509
        assert_eq!(e.evaluate(&[fe(1), fe(10)]), fe(221));
        assert_eq!(e.evaluate(&[fe(7)][..1].repeat(2).as_slice()), {
            let n = fe(3) * fe(7) + fe(7) * fe(7);
            let d = fe(7) + fe(7) + fe(4) * fe(7) * fe(7);
            n / d
        });
    }

    #[test]
    fn single_variable_is_identity() {
        let _s = prime_scope(509);
        let e = Expression::parse("z1", &vars(&["z1"])).unwrap();
        assert_eq!(e.evaluate(&[fe(7)]), fe(7));
    }

    #[test]
    fn negative_exponent_is_rejected() {
        let err = Expression::parse("z1^-1", &vars(&["z1"])).unwrap_err();
        assert!(matches!(err, ExprError::NegativeExponent { pos: 4 }));
    }

    #[test]
    fn fractional_exponent_is_rejected() {
        let err = Expression::parse("z1^(1/2)", &vars(&["z1"])).unwrap_err();
        assert!(matches!(err, ExprError::FractionalExponent { .. }));
    }

    #[test]
    fn unknown_variable_reports_name_and_position() {
        let err = Expression::parse("z1+q3", &vars(&["z1"])).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownVariable {
                pos: 4,
                name: "q3".into()
            }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = Expression::parse("z1+*z1", &vars(&["z1"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { pos: 4, .. }));
        let err = Expression::parse("(z1", &vars(&["z1"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { .. }));
        // implicit multiplication is not part of the grammar
        let err = Expression::parse("2 z1", &vars(&["z1"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { .. }));
    }

    #[test]
    fn big_literal_survives_at_full_precision() {
        let text = "123456789109898799879870980*(1+z1)";
        let e = Expression::parse(text, &vars(&["z1"])).unwrap();
        let c: BigInt = "123456789109898799879870980".parse().unwrap();
        let got = e
            .evaluate_rational(&[BigRational::one()])
            .unwrap();
        assert_eq!(got, BigRational::from_integer(c.clone() * 2));
        let _s = prime_scope(509);
        let expected = FieldElement::from_bigint(&(c * 2));
        assert_eq!(e.evaluate(&[fe(1)]), expected);
    }

    #[test]
    fn precedence_and_associativity() {
        let v = vars(&["z1"]);
        let _s = prime_scope(509);
        // ^ binds tighter than unary minus: -2^2 = -4
        let e = Expression::parse("-2^2", &v).unwrap();
        assert_eq!(e.evaluate_rational(&[BigRational::one()]).unwrap(),
            BigRational::from_integer((-4).into()));
        // ^ chains right-associatively: 2^3^2 = 2^9 = 512
        let e = Expression::parse("2^3^2", &v).unwrap();
        assert_eq!(e.evaluate_rational(&[BigRational::one()]).unwrap(),
            BigRational::from_integer(512.into()));
        // / and * are left-associative: 8/4*2 = 4, 8-4-2 = 2
        let e = Expression::parse("8/4*2", &v).unwrap();
        assert_eq!(e.evaluate_rational(&[BigRational::one()]).unwrap(),
            BigRational::from_integer(4.into()));
        let e = Expression::parse("8-4-2", &v).unwrap();
        assert_eq!(e.evaluate_rational(&[BigRational::one()]).unwrap(),
            BigRational::from_integer(2.into()));
    }

    #[test]
    fn field_division_by_zero_yields_zero() {
        let _s = prime_scope(509);
        let e = Expression::parse("1/z1", &vars(&["z1"])).unwrap();
        assert_eq!(e.evaluate(&[fe(0)]), fe(0));
        assert_eq!(
            Expression::parse("1/z1", &vars(&["z1"]))
                .unwrap()
                .evaluate_rational(&[BigRational::zero()]),
            None
        );
    }

    #[test]
    fn symbolic_expansion_matches_canonical_rendering() {
        let v = vars(&["z1", "z2"]);
        let text = "(3*z1+7*z2)/(z1+z2+4*z1*z2)";
        let f = Expression::parse(text, &v)
            .unwrap()
            .to_rational_function()
            .unwrap();
        assert_eq!(f.render(&v), text);
        // parse -> render -> parse fixpoint on the canonical rendering
        let again = Expression::parse(&f.render(&v), &v)
            .unwrap()
            .to_rational_function()
            .unwrap();
        assert_eq!(again.render(&v), f.render(&v));
    }

    #[test]
    fn expansion_normalizes_by_lowest_denominator_monomial() {
        let v = vars(&["z1"]);
        let f = Expression::parse("(2*z1)/(4+2*z1)", &v)
            .unwrap()
            .to_rational_function()
            .unwrap();
        assert_eq!(f.render(&v), "(1/2*z1)/(1+1/2*z1)");
    }

    #[test]
    fn zero_denominator_is_detected() {
        let v = vars(&["z1"]);
        let err = Expression::parse("z1/(z1-z1)", &v)
            .unwrap()
            .to_rational_function()
            .unwrap_err();
        assert_eq!(err, ExprError::ZeroDenominator);
    }
}
