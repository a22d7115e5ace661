use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ffield::FieldElement;

/// Exponent tuple of a monomial. Ordered by total degree first, then
/// colexicographically (last position compared first, smaller entry wins).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Pure colexicographic comparison, e.g. (1,1,0) < (1,0,1) < (0,1,1).
    pub fn colex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        debug_assert_eq!(self.0.len(), other.0.len());
        for (a, b) in self.0.iter().rev().zip(other.0.iter().rev()) {
            match a.cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.colex_cmp(other))
    }
}

/// Coefficient ring abstraction shared by the field and rational phases.
pub trait Coeff: Clone + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse; the inverse of zero is zero.
    fn inv(&self) -> Self;
    fn render(&self) -> String;
}

impl Coeff for FieldElement {
    fn zero() -> Self {
        FieldElement::ZERO
    }
    fn one() -> Self {
        FieldElement::one()
    }
    fn is_zero(&self) -> bool {
        FieldElement::is_zero(*self)
    }
    fn add(&self, other: &Self) -> Self {
        *self + *other
    }
    fn sub(&self, other: &Self) -> Self {
        *self - *other
    }
    fn mul(&self, other: &Self) -> Self {
        *self * *other
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn inv(&self) -> Self {
        FieldElement::inv(*self)
    }
    fn render(&self) -> String {
        self.val().to_string()
    }
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Self {
        if Zero::is_zero(self) {
            Zero::zero()
        } else {
            self.recip()
        }
    }
    fn render(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

/// A multivariate polynomial stored as multi-index -> coefficient, with no
/// zero coefficients retained. Canonical term order is degree, then colex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparsePolynomial<C: Coeff> {
    pub n_vars: usize,
    pub terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> SparsePolynomial<C> {
    pub fn zero(n_vars: usize) -> Self {
        SparsePolynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: C) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(MultiIndex::zeros(n_vars), c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    /// Adds `c * z^idx`, removing the term if the sum cancels.
    pub fn add_term(&mut self, idx: MultiIndex, c: C) {
        debug_assert_eq!(idx.0.len(), self.n_vars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(idx) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, factor: &C) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.mul(factor));
        }
        out
    }

    /// Multiplies every term by z_var^k.
    pub fn mul_var_pow(&self, var: usize, k: u32) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (m, c) in &self.terms {
            let mut idx = m.clone();
            idx.0[var] += k;
            out.add_term(idx, c.clone());
        }
        out
    }

    pub fn evaluate(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.n_vars);
        // per-variable power tables up to the highest exponent present
        let mut max_exp = vec![0u32; self.n_vars];
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                max_exp[i] = max_exp[i].max(e);
            }
        }
        let tables: Vec<Vec<C>> = point
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut t = Vec::with_capacity(max_exp[i] as usize + 1);
                t.push(C::one());
                for k in 1..=max_exp[i] as usize {
                    let next = t[k - 1].mul(v);
                    t.push(next);
                }
                t
            })
            .collect();
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&tables[i][e as usize]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// P(z + s), expanded. Binomial coefficients are built additively so the
    /// expansion stays exact in any coefficient ring.
    pub fn shifted(&self, shift: &[C]) -> Self {
        assert_eq!(shift.len(), self.n_vars);
        let max_deg = self.total_degree().unwrap_or(0) as usize;
        let pascal = pascal_rows::<C>(max_deg);
        let mut out = Self::zero(self.n_vars);
        for (m, c) in &self.terms {
            // expansion of c * prod_i (z_i + s_i)^{a_i}
            let mut partial: Vec<(Vec<u32>, C)> = vec![(Vec::new(), c.clone())];
            for (i, &a) in m.0.iter().enumerate() {
                if shift[i].is_zero() || a == 0 {
                    for (exps, _) in &mut partial {
                        exps.push(a);
                    }
                    continue;
                }
                let mut s_pows = Vec::with_capacity(a as usize + 1);
                s_pows.push(C::one());
                for k in 1..=a as usize {
                    let next = s_pows[k - 1].mul(&shift[i]);
                    s_pows.push(next);
                }
                let row = &pascal[a as usize];
                let mut next_partial = Vec::with_capacity(partial.len() * (a as usize + 1));
                for (exps, coeff) in &partial {
                    for k in 0..=a {
                        let factor = row[k as usize].mul(&s_pows[(a - k) as usize]);
                        if factor.is_zero() {
                            continue;
                        }
                        let mut e = exps.clone();
                        e.push(k);
                        next_partial.push((e, coeff.mul(&factor)));
                    }
                }
                partial = next_partial;
            }
            for (exps, coeff) in partial {
                out.add_term(MultiIndex(exps), coeff);
            }
        }
        out
    }

    /// Splits the polynomial into its total-degree homogeneous parts.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n_vars, other.n_vars);
        let mut out = Self::zero(self.n_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let idx = MultiIndex(
                    ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect(),
                );
                out.add_term(idx, ca.mul(cb));
            }
        }
        out
    }

    /// Raises to a non-negative integer power by binary exponentiation.
    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::constant(self.n_vars, C::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn split_total_degree(&self) -> BTreeMap<u32, Self> {
        let mut out: BTreeMap<u32, Self> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.degree())
                .or_insert_with(|| Self::zero(self.n_vars))
                .add_term(m.clone(), c.clone());
        }
        out
    }

    /// Canonical rendering: terms in degree-then-colex order, each as
    /// `c*z1^a1*...`, joined with `+`/`-`. Round-trips through the
    /// expression parser.
    pub fn to_string_with(&self, vars: &[String]) -> String {
        assert_eq!(vars.len(), self.n_vars);
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let rendered = c.render();
            let (neg, mag) = match rendered.strip_prefix('-') {
                Some(rest) => (true, rest.to_string()),
                None => (false, rendered),
            };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str("-");
            } else {
                out.push_str("+");
            }
            // a unit coefficient is left implicit unless the term is constant
            let constant = m.0.iter().all(|&e| e == 0);
            let mut sep = if mag == "1" && !constant {
                ""
            } else {
                out.push_str(&mag);
                "*"
            };
            for (v, &e) in m.0.iter().enumerate() {
                if e == 1 {
                    let _ = write!(out, "{}{}", sep, vars[v]);
                } else if e > 1 {
                    let _ = write!(out, "{}{}^{}", sep, vars[v], e);
                } else {
                    continue;
                }
                sep = "*";
            }
        }
        out
    }
}

impl SparsePolynomial<FieldElement> {
    /// Maps a rational-coefficient polynomial into the ambient prime field.
    pub fn from_rational(poly: &SparsePolynomial<BigRational>) -> Self {
        let mut out = Self::zero(poly.n_vars);
        for (m, c) in &poly.terms {
            let num = FieldElement::from_bigint(c.numer());
            let den = FieldElement::from_bigint(c.denom());
            out.add_term(m.clone(), num / den);
        }
        out
    }
}

impl SparsePolynomial<BigRational> {
    /// True when every coefficient is an integer (used in diagnostics).
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.denom().is_one())
    }

    pub fn map_abs_max(&self) -> BigInt {
        self.terms
            .values()
            .map(|c| c.numer().abs().max(c.denom().abs()))
            .max()
            .unwrap_or_else(Zero::zero)
    }
}

fn pascal_rows<C: Coeff>(max: usize) -> Vec<Vec<C>> {
    let mut rows: Vec<Vec<C>> = Vec::with_capacity(max + 1);
    rows.push(vec![C::one()]);
    for n in 1..=max {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        row.push(C::one());
        for k in 1..n {
            row.push(prev[k - 1].add(&prev[k]));
        }
        row.push(C::one());
        rows.push(row);
    }
    rows
}
