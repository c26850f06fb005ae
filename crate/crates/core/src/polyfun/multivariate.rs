use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::univariate::UnivariatePolynomial;
use crate::error::{Error, Result};
use crate::scalar::{field_from_u64, format_rational, parse_rational, Field, Rational, Real};

/// Exponent tuple of a monomial, one entry per variable.
pub type Monomial = Vec<u32>;

/// Sparse multivariate polynomial in `nvars` variables.
///
/// Terms are kept in a `BTreeMap` so iteration order (and therefore every
/// serialized form) is deterministic. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Field> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn variable(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Self::monomial(nvars, exps, T::one())
    }

    pub fn monomial(nvars: usize, exps: Monomial, c: T) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Self { nvars, terms }
    }

    /// Collects `(exponents, coefficient)` pairs, summing repeated monomials.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, T)>,
    {
        let mut p = Self::zero(nvars);
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: exps.len(),
                });
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Monomial, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&exps) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(exps, sum);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Coefficient of the given monomial (zero if absent).
    pub fn coeff(&self, exps: &[u32]) -> T {
        self.terms.get(exps).cloned().unwrap_or_else(T::zero)
    }

    /// Constant value, if the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<T> {
        match self.terms.len() {
            0 => Some(T::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, T::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> T {
        let mut total = T::zero();
        for (exps, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    term = term * num_traits::pow(xi.clone(), e as usize);
                }
            }
            total = total + term;
        }
        total
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.nvars);
        let mut out = Self::zero(self.nvars);
        for (exps, c) in &self.terms {
            let e = exps[i];
            if e == 0 {
                continue;
            }
            let mut de = exps.clone();
            de[i] -= 1;
            out.add_term(de, c.clone() * field_from_u64::<T>(e as u64));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Symmetric matrix of second partials.
    pub fn hessian(&self) -> Vec<Vec<Self>> {
        let grad = self.gradient();
        let n = self.nvars;
        let mut h: Vec<Vec<Self>> = vec![vec![Self::zero(n); n]; n];
        for i in 0..n {
            for j in i..n {
                let d = grad[i].partial(j);
                h[j][i] = d.clone();
                h[i][j] = d;
            }
        }
        h
    }

    /// `t -> p(base + t e_axis)` as an exact univariate polynomial.
    pub fn restrict_axis(&self, base: &[T], axis: usize) -> Result<UnivariatePolynomial<T>> {
        if base.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: base.len(),
            });
        }
        if axis >= self.nvars {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for {} variables",
                self.nvars
            )));
        }
        let shifted = UnivariatePolynomial::new(vec![base[axis].clone(), T::one()]);
        let mut powers: Vec<UnivariatePolynomial<T>> = vec![UnivariatePolynomial::constant(T::one())];
        let mut out = UnivariatePolynomial::zero();
        for (exps, c) in &self.terms {
            let mut factor = c.clone();
            for (j, (&e, xj)) in exps.iter().zip(base).enumerate() {
                if j != axis && e > 0 {
                    factor = factor * num_traits::pow(xj.clone(), e as usize);
                }
            }
            let e = exps[axis] as usize;
            while powers.len() <= e {
                let next = powers.last().unwrap() * &shifted;
                powers.push(next);
            }
            out = &out + &powers[e].scale(&factor);
        }
        Ok(out)
    }

    pub fn map_coeffs<U: Field>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }
}

impl Polynomial<Rational> {
    /// Nearest floating point image, for fast numeric evaluation.
    pub fn to_real<F: Real + Field>(&self) -> Polynomial<F> {
        self.map_coeffs(|c| F::from_rational(c))
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(e, c)| TermRecord {
                coeff: format_rational(c),
                exps: e.clone(),
            })
            .collect()
    }

    pub fn from_records(nvars: usize, records: &[TermRecord]) -> Result<Self> {
        let mut terms = Vec::with_capacity(records.len());
        for r in records {
            terms.push((r.exps.clone(), parse_rational(&r.coeff)?));
        }
        Self::from_terms(nvars, terms)
    }
}

/// One serialized term: `{"coeff": "num/den", "exps": [e1, ..., en]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff: String,
    pub exps: Vec<u32>,
}

/// Self-describing serialized polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialRecord {
    pub nvars: usize,
    pub terms: Vec<TermRecord>,
}

impl Serialize for Polynomial<Rational> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialRecord {
            nvars: self.nvars,
            terms: self.to_records(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial<Rational> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = PolynomialRecord::deserialize(deserializer)?;
        Polynomial::from_records(rec.nvars, &rec.terms).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Polynomial<Rational> {
    /// Renders in the expression grammar accepted by [`super::parse_polynomial`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest degree first reads naturally
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (idx, (exps, c)) in ordered.into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { '-' } else { '+' })?;
            }
            let vars: Vec<String> = exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, e)
                    }
                })
                .collect();
            let coeff = if mag.is_integer() {
                mag.numer().to_string()
            } else {
                format!("{}/{}", mag.numer(), mag.denom())
            };
            if vars.is_empty() {
                write!(f, "{coeff}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", coeff, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<T: Field> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<T: Field> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<T: Field> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<T: Field> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.map_coeffs(|c| -c.clone())
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl<T: Field> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $method(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

impl<T: Field> Neg for Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfun::parse_polynomial;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn qi(n: i64) -> Rational {
        q(n, 1)
    }

    fn poly(nvars: usize, text: &str) -> Polynomial<Rational> {
        parse_polynomial(text, nvars).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = poly(2, "(x1-1)^2 + (x2-1)^2");
        assert_eq!(p.eval(&[qi(0), qi(0)]).unwrap(), qi(2));
        let p = poly(2, "x1 + x2");
        assert_eq!(p.eval(&[qi(0), qi(0)]).unwrap(), qi(0));
        let z = Polynomial::<Rational>::zero(3);
        assert_eq!(z.eval(&[q(1, 3), qi(5), qi(-2)]).unwrap(), qi(0));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = poly(2, "x1 + x2");
        assert!(matches!(
            p.eval(&[qi(0)]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn gradient_examples() {
        let g = poly(2, "(x1-1)^2 + (x2-1)^2").gradient();
        assert_eq!(g[0], poly(2, "2*x1 - 2"));
        assert_eq!(g[1], poly(2, "2*x2 - 2"));
        let g = poly(2, "x1 + x2").gradient();
        assert_eq!(g[0], poly(2, "1"));
        assert_eq!(g[1], poly(2, "1"));
        let g = poly(3, "7/2").gradient();
        assert!(g.iter().all(|d| d.is_zero()));
    }

    #[test]
    fn hessian_examples() {
        let h = poly(2, "(x1-1)^2 + (x2-1)^2").hessian();
        assert_eq!(h[0][0], poly(2, "2"));
        assert_eq!(h[1][1], poly(2, "2"));
        assert!(h[0][1].is_zero() && h[1][0].is_zero());
        let h = poly(2, "x1 + x2").hessian();
        assert!(h.iter().flatten().all(|e| e.is_zero()));
        let h = poly(2, "x1^2*x2").hessian();
        assert_eq!(h[0][0], poly(2, "2*x2"));
        assert_eq!(h[0][1], poly(2, "2*x1"));
        assert_eq!(h[1][0], poly(2, "2*x1"));
        assert!(h[1][1].is_zero());
    }

    #[test]
    fn restrict_axis_examples() {
        let p = poly(2, "x1^2 + x2^2");
        let r = p.restrict_axis(&[qi(0), qi(0)], 0).unwrap();
        assert_eq!(r, UnivariatePolynomial::new(vec![qi(0), qi(0), qi(1)]));

        let p = poly(2, "(x1 - 1/10)^2 + (x2 - 1/10)^2");
        let r = p.restrict_axis(&[qi(0), qi(0)], 0).unwrap();
        // (t - 1/10)^2 + 1/100 = t^2 - t/5 + 2/100
        assert_eq!(r, UnivariatePolynomial::new(vec![q(2, 100), q(-1, 5), qi(1)]));

        let p = poly(3, "x1^3 + x1*x3 - 4");
        let base = [q(1, 2), qi(9), qi(2)];
        let r = p.restrict_axis(&base, 1).unwrap();
        assert_eq!(r.degree(), Some(0));
        assert_eq!(r.eval(&qi(123)), p.eval(&base).unwrap());
    }

    #[test]
    fn restrict_axis_rejects_bad_axis() {
        let p = poly(2, "x1");
        assert!(p.restrict_axis(&[qi(0), qi(0)], 2).is_err());
        assert!(p.restrict_axis(&[qi(0)], 0).is_err());
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = poly(2, "x1*x2 - x2*x1 + 3");
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.as_constant(), Some(qi(3)));
        let from = Polynomial::from_terms(2, vec![(vec![1, 0], qi(2)), (vec![1, 0], qi(-2))]).unwrap();
        assert!(from.is_zero());
        assert!(Polynomial::<Rational>::from_terms(2, vec![(vec![1], qi(1))]).is_err());
    }

    #[test]
    fn records_roundtrip() {
        let p = poly(3, "-3/4*x1^2*x3 + x2 - 5");
        let recs = p.to_records();
        assert!(recs.iter().any(|r| r.coeff == "-3/4" && r.exps == vec![2, 0, 1]));
        assert_eq!(Polynomial::from_records(3, &recs).unwrap(), p);
        let json = serde_json::to_string(&p).unwrap();
        let back: Polynomial<Rational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn display_is_parseable() {
        let p = poly(3, "-3/4*x1^2*x3 + x2 - 5 + x1*x2*x3");
        let text = p.to_string();
        assert_eq!(parse_polynomial(&text, 3).unwrap(), p);
        assert_eq!(Polynomial::<Rational>::zero(2).to_string(), "0");
    }
}
