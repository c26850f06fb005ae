use std::ops::{Add, Mul};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::scalar::{field_from_u64, format_rational, simplest_between, Field, Rational};

/// Default absolute width of refined root brackets.
pub const DEFAULT_ROOT_PRECISION: f64 = 1e-12;

/// Dense univariate polynomial, coefficients by ascending degree.
///
/// The leading coefficient is nonzero unless the polynomial is zero, in
/// which case `coeffs` is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariatePolynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Field> UnivariatePolynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    /// Horner evaluation.
    pub fn eval(&self, t: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * t.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * field_from_u64::<T>(k as u64))
                .collect(),
        )
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// Euclidean division, `self = q * d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.coeffs.len() - 1;
        let lead = d.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![T::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone() / lead.clone();
            if c.is_zero() {
                continue;
            }
            for (j, dj) in d.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - c.clone() * dj.clone();
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = T::one() / self.leading();
        self.scale(&inv)
    }

    /// Monic greatest common divisor (exact fields only).
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

impl<T: Field> Add for &UnivariatePolynomial<T> {
    type Output = UnivariatePolynomial<T>;
    fn add(self, rhs: &UnivariatePolynomial<T>) -> UnivariatePolynomial<T> {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[T], i: usize| v.get(i).cloned().unwrap_or_else(T::zero);
        UnivariatePolynomial::new(
            (0..len)
                .map(|i| get(&self.coeffs, i) + get(&rhs.coeffs, i))
                .collect(),
        )
    }
}

impl<T: Field> Mul for &UnivariatePolynomial<T> {
    type Output = UnivariatePolynomial<T>;
    fn mul(self, rhs: &UnivariatePolynomial<T>) -> UnivariatePolynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return UnivariatePolynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        UnivariatePolynomial::new(out)
    }
}

/// A real root located to within the requested precision.
#[derive(Clone, Debug, PartialEq)]
pub struct RootApprox {
    pub lo: Rational,
    pub hi: Rational,
    /// Exact root when `exact`, otherwise the bracket midpoint.
    pub value: Rational,
    pub exact: bool,
}

/// Outcome of minimizing a univariate polynomial over the whole real line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum UnivariateMin {
    /// `value` is the exact polynomial value at `argmin`; `argmin` is exact
    /// when the minimizer is rational with a small denominator, otherwise
    /// within the root precision of the true minimizer.
    Bounded {
        #[serde(serialize_with = "ser_rational")]
        value: Rational,
        #[serde(serialize_with = "ser_rational")]
        argmin: Rational,
    },
    UnboundedBelow,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

impl UnivariateMin {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            UnivariateMin::Bounded { value, .. } => Some(value),
            UnivariateMin::UnboundedBelow => None,
        }
    }
}

fn sturm_sequence(p: &UnivariatePolynomial<Rational>) -> Vec<UnivariatePolynomial<Rational>> {
    let mut seq = vec![p.clone(), p.derivative()];
    while !seq.last().unwrap().is_zero() {
        let n = seq.len();
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
        if r.is_zero() {
            break;
        }
        seq.push(r.scale(&-Rational::one()));
    }
    if seq.last().unwrap().is_zero() {
        seq.pop();
    }
    seq
}

fn sign_variations(seq: &[UnivariatePolynomial<Rational>], t: &Rational) -> usize {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for p in seq {
        let v = p.eval(t);
        if v.is_zero() {
            continue;
        }
        let pos = v.is_positive();
        if prev.is_some_and(|s| s != pos) {
            count += 1;
        }
        prev = Some(pos);
    }
    count
}

/// All distinct real roots of `p`, isolated with Sturm sign-variation counts
/// and refined by bisection to bracket width `precision`.
///
/// Within each bracket the simplest rational is tried as an exact root, so
/// rational roots with small denominators come out exact.
pub fn real_roots(p: &UnivariatePolynomial<Rational>, precision: &Rational) -> Vec<RootApprox> {
    if p.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let sqfree = {
        let g = p.gcd(&p.derivative());
        p.div_rem(&g).0.monic()
    };
    let seq = sturm_sequence(&sqfree);

    // Cauchy bound: every root lies strictly inside (-bound, bound).
    let lead = sqfree.leading().abs();
    let bound = Rational::one()
        + sqfree
            .coeffs()
            .iter()
            .map(|c| c.abs() / lead.clone())
            .fold(Rational::zero(), |a, b| if b > a { b } else { a });

    let mut isolated = Vec::new();
    let mut stack = vec![(-bound.clone(), bound)];
    while let Some((lo, hi)) = stack.pop() {
        let count = sign_variations(&seq, &lo) - sign_variations(&seq, &hi);
        match count {
            0 => {}
            1 => isolated.push((lo, hi)),
            _ => {
                let mid = split_point(&sqfree, &lo, &hi);
                stack.push((mid.clone(), hi));
                stack.push((lo, mid));
            }
        }
    }
    isolated.sort_by(|a, b| a.0.cmp(&b.0));
    isolated
        .into_iter()
        .map(|(lo, hi)| refine(&sqfree, lo, hi, precision))
        .collect()
}

/// Midpoint of `(lo, hi)`, nudged off any root so Sturm counts stay valid.
fn split_point(p: &UnivariatePolynomial<Rational>, lo: &Rational, hi: &Rational) -> Rational {
    let two = Rational::from_integer(2.into());
    let width = hi - lo;
    let mut mid = (lo + hi) / &two;
    let mut step = width / Rational::from_integer(8.into());
    while p.eval(&mid).is_zero() {
        mid += &step;
        step /= &two;
    }
    mid
}

fn refine(
    p: &UnivariatePolynomial<Rational>,
    mut lo: Rational,
    mut hi: Rational,
    precision: &Rational,
) -> RootApprox {
    let two = Rational::from_integer(2.into());
    let mut lo_positive = p.eval(&lo).is_positive();
    loop {
        let candidate = simplest_between(&lo, &hi);
        if candidate > lo && p.eval(&candidate).is_zero() {
            return RootApprox {
                lo,
                hi,
                value: candidate,
                exact: true,
            };
        }
        if &hi - &lo <= *precision {
            let value = (&lo + &hi) / &two;
            return RootApprox {
                lo,
                hi,
                value,
                exact: false,
            };
        }
        let mid = (&lo + &hi) / &two;
        let v = p.eval(&mid);
        if v.is_zero() {
            return RootApprox {
                lo: mid.clone(),
                hi: mid.clone(),
                value: mid,
                exact: true,
            };
        }
        if v.is_positive() == lo_positive {
            lo = mid;
            lo_positive = v.is_positive();
        } else {
            hi = mid;
        }
    }
}

/// Global minimum of `q` over the real line with the default root precision.
pub fn global_min_univariate(q: &UnivariatePolynomial<Rational>) -> UnivariateMin {
    let precision = crate::scalar::rational_from_decimal_f64(DEFAULT_ROOT_PRECISION)
        .expect("finite constant");
    global_min_univariate_with(q, &precision)
}

/// Global minimum of `q`; candidates are the real roots of `q'`.
///
/// A constant polynomial is reported as `Bounded` with argmin `0`.
pub fn global_min_univariate_with(
    q: &UnivariatePolynomial<Rational>,
    precision: &Rational,
) -> UnivariateMin {
    let degree = match q.degree() {
        None => {
            return UnivariateMin::Bounded {
                value: Rational::zero(),
                argmin: Rational::zero(),
            }
        }
        Some(d) => d,
    };
    if degree == 0 {
        return UnivariateMin::Bounded {
            value: q.leading(),
            argmin: Rational::zero(),
        };
    }
    if degree % 2 == 1 || q.leading().is_negative() {
        return UnivariateMin::UnboundedBelow;
    }
    let mut best: Option<(Rational, Rational)> = None;
    for root in real_roots(&q.derivative(), precision) {
        let value = q.eval(&root.value);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, root.value));
        }
    }
    let (value, argmin) = best.expect("even degree polynomial with positive leading coefficient has a critical point");
    UnivariateMin::Bounded { value, argmin }
}
