#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scno_core::enumeration::perturb_problem;
use scno_core::polyfun::{parse_polynomial, Polynomial};
use scno_core::stationarity::{Bounds, Problem, ToleranceSet};
use scno_core::Rational;

pub const SHIFTED_SQUARES: &str = "(x1-1)^2 + (x2-1)^2";
pub const LINEAR: &str = "x1 + x2";
pub const ROUND_BOWL: &str = "x1^2 + x2^2";
pub const SHIFTED_BOWL: &str = "(x1 - 1/10)^2 + (x2 - 1/10)^2";

pub fn problem(expr: &str, n: usize, s: usize, half_width: f64) -> Problem<f64> {
    Problem::new(
        n,
        s,
        parse_polynomial(expr, n).unwrap(),
        vec![Bounds::symmetric(half_width); n],
        ToleranceSet::default(),
    )
    .unwrap()
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

fn random_exps(rng: &mut ChaCha8Rng, n: usize, max_degree: u32) -> Vec<u32> {
    let degree = rng.gen_range(0..=max_degree);
    let mut e = vec![0u32; n];
    for _ in 0..degree {
        e[rng.gen_range(0..n)] += 1;
    }
    e
}

/// Random polynomial with up to `terms` monomials of degree at most `max_degree`
/// and coefficients in `{-20, ..., 20} / 8`.
pub fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, max_degree: u32, terms: usize) -> Polynomial<Rational> {
    let mut p = Polynomial::zero(n);
    for _ in 0..terms {
        let e = random_exps(rng, n, max_degree);
        let c = rat(rng.gen_range(-20..=20), 8);
        p = &p + &Polynomial::monomial(n, e, c);
    }
    p
}

/// Coercive quartic: `sum a_i x_i^4` with `a_i` in `[1/2, 3/2]` plus a few
/// random terms of degree at most 3, then a small seeded perturbation.
pub fn random_generic_problem(seed: u64, n: usize, s: usize) -> Problem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Polynomial::zero(n);
    for i in 0..n {
        let mut e = vec![0u32; n];
        e[i] = 4;
        f = &f + &Polynomial::monomial(n, e, rat(rng.gen_range(4..=12), 8));
    }
    let extra = rng.gen_range(n..=2 * n + 2);
    f = &f + &random_polynomial(&mut rng, n, 3, extra);
    let prob = Problem::new(n, s, f, vec![Bounds::symmetric(3.0); n], ToleranceSet::default()).unwrap();
    perturb_problem(&prob, 0.01, seed ^ 0x9e37_79b9).unwrap()
}

/// Random point with at most `s` nonzero entries in `[-2, 2]`, on a grid of
/// quarters half of the time so zero gradients and ties actually occur.
pub fn random_feasible_point(rng: &mut ChaCha8Rng, n: usize, s: usize) -> Vec<f64> {
    let k = rng.gen_range(0..=s);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut x = vec![0.0; n];
    let coarse = rng.gen_bool(0.5);
    for &i in &idx[..k] {
        x[i] = if coarse {
            rng.gen_range(1..=8) as f64 / 4.0 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        } else {
            rng.gen_range(-2.0..2.0)
        };
    }
    x
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}
