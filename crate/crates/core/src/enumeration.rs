//! Enumeration of M-stationary points inside the box.
//!
//! Every support `I` with `|I| <= s` gets a grid of starting points, and the
//! restricted system `df/dx_i = 0 (i in I)` is solved by damped Newton
//! (Levenberg-Marquardt fallback). Solutions are snapped to their actual
//! support, merged within `dedupe_radius` and classified. Completeness is
//! probabilistic: a stationary point whose basin misses every start is lost.

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::polyfun::{real_roots, Polynomial};
use crate::scalar::{rational_from_decimal_f64, Rational, Real};
use crate::stationarity::{classify_point, PointClass, Problem, StationaryRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    /// Grid starts per support dimension (cell centres of a uniform grid).
    pub starts_per_axis: usize,
    pub max_iterations: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            starts_per_axis: 5,
            max_iterations: 100,
        }
    }
}

/// A support together with its starting points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportTask<F> {
    pub support: Vec<usize>,
    pub starts: Vec<Vec<F>>,
}

/// Where an enumerated point came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance<F> {
    pub scheduled_support: Vec<usize>,
    pub start: Vec<F>,
    pub iterations: usize,
    pub residual: F,
}

/// A converged solution of the restricted stationarity system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution<F> {
    pub point: Vec<F>,
    pub provenance: Provenance<F>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Local minimizers.
    pub r: usize,
    pub r_i: usize,
    pub r_ii: usize,
    pub n_degenerate: usize,
    pub n_higher: usize,
}

impl Counts {
    pub fn tally<'a, F: Real>(records: impl IntoIterator<Item = &'a StationaryRecord<F>>) -> Self {
        let mut c = Counts::default();
        for r in records {
            match r.class {
                PointClass::LocalMin => c.r += 1,
                PointClass::SaddleTypeI => c.r_i += 1,
                PointClass::SaddleTypeII => c.r_ii += 1,
                PointClass::HigherSaddle => c.n_higher += 1,
                PointClass::Degenerate => c.n_degenerate += 1,
                PointClass::NotStationary => {}
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult<F> {
    /// Sorted lexicographically by point.
    pub records: Vec<StationaryRecord<F>>,
    /// Parallel to `records`.
    pub provenance: Vec<Provenance<F>>,
    pub counts: Counts,
    pub supports_scheduled: usize,
    pub options: EnumerationOptions,
}

/// All supports of size exactly `s`. Smaller supports are reached only when
/// solution entries vanish, so this schedule alone can miss points with
/// fewer nonzeros; see [`enumerate_all_supports`].
pub fn enumerate_supports(n: usize, s: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(s).collect()
}

/// All supports of size at most `s`, by size and then lexicographically.
pub fn enumerate_all_supports(n: usize, s: usize) -> Vec<Vec<usize>> {
    (0..=s.min(n)).flat_map(|k| (0..n).combinations(k)).collect()
}

/// Cell centres of a `per_axis^|I|` grid over the box, zero off the support.
pub fn support_task<F: Real>(prob: &Problem<F>, support: &[usize], per_axis: usize) -> SupportTask<F> {
    let per_axis = per_axis.max(1);
    let axes: Vec<Vec<F>> = support
        .iter()
        .map(|&i| {
            let b = prob.bbox()[i];
            let h = (b.upper - b.lower) / F::from_usize(per_axis).unwrap();
            (0..per_axis)
                .map(|j| b.lower + h * (F::from_usize(j).unwrap() + F::lit(0.5)))
                .collect()
        })
        .collect();
    let starts = axes
        .iter()
        .map(|a| a.iter().copied())
        .multi_cartesian_product()
        .map(|vals| {
            let mut x = vec![F::zero(); prob.n()];
            for (&i, v) in support.iter().zip(vals) {
                x[i] = v;
            }
            x
        })
        .collect::<Vec<_>>();
    let starts = match support {
        [] => vec![vec![F::zero(); prob.n()]],
        [i] => {
            let mut starts = starts;
            starts.extend(axis_critical_points(prob, *i).into_iter().map(|v| {
                let mut x = vec![F::zero(); prob.n()];
                x[*i] = v;
                x
            }));
            starts
        }
        _ => {
            let mut starts = starts;
            starts.extend(residual_basins(prob, support, per_axis));
            starts
        }
    };
    SupportTask {
        support: support.to_vec(),
        starts,
    }
}

/// Real critical points of `f` along coordinate axis `i`, isolated exactly and
/// kept when inside the box. On one-dimensional supports these make the
/// start set complete.
fn axis_critical_points<F: Real>(prob: &Problem<F>, i: usize) -> Vec<F> {
    let origin = vec![Rational::zero(); prob.n()];
    let Ok(line) = prob.objective().restrict_axis(&origin, i) else {
        return Vec::new();
    };
    let precision = Rational::new(1.into(), BigInt::from(10u64).pow(9));
    let b = prob.bbox()[i];
    real_roots(&line.derivative(), &precision)
        .into_iter()
        .map(|r| F::from_rational(&r.value))
        .filter(|&v| b.contains(v))
        .collect()
}

/// Discrete local minima of `|g_I|^2` on a lattice four times finer than the
/// start grid (capped at 20000 nodes). They seed Newton in basins the coarse
/// grid misses.
fn residual_basins<F: Real>(prob: &Problem<F>, support: &[usize], per_axis: usize) -> Vec<Vec<F>> {
    let m = support.len();
    let cap = (20_000f64.powf(1.0 / m as f64)).floor() as usize;
    let fine = (4 * per_axis).min(cap).max(2);
    let total = fine.pow(m as u32);
    let coord = |i: usize, j: usize| {
        let b = prob.bbox()[i];
        let h = (b.upper - b.lower) / F::from_usize(fine).unwrap();
        b.lower + h * (F::from_usize(j).unwrap() + F::lit(0.5))
    };
    let point = |mut idx: usize| {
        let mut x = vec![F::zero(); prob.n()];
        for &i in support {
            x[i] = coord(i, idx % fine);
            idx /= fine;
        }
        x
    };
    let values: Vec<F> = (0..total)
        .map(|idx| {
            let x = point(idx);
            support.iter().fold(F::zero(), |acc, &i| {
                let g = prob.partial(i, &x);
                acc + g * g
            })
        })
        .collect();
    let mut out = Vec::new();
    for idx in 0..total {
        let v = values[idx];
        let mut stride = 1;
        let mut is_min = true;
        let mut strict = false;
        for _ in 0..m {
            let j = (idx / stride) % fine;
            for nb in [(j > 0).then(|| idx - stride), (j + 1 < fine).then(|| idx + stride)].into_iter().flatten() {
                is_min &= values[nb] >= v;
                strict |= values[nb] > v;
            }
            stride *= fine;
        }
        // flat plateaus carry no basin information
        if is_min && strict {
            out.push(point(idx));
        }
    }
    out
}

fn residual_on<F: Real>(prob: &Problem<F>, x: &[F], support: &[usize]) -> F {
    support
        .iter()
        .fold(F::zero(), |acc, &i| acc.max(prob.partial(i, x).abs()))
}

/// Newton with Levenberg-Marquardt fallback on `g_I(x) = 0`, `x` zero off `I`.
/// Returns the final point, iteration count and residual.
fn newton<F: Real>(prob: &Problem<F>, support: &[usize], start: &[F], max_iter: usize) -> (Vec<F>, usize, F) {
    let mut x = start.to_vec();
    let mut res = residual_on(prob, &x, support);
    if support.is_empty() {
        return (x, 0, res);
    }
    let target = prob.tol().grad_zero * F::lit(1e-3);
    let escape = prob
        .bbox()
        .iter()
        .fold(F::zero(), |a, b| a.max(b.lower.abs()).max(b.upper.abs()))
        * F::lit(10.0)
        + F::one();
    let mut nu = F::lit(1e-3);
    let mut iters = 0;
    let mut stalls = 0;
    while iters < max_iter && res > target {
        iters += 1;
        let g: Vec<F> = support.iter().map(|&i| prob.partial(i, &x)).collect();
        let h = prob.restricted_hessian(&x, support);
        let try_step = |d: &[F]| {
            let mut z = x.clone();
            for (&i, &di) in support.iter().zip(d) {
                z[i] = z[i] - di;
            }
            let r = residual_on(prob, &z, support);
            (z, r)
        };
        let mut accepted = None;
        if let Some(d) = solve(&h, &g) {
            let (z, r) = try_step(&d);
            if r < res {
                accepted = Some((z, r));
            }
        }
        if accepted.is_none() {
            // (J^T J + nu I) d = J^T g with J = H symmetric
            let m = support.len();
            let jtj: Vec<Vec<F>> = (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| (0..m).fold(F::zero(), |acc, k| acc + h[k][a] * h[k][b]))
                        .collect()
                })
                .collect();
            let jtg: Vec<F> = (0..m)
                .map(|a| (0..m).fold(F::zero(), |acc, k| acc + h[k][a] * g[k]))
                .collect();
            let scale = (0..m).fold(F::one(), |acc, a| acc.max(jtj[a][a]));
            for _ in 0..12 {
                let mut sys = jtj.clone();
                for (a, row) in sys.iter_mut().enumerate() {
                    row[a] = row[a] + nu * scale;
                }
                if let Some(d) = solve(&sys, &jtg) {
                    let (z, r) = try_step(&d);
                    if r < res {
                        accepted = Some((z, r));
                        nu = (nu * F::lit(0.1)).max(F::lit(1e-12));
                        break;
                    }
                }
                nu = nu * F::lit(10.0);
            }
        }
        match accepted {
            Some((z, r)) => {
                let moved = support
                    .iter()
                    .fold(F::zero(), |acc, &i| acc.max((z[i] - x[i]).abs()));
                x = z;
                res = r;
                if moved <= F::epsilon() * F::lit(4.0) * (F::one() + x.iter().fold(F::zero(), |a, v| a.max(v.abs()))) {
                    stalls += 1;
                    if stalls > 2 {
                        break;
                    }
                }
            }
            None => break,
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > escape) {
            break;
        }
    }
    (x, iters, res)
}

/// Converged solution from one start: Newton on `support`, then entries in
/// the zero band are snapped to zero and the point is polished on its actual
/// support. `None` if the residual stays above `grad_zero` or the point leaves the box.
fn solve_from<F: Real>(prob: &Problem<F>, support: &[usize], start: &[F], opts: &EnumerationOptions) -> Option<Solution<F>> {
    let tol = prob.tol();
    let (mut x, mut iters, mut res) = newton(prob, support, start, opts.max_iterations);
    if !(res <= tol.grad_zero) || x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let actual: Vec<usize> = support.iter().copied().filter(|&i| x[i].abs() > tol.zero_entry).collect();
    if actual.len() < support.len() {
        for &i in support {
            if !actual.contains(&i) {
                x[i] = F::zero();
            }
        }
        let (z, more, r) = newton(prob, &actual, &x, opts.max_iterations);
        if !(r <= tol.grad_zero) {
            return None;
        }
        x = z;
        iters += more;
        res = r;
    }
    if !prob.in_box(&x) {
        return None;
    }
    Some(Solution {
        point: x,
        provenance: Provenance {
            scheduled_support: support.to_vec(),
            start: start.to_vec(),
            iterations: iters,
            residual: res,
        },
    })
}

/// All converged solutions on one support, from every grid start (not deduplicated).
pub fn solve_on_support_with<F: Real>(prob: &Problem<F>, support: &[usize], opts: &EnumerationOptions) -> Result<Vec<Solution<F>>> {
    if support.len() > prob.s() {
        return Err(Error::Precondition(format!(
            "support of size {} exceeds s = {}",
            support.len(),
            prob.s()
        )));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= prob.n()) {
        return Err(Error::InvalidArgument(format!("support index {bad} out of range")));
    }
    let task = support_task(prob, support, opts.starts_per_axis);
    Ok(task
        .starts
        .iter()
        .filter_map(|s| solve_from(prob, &task.support, s, opts))
        .collect())
}

/// Distinct solution points on one support with default options.
pub fn solve_on_support<F: Real>(prob: &Problem<F>, support: &[usize]) -> Result<Vec<Vec<F>>> {
    let sols = solve_on_support_with(prob, support, &EnumerationOptions::default())?;
    Ok(dedupe(sols, prob.tol().dedupe_radius)
        .into_iter()
        .map(|s| s.point)
        .collect())
}

fn distance<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (&u, &v)| acc + (u - v) * (u - v))
        .sqrt()
}

fn lex_cmp<F: Real>(a: &[F], b: &[F]) -> std::cmp::Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.partial_cmp(v) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Greedy merge within `radius`, preferring smaller residuals; output sorted by point.
fn dedupe<F: Real>(mut sols: Vec<Solution<F>>, radius: F) -> Vec<Solution<F>> {
    sols.sort_by(|a, b| {
        a.provenance
            .residual
            .partial_cmp(&b.provenance.residual)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(&a.point, &b.point))
            .then_with(|| a.provenance.scheduled_support.cmp(&b.provenance.scheduled_support))
    });
    let mut kept: Vec<Solution<F>> = Vec::new();
    for s in sols {
        if kept.iter().all(|k| distance(&k.point, &s.point) >= radius) {
            kept.push(s);
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.point, &b.point));
    kept
}

pub fn enumerate_m_stationary<F: Real>(prob: &Problem<F>) -> Result<EnumerationResult<F>> {
    enumerate_m_stationary_with(prob, &EnumerationOptions::default())
}

/// Solve on every support of size at most `s` (in parallel), merge and classify.
/// The result does not depend on scheduling order.
pub fn enumerate_m_stationary_with<F: Real>(prob: &Problem<F>, opts: &EnumerationOptions) -> Result<EnumerationResult<F>> {
    let supports = enumerate_all_supports(prob.n(), prob.s());
    let per_support: Vec<Vec<Solution<F>>> = supports
        .par_iter()
        .map(|sup| solve_on_support_with(prob, sup, opts))
        .collect::<Result<_>>()?;
    let merged = dedupe(per_support.into_iter().flatten().collect(), prob.tol().dedupe_radius);
    let mut records = Vec::with_capacity(merged.len());
    let mut provenance = Vec::with_capacity(merged.len());
    for s in merged {
        let rec = classify_point(&s.point, prob)?;
        if rec.is_m_stationary {
            records.push(rec);
            provenance.push(s.provenance);
        }
    }
    Ok(EnumerationResult {
        counts: Counts::tally(&records),
        records,
        provenance,
        supports_scheduled: supports.len(),
        options: *opts,
    })
}

/// Adds `sum c_i x_i + sum_{i<=j} d_ij x_i x_j` with every coefficient drawn
/// uniformly from `epsilon * {-1, -1 + 10^-6, ..., 1}` by a seeded generator.
///
/// `epsilon` is read through its shortest decimal form, so `0.1` contributes
/// exact tenths. `epsilon = 0` returns the problem unchanged.
pub fn perturb_problem<F: Real>(prob: &Problem<F>, epsilon: f64, seed: u64) -> Result<Problem<F>> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "perturbation size must be finite and nonnegative, got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(prob.clone());
    }
    let n = prob.n();
    let eps = rational_from_decimal_f64(epsilon)?;
    let million = Rational::from_integer(1_000_000.into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Rational {
        let k: i64 = rng.gen_range(-1_000_000..=1_000_000);
        &eps * Rational::from_integer(k.into()) / &million
    };
    let mut extra = Polynomial::zero(n);
    for i in 0..n {
        extra = &extra + &Polynomial::variable(n, i).scale(&draw());
    }
    for i in 0..n {
        for j in i..n {
            let mut e = vec![0u32; n];
            e[i] += 1;
            e[j] += 1;
            extra = &extra + &Polynomial::monomial(n, e, draw());
        }
    }
    prob.with_objective(prob.objective() + &extra)
}
