//! Pointwise classification of feasible points: support, M-stationarity,
//! nondegeneracy (ND1/ND2), quadratic index and M-index, basic feasibility,
//! coordinate-wise minimality and a sampled local-minimality check.

use itertools::Itertools;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::polyfun::{global_min_univariate, Polynomial, UnivariateMin};
use crate::scalar::{Rational, Real};

/// Thresholds that replace exact-zero tests in floating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet<F> {
    /// `|x_i| <= zero_entry` counts as a zero entry.
    pub zero_entry: F,
    /// `|df/dx_i| <= grad_zero` counts as a vanishing partial derivative.
    pub grad_zero: F,
    /// Restricted Hessian eigenvalues with `|lambda| <= eig_zero` count as zero.
    pub eig_zero: F,
    /// Points closer than this are merged during enumeration.
    pub dedupe_radius: F,
}

impl<F: Real> Default for ToleranceSet<F> {
    /// 1e-9 / 1e-8 / 1e-8 / 1e-6, floored at `100 * epsilon` of the scalar type.
    fn default() -> Self {
        let floor = F::epsilon() * F::lit(100.0);
        let pick = |v: f64| F::lit(v).max(floor);
        Self {
            zero_entry: pick(1e-9),
            grad_zero: pick(1e-8),
            eig_zero: pick(1e-8),
            dedupe_radius: pick(1e-6),
        }
    }
}

impl<F: Real> ToleranceSet<F> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("zero_entry", self.zero_entry),
            ("grad_zero", self.grad_zero),
            ("eig_zero", self.eig_zero),
            ("dedupe_radius", self.dedupe_radius),
        ] {
            if !(v > F::zero() && v.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Closed coordinate interval of the bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds<F> {
    pub lower: F,
    pub upper: F,
}

impl<F: Real> Bounds<F> {
    pub fn new(lower: F, upper: F) -> Self {
        Self { lower, upper }
    }

    pub fn symmetric(half_width: F) -> Self {
        Self::new(-half_width, half_width)
    }

    pub fn contains(&self, v: F) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// An SCNO instance: `min f(x)` subject to `||x||_0 <= s`, analysed inside a box.
///
/// Floating point images of the objective, its gradient and Hessian are cached
/// at construction.
#[derive(Clone, Debug)]
pub struct Problem<F: Real> {
    n: usize,
    s: usize,
    objective: Polynomial<Rational>,
    bbox: Vec<Bounds<F>>,
    tol: ToleranceSet<F>,
    f_real: Polynomial<F>,
    grad_real: Vec<Polynomial<F>>,
    hess_real: Vec<Vec<Polynomial<F>>>,
}

impl<F: Real> Problem<F> {
    pub fn new(
        n: usize,
        s: usize,
        objective: Polynomial<Rational>,
        bbox: Vec<Bounds<F>>,
        tol: ToleranceSet<F>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("dimension n must be positive".into()));
        }
        if s >= n {
            return Err(Error::InvalidProblem(format!(
                "sparsity bound s = {s} must lie in 0..={}",
                n - 1
            )));
        }
        if objective.nvars() != n {
            return Err(Error::InvalidProblem(format!(
                "objective has {} variables, expected {n}",
                objective.nvars()
            )));
        }
        if bbox.len() != n {
            return Err(Error::InvalidProblem(format!(
                "box has {} intervals, expected {n}",
                bbox.len()
            )));
        }
        for (i, b) in bbox.iter().enumerate() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower <= b.upper) {
                return Err(Error::InvalidProblem(format!("box interval {i} is empty or not finite")));
            }
            if !b.contains(F::zero()) {
                return Err(Error::InvalidProblem(format!(
                    "box interval {i} = [{}, {}] does not contain 0",
                    b.lower, b.upper
                )));
            }
        }
        tol.validate()?;
        let f_real = objective.to_real::<F>();
        let grad_real: Vec<_> = objective.gradient().iter().map(|g| g.to_real::<F>()).collect();
        let hess_real = objective
            .hessian()
            .iter()
            .map(|row| row.iter().map(|h| h.to_real::<F>()).collect())
            .collect();
        Ok(Self {
            n,
            s,
            objective,
            bbox,
            tol,
            f_real,
            grad_real,
            hess_real,
        })
    }

    /// Same box, tolerances and sparsity bound with a different objective.
    pub fn with_objective(&self, objective: Polynomial<Rational>) -> Result<Self> {
        Self::new(self.n, self.s, objective, self.bbox.clone(), self.tol)
    }

    pub fn with_tolerances(&self, tol: ToleranceSet<F>) -> Result<Self> {
        Self::new(self.n, self.s, self.objective.clone(), self.bbox.clone(), tol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn objective(&self) -> &Polynomial<Rational> {
        &self.objective
    }

    pub fn bbox(&self) -> &[Bounds<F>] {
        &self.bbox
    }

    pub fn tol(&self) -> &ToleranceSet<F> {
        &self.tol
    }

    pub(crate) fn check_dim(&self, x: &[F]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[F]) -> F {
        self.f_real.eval_unchecked(x)
    }

    pub fn partial(&self, i: usize, x: &[F]) -> F {
        self.grad_real[i].eval_unchecked(x)
    }

    pub fn gradient(&self, x: &[F]) -> Vec<F> {
        self.grad_real.iter().map(|g| g.eval_unchecked(x)).collect()
    }

    pub fn hessian(&self, x: &[F]) -> Vec<Vec<F>> {
        self.hess_real
            .iter()
            .map(|row| row.iter().map(|h| h.eval_unchecked(x)).collect())
            .collect()
    }

    /// Hessian restricted to `idx x idx`.
    pub fn restricted_hessian(&self, x: &[F], idx: &[usize]) -> Vec<Vec<F>> {
        idx.iter()
            .map(|&i| idx.iter().map(|&j| self.hess_real[i][j].eval_unchecked(x)).collect())
            .collect()
    }

    pub fn in_box(&self, x: &[F]) -> bool {
        x.iter().zip(&self.bbox).all(|(&v, b)| b.contains(v))
    }
}

/// Zero / nonzero index sets of a point (zero-based indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportClassification {
    pub zero: Vec<usize>,
    pub nonzero: Vec<usize>,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nd1 {
    Holds,
    Fails,
    /// The sparsity constraint is active (`k = s`), so ND1 imposes nothing.
    Vacuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nd2 {
    Holds,
    Fails,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    LocalMin,
    /// M-index one with `k = s`, one negative Hessian eigenvalue.
    #[serde(rename = "saddle_type_1")]
    SaddleTypeI,
    /// M-index one with `k = s - 1`, positive definite restricted Hessian.
    #[serde(rename = "saddle_type_2")]
    SaddleTypeII,
    HigherSaddle,
    Degenerate,
    NotStationary,
}

/// Full classification of a point under every pointwise notion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryRecord<F> {
    pub point: Vec<F>,
    pub feasible: bool,
    pub support: SupportClassification,
    pub value: F,
    pub gradient: Vec<F>,
    pub is_m_stationary: bool,
    pub nd1: Nd1,
    pub nd2: Nd2,
    /// Ascending eigenvalues of the Hessian restricted to the support.
    pub restricted_hessian_eigenvalues: Vec<F>,
    pub qi: Option<usize>,
    pub m_index: Option<usize>,
    pub class: PointClass,
    pub tolerances: ToleranceSet<F>,
}

impl<F: Real> StationaryRecord<F> {
    pub fn is_nondegenerate(&self) -> bool {
        self.is_m_stationary && self.nd1 != Nd1::Fails && self.nd2 == Nd2::Holds
    }
}

pub fn classify_support<F: Real>(x: &[F], tol: &ToleranceSet<F>) -> SupportClassification {
    let (zero, nonzero): (Vec<usize>, Vec<usize>) =
        (0..x.len()).partition(|&i| x[i].abs() <= tol.zero_entry);
    let k = nonzero.len();
    SupportClassification { zero, nonzero, k }
}

pub fn is_feasible<F: Real>(x: &[F], prob: &Problem<F>) -> Result<bool> {
    prob.check_dim(x)?;
    Ok(classify_support(x, prob.tol()).k <= prob.s())
}

fn require_feasible<F: Real>(x: &[F], prob: &Problem<F>) -> Result<SupportClassification> {
    prob.check_dim(x)?;
    let sup = classify_support(x, prob.tol());
    if sup.k > prob.s() {
        return Err(Error::Infeasible {
            nonzeros: sup.k,
            s: prob.s(),
        });
    }
    Ok(sup)
}

fn grad_vanishes_on<F: Real>(grad: &[F], idx: &[usize], tol: F) -> bool {
    idx.iter().all(|&i| grad[i].abs() <= tol)
}

/// Partial derivatives vanish on the support.
pub fn is_m_stationary<F: Real>(x: &[F], prob: &Problem<F>) -> Result<bool> {
    let sup = require_feasible(x, prob)?;
    Ok(sup
        .nonzero
        .iter()
        .all(|&i| prob.partial(i, x).abs() <= prob.tol().grad_zero))
}

fn build_record<F: Real>(x: &[F], prob: &Problem<F>, sup: SupportClassification, feasible: bool) -> StationaryRecord<F> {
    let tol = prob.tol();
    let grad = prob.gradient(x);
    let is_m = feasible && grad_vanishes_on(&grad, &sup.nonzero, tol.grad_zero);
    let nd1 = if sup.k >= prob.s() {
        Nd1::Vacuous
    } else if sup.zero.iter().all(|&i| grad[i].abs() > tol.grad_zero) {
        Nd1::Holds
    } else {
        Nd1::Fails
    };
    let eig = symmetric_eigenvalues(&prob.restricted_hessian(x, &sup.nonzero));
    let nd2 = if eig.iter().all(|l| l.abs() > tol.eig_zero) {
        Nd2::Holds
    } else {
        Nd2::Fails
    };
    let (qi, m_index) = if is_m && nd2 == Nd2::Holds {
        let qi = eig.iter().filter(|&&l| l < -tol.eig_zero).count();
        (Some(qi), Some(prob.s() - sup.k + qi))
    } else {
        (None, None)
    };
    let class = if !is_m {
        PointClass::NotStationary
    } else if nd1 == Nd1::Fails || nd2 == Nd2::Fails {
        PointClass::Degenerate
    } else {
        match (m_index.unwrap(), prob.s() - sup.k, qi.unwrap()) {
            (0, _, _) => PointClass::LocalMin,
            (1, 0, 1) => PointClass::SaddleTypeI,
            (1, 1, 0) => PointClass::SaddleTypeII,
            _ => PointClass::HigherSaddle,
        }
    };
    StationaryRecord {
        point: x.to_vec(),
        feasible,
        value: prob.value(x),
        gradient: grad,
        support: sup,
        is_m_stationary: is_m,
        nd1,
        nd2,
        restricted_hessian_eigenvalues: eig,
        qi,
        m_index,
        class,
        tolerances: *tol,
    }
}

/// ND1/ND2, quadratic index, M-index and class of an M-stationary point.
///
/// An empty support gives an empty restricted Hessian, which counts as
/// nonsingular with quadratic index zero.
pub fn check_nondegeneracy<F: Real>(x: &[F], prob: &Problem<F>) -> Result<StationaryRecord<F>> {
    let sup = require_feasible(x, prob)?;
    let rec = build_record(x, prob, sup, true);
    if !rec.is_m_stationary {
        return Err(Error::NotMStationary);
    }
    Ok(rec)
}

/// Total version of [`check_nondegeneracy`]: any point of the right length
/// gets a record; infeasible or non-stationary points are labelled
/// [`PointClass::NotStationary`].
pub fn classify_point<F: Real>(x: &[F], prob: &Problem<F>) -> Result<StationaryRecord<F>> {
    prob.check_dim(x)?;
    let sup = classify_support(x, prob.tol());
    let feasible = sup.k <= prob.s();
    Ok(build_record(x, prob, sup, feasible))
}

/// BF1 (`k < s`): full gradient vanishes; BF2 (`k = s`): gradient vanishes on the support.
pub fn is_bf_vector<F: Real>(x: &[F], prob: &Problem<F>) -> Result<bool> {
    let sup = require_feasible(x, prob)?;
    let grad = prob.gradient(x);
    let tol = prob.tol().grad_zero;
    Ok(if sup.k < prob.s() {
        grad.iter().all(|g| g.abs() <= tol)
    } else {
        grad_vanishes_on(&grad, &sup.nonzero, tol)
    })
}

/// Exact rational image of `x` with entries inside the zero band set to zero.
fn snapped_rational<F: Real>(x: &[F], tol: &ToleranceSet<F>) -> Vec<Rational> {
    x.iter()
        .map(|&v| {
            if v.abs() <= tol.zero_entry {
                Rational::zero()
            } else {
                v.to_rational()
            }
        })
        .collect()
}

/// Coordinate-wise minimality, decided with exact univariate minimization.
///
/// `k < s`: `f(x)` is the minimum along every coordinate line through `x`.
/// `k = s`: no swap `x - x_i e_i + t e_j` (`i` in the support) does better;
/// a swap line that is unbounded below counts as a failure.
pub fn is_cw_minimum<F: Real>(x: &[F], prob: &Problem<F>) -> Result<bool> {
    let sup = require_feasible(x, prob)?;
    let f = prob.objective();
    let base = snapped_rational(x, prob.tol());
    let fx = f.eval(&base)?;
    let threshold = &fx - prob.tol().grad_zero.to_rational();
    let line_ok = |base: &[Rational], axis: usize| -> Result<bool> {
        let q = f.restrict_axis(base, axis)?;
        Ok(match global_min_univariate(&q) {
            UnivariateMin::Bounded { value, .. } => value >= threshold,
            UnivariateMin::UnboundedBelow => false,
        })
    };
    if sup.k < prob.s() {
        for axis in 0..prob.n() {
            if !line_ok(&base, axis)? {
                return Ok(false);
            }
        }
    } else {
        for &i in &sup.nonzero {
            let mut swapped = base.clone();
            swapped[i] = Rational::zero();
            for j in 0..prob.n() {
                if !line_ok(&swapped, j)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Supports `J` with `|J| <= s` that contain or are contained in `support`.
fn neighbouring_supports(n: usize, s: usize, support: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 0..=s {
        for j in (0..n).combinations(size) {
            let sup_in_j = support.iter().all(|i| j.contains(i));
            let j_in_sup = j.iter().all(|i| support.contains(i));
            if sup_in_j || j_in_sup {
                out.push(j);
            }
        }
    }
    out
}

/// Largest radius up to `cap` whose ball around `x` reaches neither a
/// coordinate hyperplane `x_i = 0` for `i` in the support nor, by more than
/// half the distance, any of the `others`. Local minimality is tested at this
/// scale, so neighbouring strata and critical points do not leak in.
pub fn local_sample_radius<F: Real>(x: &[F], tol: &ToleranceSet<F>, cap: F, others: &[Vec<F>]) -> F {
    let half = F::lit(0.5);
    let mut r = cap;
    for &v in x {
        if v.abs() > tol.zero_entry {
            r = r.min(v.abs() * half);
        }
    }
    for o in others {
        let d = x.iter().zip(o).fold(F::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        if d > tol.dedupe_radius {
            r = r.min(d * half);
        }
    }
    r
}

/// Sampled local-minimality test on the feasible set near `x`.
///
/// Feasible points within `radius` (sup norm) are drawn on every support
/// that contains or is contained in the support of `x`, since the feasible set
/// is a union of coordinate subspaces. Each support gets `samples` uniform
/// draws plus axis probes at `radius * {1, 1/10, 1/100}` in both directions.
/// Sampling is seeded, so the verdict is deterministic. Infeasible points
/// return `false`.
pub fn is_local_min_sampled<F: Real>(x: &[F], prob: &Problem<F>, radius: F, samples: usize) -> Result<bool> {
    prob.check_dim(x)?;
    if !(radius > F::zero()) {
        return Err(Error::InvalidArgument("sampling radius must be positive".into()));
    }
    let tol = prob.tol();
    let sup = classify_support(x, tol);
    if sup.k > prob.s() {
        return Ok(false);
    }
    let fx = prob.value(x);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5c70);
    let mut z = vec![F::zero(); x.len()];
    for j in neighbouring_supports(prob.n(), prob.s(), &sup.nonzero) {
        // coordinates of x outside J are dropped to zero; they must be within reach
        let reachable = sup
            .nonzero
            .iter()
            .filter(|i| !j.contains(i))
            .all(|&i| x[i].abs() <= radius);
        if !reachable {
            continue;
        }
        let mut base = vec![F::zero(); x.len()];
        for &i in &j {
            base[i] = x[i];
        }
        let check = |z: &[F]| prob.value(z) + tol.grad_zero >= fx;
        if !check(&base) {
            return Ok(false);
        }
        for &i in &j {
            for scale in [1.0, 0.1, 0.01] {
                for sign in [-1.0, 1.0] {
                    z.copy_from_slice(&base);
                    z[i] = z[i] + radius * F::lit(scale * sign);
                    if !check(&z) {
                        return Ok(false);
                    }
                }
            }
        }
        if j.is_empty() {
            continue;
        }
        for _ in 0..samples {
            z.copy_from_slice(&base);
            for &i in &j {
                let u: f64 = rng.gen_range(-1.0..=1.0);
                z[i] = z[i] + radius * F::lit(u);
            }
            if !check(&z) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
