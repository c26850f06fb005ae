//! The continuous relaxation
//!
//! ```text
//! min f(x)  s.t.  sum y_i >= n - s,  0 <= y_i <= 1,  x_i y_i = 0
//! ```
//!
//! in the variables `z = (x, y)`: S-stationarity, KKT multipliers with LICQ
//! and strict complementarity, and the CC second-order condition.
//!
//! KKT is written `grad f(z) = sum mu_j grad g_j + sum lambda_i grad h_i` with
//! `mu >= 0` on the budget and on `y_i >= 0`, and `mu <= 0` on `y_i <= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, numerical_rank, symmetric_eigenvalues};
use crate::stationarity::{
    check_nondegeneracy, classify_support, is_m_stationary, PointClass, Problem,
};
use crate::scalar::Real;

/// Index sets of a feasible pair `(x, y)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelaxedIndexSets {
    /// `x_i != 0`, `y_i = 0`.
    pub ipm0: Vec<usize>,
    /// `x_i = 0`, `y_i = 0`.
    pub i00: Vec<usize>,
    /// `x_i = 0`, `y_i = 1`.
    pub i01: Vec<usize>,
    /// `x_i = 0`, `0 < y_i < 1`.
    pub i0p: Vec<usize>,
}

impl RelaxedIndexSets {
    /// Indices where `d_x` is unconstrained in the CC-linearization cone.
    pub fn free(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.ipm0.iter().chain(&self.i00).copied().collect();
        f.sort_unstable();
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `sum y_i >= n - s`
    Budget,
    /// `y_i >= 0`
    LowerBound(usize),
    /// `y_i <= 1`
    UpperBound(usize),
    /// `x_i y_i = 0`
    Complementarity(usize),
}

impl ConstraintKind {
    pub fn is_inequality(&self) -> bool {
        !matches!(self, ConstraintKind::Complementarity(_))
    }

    /// Whether a multiplier has the sign the KKT system admits.
    fn admissible<F: Real>(&self, m: F, tol: F) -> bool {
        match self {
            ConstraintKind::Budget | ConstraintKind::LowerBound(_) => m >= -tol,
            ConstraintKind::UpperBound(_) => m <= tol,
            ConstraintKind::Complementarity(_) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveConstraint<F> {
    pub kind: ConstraintKind,
    /// Gradient in `z = (x, y)`, length `2n`.
    pub gradient: Vec<F>,
    pub multiplier: Option<F>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcSosc {
    HoldsTrivially,
    Holds,
    Fails,
}

impl CcSosc {
    pub fn holds(&self) -> bool {
        !matches!(self, CcSosc::Fails)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRecord<F> {
    pub x: Vec<F>,
    pub y: Vec<F>,
    pub index_sets: RelaxedIndexSets,
    pub is_s_stationary: bool,
    /// `gamma = -grad f(x)`, the unique solution of the stationarity equation.
    pub gamma: Vec<F>,
    pub active: Vec<ActiveConstraint<F>>,
    pub licq: bool,
    /// Multipliers of active inequalities in `active` order; present when LICQ holds.
    pub mu: Option<Vec<F>>,
    /// Multipliers of `x_i y_i = 0`, by index; present when LICQ holds.
    pub lambda: Option<Vec<F>>,
    pub kkt_residual: Option<F>,
    pub kkt_holds: bool,
    /// Every active inequality has a nonzero multiplier of admissible sign.
    /// Reported `false` when LICQ fails, since multipliers are then not unique.
    pub strict_complementarity: bool,
    /// Present when the pair is S-stationary.
    pub cc_sosc: Option<CcSosc>,
}

/// `y_i = 0` on the support of `x`, `1` elsewhere.
pub fn canonical_y<F: Real>(x: &[F], prob: &Problem<F>) -> Result<Vec<F>> {
    prob.check_dim(x)?;
    let sup = classify_support(x, prob.tol());
    if sup.k > prob.s() {
        return Err(Error::Infeasible {
            nonzeros: sup.k,
            s: prob.s(),
        });
    }
    let mut y = vec![F::one(); x.len()];
    for i in sup.nonzero {
        y[i] = F::zero();
    }
    Ok(y)
}

/// Feasibility of `(x, y)` for the relaxation and its index sets. Entries are
/// compared to `0`/`1` with the `zero_entry` tolerance.
pub fn relaxed_index_sets<F: Real>(x: &[F], y: &[F], prob: &Problem<F>) -> Result<RelaxedIndexSets> {
    prob.check_dim(x)?;
    prob.check_dim(y)?;
    let tol = prob.tol().zero_entry;
    let n = prob.n();
    let budget = F::from_usize(n - prob.s()).unwrap();
    let sum = y.iter().fold(F::zero(), |a, &v| a + v);
    if sum < budget - tol {
        return Err(Error::InfeasibleRelaxation(format!(
            "sum of y is {sum}, needs at least {budget}"
        )));
    }
    let mut sets = RelaxedIndexSets::default();
    for i in 0..n {
        if y[i] < -tol || y[i] > F::one() + tol {
            return Err(Error::InfeasibleRelaxation(format!("y[{i}] = {} outside [0, 1]", y[i])));
        }
        let x_zero = x[i].abs() <= tol;
        let y_zero = y[i].abs() <= tol;
        if !x_zero && !y_zero {
            return Err(Error::InfeasibleRelaxation(format!(
                "x[{i}] y[{i}] = {} is not zero",
                x[i] * y[i]
            )));
        }
        if !x_zero {
            sets.ipm0.push(i);
        } else if y_zero {
            sets.i00.push(i);
        } else if (y[i] - F::one()).abs() <= tol {
            sets.i01.push(i);
        } else {
            sets.i0p.push(i);
        }
    }
    Ok(sets)
}

/// The gradient of `f` vanishes on `I+-0` and `I00`.
pub fn is_s_stationary<F: Real>(x: &[F], y: &[F], prob: &Problem<F>) -> Result<bool> {
    let sets = relaxed_index_sets(x, y, prob)?;
    let g = prob.tol().grad_zero;
    Ok(sets.free().iter().all(|&i| prob.partial(i, x).abs() <= g))
}

/// M-stationarity of `x` agrees with S-stationarity at the canonical `y`.
pub fn m_s_roundtrip<F: Real>(x: &[F], prob: &Problem<F>) -> Result<bool> {
    let m = is_m_stationary(x, prob)?;
    let y = canonical_y(x, prob)?;
    Ok(m == is_s_stationary(x, &y, prob)?)
}

fn active_constraints<F: Real>(x: &[F], y: &[F], prob: &Problem<F>) -> Vec<ActiveConstraint<F>> {
    let n = prob.n();
    let tol = prob.tol().zero_entry;
    let unit = |k: usize| {
        let mut v = vec![F::zero(); 2 * n];
        v[k] = F::one();
        v
    };
    let mut out = Vec::new();
    let sum = y.iter().fold(F::zero(), |a, &v| a + v);
    if (sum - F::from_usize(n - prob.s()).unwrap()).abs() <= tol {
        let mut g = vec![F::zero(); 2 * n];
        for v in &mut g[n..] {
            *v = F::one();
        }
        out.push(ActiveConstraint {
            kind: ConstraintKind::Budget,
            gradient: g,
            multiplier: None,
        });
    }
    for i in 0..n {
        if y[i].abs() <= tol {
            out.push(ActiveConstraint {
                kind: ConstraintKind::LowerBound(i),
                gradient: unit(n + i),
                multiplier: None,
            });
        }
        if (y[i] - F::one()).abs() <= tol {
            out.push(ActiveConstraint {
                kind: ConstraintKind::UpperBound(i),
                gradient: unit(n + i),
                multiplier: None,
            });
        }
    }
    for i in 0..n {
        let mut g = vec![F::zero(); 2 * n];
        g[i] = y[i];
        g[n + i] = x[i];
        out.push(ActiveConstraint {
            kind: ConstraintKind::Complementarity(i),
            gradient: g,
            multiplier: None,
        });
    }
    out
}

/// Active set, LICQ, multipliers and strict complementarity at a feasible `(x, y)`.
///
/// With LICQ the multipliers are the unique least-squares solution, and KKT
/// holds when the residual is within `grad_zero` and every sign is admissible.
/// Without LICQ, KKT is decided through its equivalence with S-stationarity.
pub fn kkt_analysis<F: Real>(x: &[F], y: &[F], prob: &Problem<F>) -> Result<RelaxationRecord<F>> {
    let index_sets = relaxed_index_sets(x, y, prob)?;
    let tol = prob.tol();
    let n = prob.n();
    let grad = prob.gradient(x);
    let is_s = index_sets.free().iter().all(|&i| grad[i].abs() <= tol.grad_zero);
    let mut active = active_constraints(x, y, prob);

    let m = active.len();
    let licq = m <= 2 * n && {
        let rows: Vec<Vec<F>> = active.iter().map(|c| c.gradient.clone()).collect();
        numerical_rank(&rows, tol.eig_zero) == m
    };

    let mut target = grad.clone();
    target.extend(std::iter::repeat_n(F::zero(), n));

    let (mu, lambda, residual, kkt_holds, strict) = if licq {
        // columns are the active gradients
        let a: Vec<Vec<F>> = (0..2 * n)
            .map(|r| active.iter().map(|c| c.gradient[r]).collect())
            .collect();
        let coef = least_squares(&a, &target)
            .ok_or_else(|| Error::Numeric("multiplier system is singular despite LICQ".into()))?;
        let mut res = F::zero();
        for r in 0..2 * n {
            let fitted = (0..m).fold(F::zero(), |acc, j| acc + a[r][j] * coef[j]);
            res = res.max((fitted - target[r]).abs());
        }
        for (c, &v) in active.iter_mut().zip(&coef) {
            c.multiplier = Some(v);
        }
        let signs_ok = active
            .iter()
            .all(|c| c.kind.admissible(c.multiplier.unwrap(), tol.grad_zero));
        let strict = active
            .iter()
            .filter(|c| c.kind.is_inequality())
            .all(|c| {
                let v = c.multiplier.unwrap();
                v.abs() > tol.grad_zero && c.kind.admissible(v, F::zero())
            });
        let mu: Vec<F> = active
            .iter()
            .filter(|c| c.kind.is_inequality())
            .map(|c| c.multiplier.unwrap())
            .collect();
        let mut lambda = vec![F::zero(); n];
        for c in &active {
            if let ConstraintKind::Complementarity(i) = c.kind {
                lambda[i] = c.multiplier.unwrap();
            }
        }
        let holds = res <= tol.grad_zero && signs_ok;
        (Some(mu), Some(lambda), Some(res), holds, strict)
    } else {
        (None, None, None, is_s, false)
    };

    let cc_sosc = if is_s {
        Some(sosc_on(x, prob, &index_sets))
    } else {
        None
    };
    Ok(RelaxationRecord {
        x: x.to_vec(),
        y: y.to_vec(),
        index_sets,
        is_s_stationary: is_s,
        gamma: grad.iter().map(|&g| -g).collect(),
        active,
        licq,
        mu,
        lambda,
        kkt_residual: residual,
        kkt_holds,
        strict_complementarity: strict,
        cc_sosc,
    })
}

fn sosc_on<F: Real>(x: &[F], prob: &Problem<F>, sets: &RelaxedIndexSets) -> CcSosc {
    // d_y = 0 is always admissible, so the d_x-projection of the cone is the
    // coordinate subspace on I+-0 and I00
    let free = sets.free();
    if free.is_empty() {
        return CcSosc::HoldsTrivially;
    }
    let eig = symmetric_eigenvalues(&prob.restricted_hessian(x, &free));
    if eig[0] > prob.tol().eig_zero {
        CcSosc::Holds
    } else {
        CcSosc::Fails
    }
}

/// CC-SOSC at an S-stationary pair.
pub fn cc_sosc_check<F: Real>(x: &[F], y: &[F], prob: &Problem<F>) -> Result<CcSosc> {
    let sets = relaxed_index_sets(x, y, prob)?;
    let g = prob.tol().grad_zero;
    if !sets.free().iter().all(|&i| prob.partial(i, x).abs() <= g) {
        return Err(Error::NotSStationary);
    }
    Ok(sosc_on(x, prob, &sets))
}

/// Truth value of "CC-SOSC at the canonical `y` implies a nondegenerate local
/// minimizer". Only claimed when the sparsity constraint is active.
pub fn nondeg_from_sosc<F: Real>(x: &[F], prob: &Problem<F>) -> Result<bool> {
    let rec = check_nondegeneracy(x, prob)?;
    if rec.support.k != prob.s() {
        return Err(Error::Precondition(format!(
            "sparsity constraint inactive (k = {} < s = {})",
            rec.support.k,
            prob.s()
        )));
    }
    let y = canonical_y(x, prob)?;
    let sosc = cc_sosc_check(x, &y, prob)?;
    Ok(!sosc.holds() || rec.class == PointClass::LocalMin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfun::parse_polynomial;
    use crate::stationarity::{Bounds, ToleranceSet};
    use approx::assert_abs_diff_eq;

    fn problem(expr: &str, n: usize, s: usize) -> Problem<f64> {
        Problem::new(
            n,
            s,
            parse_polynomial(expr, n).unwrap(),
            vec![Bounds::symmetric(3.0); n],
            ToleranceSet::default(),
        )
        .unwrap()
    }

    const SHIFTED_SQUARES: &str = "(x1-1)^2 + (x2-1)^2";

    #[test]
    fn canonical_y_examples() {
        let p = problem(SHIFTED_SQUARES, 2, 1);
        assert_eq!(canonical_y(&[0.0, 0.0], &p).unwrap(), vec![1.0, 1.0]);
        assert_eq!(canonical_y(&[1.0, 0.0], &p).unwrap(), vec![0.0, 1.0]);
        assert_eq!(canonical_y(&[0.0, 0.1], &p).unwrap(), vec![1.0, 0.0]);
        assert!(canonical_y(&[1.0, 1.0], &p).is_err());
    }

    #[test]
    fn s_stationarity_examples() {
        let p = problem(SHIFTED_SQUARES, 2, 1);
        assert!(is_s_stationary(&[0.0, 0.0], &[1.0, 1.0], &p).unwrap());
        assert!(is_s_stationary(&[1.0, 0.0], &[0.0, 1.0], &p).unwrap());
        let p = problem("x1 + x2", 2, 1);
        assert!(!is_s_stationary(&[0.0, 0.0], &[1.0, 0.0], &p).unwrap());
        // infeasible pairs
        assert!(is_s_stationary(&[1.0, 0.0], &[1.0, 1.0], &p).is_err());
        assert!(is_s_stationary(&[0.0, 0.0], &[0.0, 0.0], &p).is_err());
    }

    #[test]
    fn roundtrip_examples() {
        assert!(m_s_roundtrip(&[0.0, 0.0], &problem(SHIFTED_SQUARES, 2, 1)).unwrap());
        assert!(m_s_roundtrip(&[0.0, 0.0], &problem("x1 + x2", 2, 1)).unwrap());
        assert!(m_s_roundtrip(&[0.5, 0.0], &problem(SHIFTED_SQUARES, 2, 1)).unwrap());
    }

    #[test]
    fn kkt_at_the_saddle() {
        let p = problem(SHIFTED_SQUARES, 2, 1);
        let r = kkt_analysis(&[0.0, 0.0], &[1.0, 1.0], &p).unwrap();
        assert!(r.licq);
        let grads: Vec<&Vec<f64>> = r.active.iter().map(|c| &c.gradient).collect();
        assert!(grads.contains(&&vec![1.0, 0.0, 0.0, 0.0]));
        assert!(grads.contains(&&vec![0.0, 1.0, 0.0, 0.0]));
        assert!(grads.contains(&&vec![0.0, 0.0, 1.0, 0.0]));
        assert!(grads.contains(&&vec![0.0, 0.0, 0.0, 1.0]));
        let mu = r.mu.unwrap();
        let lambda = r.lambda.unwrap();
        assert_eq!(mu.len(), 2);
        for m in mu {
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-12);
        }
        for l in lambda {
            assert_abs_diff_eq!(l, -2.0, epsilon = 1e-12);
        }
        assert!(r.kkt_holds);
        assert!(!r.strict_complementarity);
        assert_eq!(r.cc_sosc, Some(CcSosc::HoldsTrivially));
    }

    #[test]
    fn kkt_at_a_minimizer_without_licq() {
        // y1 >= 0, the budget and x1 y1 = 0 are all active: five gradients in R^4
        let p = problem(SHIFTED_SQUARES, 2, 1);
        let r = kkt_analysis(&[1.0, 0.0], &[0.0, 1.0], &p).unwrap();
        assert_eq!(r.active.len(), 5);
        assert!(!r.licq);
        assert!(r.kkt_holds);
        assert!(r.mu.is_none());
        assert_eq!(r.cc_sosc, Some(CcSosc::Holds));
    }

    #[test]
    fn kkt_fails_off_stationarity() {
        let p = problem(SHIFTED_SQUARES, 2, 1);
        let r = kkt_analysis(&[0.5, 0.0], &[0.0, 1.0], &p).unwrap();
        assert!(!r.is_s_stationary);
        assert!(!r.kkt_holds);
        assert_eq!(r.cc_sosc, None);
        // a nonzero x_i makes y_i >= 0 and x_i y_i = 0 share a gradient direction
        let p = problem("(x1-1)^2 + x2", 3, 2);
        let r = kkt_analysis(&[0.5, 0.0, 0.0], &[0.0, 1.0, 1.0], &p).unwrap();
        assert!(!r.licq);
        assert!(!r.kkt_holds);
    }

    #[test]
    fn sosc_examples() {
        let p = problem("x1 + x2", 2, 1);
        assert_eq!(cc_sosc_check(&[0.0, 0.0], &[1.0, 1.0], &p).unwrap(), CcSosc::HoldsTrivially);
        let p = problem(SHIFTED_SQUARES, 2, 1);
        assert_eq!(cc_sosc_check(&[1.0, 0.0], &[0.0, 1.0], &p).unwrap(), CcSosc::Holds);
        let p = problem("-(x1-1)^2", 2, 1);
        assert_eq!(cc_sosc_check(&[1.0, 0.0], &[0.0, 1.0], &p).unwrap(), CcSosc::Fails);
        let p = problem(SHIFTED_SQUARES, 2, 1);
        assert!(matches!(
            cc_sosc_check(&[0.5, 0.0], &[0.0, 1.0], &p),
            Err(Error::NotSStationary)
        ));
    }

    #[test]
    fn sosc_implies_nondegenerate_minimum() {
        let p = problem(SHIFTED_SQUARES, 2, 1);
        assert!(nondeg_from_sosc(&[1.0, 0.0], &p).unwrap());
        assert!(nondeg_from_sosc(&[0.0, 1.0], &p).unwrap());
        assert!(matches!(
            nondeg_from_sosc(&[0.0, 0.0], &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn non_canonical_y_keeps_the_saddle_degenerate() {
        // y = (1/2, 1/2) puts both indices in I0+; the budget is active
        let p = problem(SHIFTED_SQUARES, 2, 1);
        let r = kkt_analysis(&[0.0, 0.0], &[0.5, 0.5], &p).unwrap();
        assert_eq!(r.index_sets.i0p, vec![0, 1]);
        assert!(r.is_s_stationary);
        assert!(r.licq);
        assert!(r.kkt_holds);
        assert!(!r.strict_complementarity);
    }
}
