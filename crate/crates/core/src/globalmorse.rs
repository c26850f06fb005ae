//! Connected components of discretized lower level sets
//! `M^a = { x : ||x||_0 <= s, f(x) <= a }` and the Morse relation
//! `r_I + (n - s) r_II >= r - 1`.
//!
//! The feasible set is a union of coordinate subspaces. [`LevelGrid`] samples
//! it on a lattice that contains 0 on every axis, so subspaces share exactly
//! their common sparser points, and joins lattice neighbours along axes.
//! Enumerated critical points are added as extra nodes so every critical value
//! is attained on the graph.

use std::collections::HashMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::enumeration::{Counts, EnumerationResult};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stationarity::{PointClass, Problem};
use crate::unionfind::UnionFind;

pub const DEFAULT_RESOLUTION: usize = 41;

/// Lattice nodes with at most `s` nonzero coordinates plus extra points.
#[derive(Clone, Debug)]
pub struct LevelGrid<F> {
    resolution: usize,
    steps: Vec<F>,
    /// Inclusive lattice index range per axis; coordinate = index * step.
    ranges: Vec<(i64, i64)>,
    n_lattice: usize,
    points: Vec<Vec<F>>,
    values: Vec<F>,
    boundary: Vec<bool>,
    edges: Vec<(u32, u32)>,
}

impl<F: Real> LevelGrid<F> {
    /// Lattice with `resolution` points per full box edge; `extra` points are
    /// joined to the corners of their lattice cell whenever the joint support
    /// stays within `s`.
    pub fn new(prob: &Problem<F>, resolution: usize, extra: &[Vec<F>]) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be at least 3, got {resolution}"
            )));
        }
        let n = prob.n();
        let s = prob.s();
        let cells = F::from_usize(resolution - 1).unwrap();
        let slack = F::lit(1e-9);
        let mut steps = Vec::with_capacity(n);
        let mut ranges = Vec::with_capacity(n);
        for b in prob.bbox() {
            let h = (b.upper - b.lower) / cells;
            if h <= F::zero() {
                steps.push(F::one());
                ranges.push((0, 0));
                continue;
            }
            let lo = (b.lower / h - slack).ceil().to_i64().unwrap();
            let hi = (b.upper / h + slack).floor().to_i64().unwrap();
            steps.push(h);
            ranges.push((lo, hi));
        }

        let mut coords: Vec<Vec<i64>> = Vec::new();
        for size in 0..=s.min(n) {
            for support in (0..n).combinations(size) {
                if size == 0 {
                    coords.push(vec![0; n]);
                    continue;
                }
                let axes: Vec<Vec<i64>> = support
                    .iter()
                    .map(|&i| (ranges[i].0..=ranges[i].1).filter(|&v| v != 0).collect())
                    .collect();
                if axes.iter().any(|a| a.is_empty()) {
                    continue;
                }
                for vals in axes.into_iter().multi_cartesian_product() {
                    let mut c = vec![0i64; n];
                    for (&i, v) in support.iter().zip(vals) {
                        c[i] = v;
                    }
                    coords.push(c);
                }
            }
        }
        let index: HashMap<&Vec<i64>, u32> = coords.iter().zip(0u32..).collect();
        let mut edges = Vec::new();
        for (a, c) in coords.iter().enumerate() {
            for i in 0..n {
                let mut up = c.clone();
                up[i] += 1;
                if let Some(&b) = index.get(&up) {
                    edges.push((a as u32, b));
                }
            }
        }
        let on_boundary = |c: &[i64]| {
            c.iter()
                .zip(&ranges)
                .any(|(&v, &(lo, hi))| v != 0 && (v == lo || v == hi))
        };
        let boundary: Vec<bool> = coords.iter().map(|c| on_boundary(c)).collect();
        let mut points: Vec<Vec<F>> = coords
            .iter()
            .map(|c| c.iter().zip(&steps).map(|(&v, &h)| F::from_i64(v).unwrap() * h).collect())
            .collect();
        let n_lattice = points.len();

        let mut boundary = boundary;
        for x in extra {
            prob.check_dim(x)?;
            let id = points.len() as u32;
            let supp_x: Vec<bool> = x.iter().map(|v| v.abs() > prob.tol().zero_entry).collect();
            let choices: Vec<Vec<i64>> = x
                .iter()
                .zip(&steps)
                .enumerate()
                .map(|(i, (&v, &h))| {
                    if !supp_x[i] {
                        return vec![0];
                    }
                    let t = v / h;
                    let (f, c) = (t.floor().to_i64().unwrap(), t.ceil().to_i64().unwrap());
                    if f == c {
                        vec![f]
                    } else {
                        vec![f, c]
                    }
                })
                .collect();
            for corner in choices.into_iter().multi_cartesian_product() {
                let joint = (0..n).filter(|&i| supp_x[i] || corner[i] != 0).count();
                if joint > s {
                    continue;
                }
                if let Some(&b) = index.get(&corner) {
                    edges.push((id, b));
                }
            }
            points.push(x.clone());
            boundary.push(false);
        }
        let values = points.iter().map(|p| prob.value(p)).collect();
        Ok(Self {
            resolution,
            steps,
            ranges,
            n_lattice,
            points,
            values,
            boundary,
            edges,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn steps(&self) -> &[F] {
        &self.steps
    }

    /// Inclusive lattice index range per axis.
    pub fn index_ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }

    pub fn lattice_nodes(&self) -> usize {
        self.n_lattice
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &[F] {
        &self.points[id]
    }

    pub fn value(&self, id: usize) -> F {
        self.values[id]
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Component count of `{ node : f(node) <= a }` and whether any of its
    /// nodes lies on the box boundary.
    pub fn level_components(&self, a: F) -> (usize, bool) {
        let mut uf = UnionFind::new(self.points.len());
        let inside: Vec<bool> = self.values.iter().map(|&v| v <= a).collect();
        for &(u, v) in &self.edges {
            if inside[u as usize] && inside[v as usize] {
                uf.union(u as usize, v as usize);
            }
        }
        let mut roots = std::collections::HashSet::new();
        let mut touches = false;
        for id in 0..self.points.len() {
            if inside[id] {
                roots.insert(uf.find(id));
                touches |= self.boundary[id];
            }
        }
        (roots.len(), touches)
    }
}

/// Number of connected components of the discretized `M^a`.
pub fn components_at_level<F: Real>(grid: &LevelGrid<F>, a: F) -> usize {
    grid.level_components(a).0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCurve<F> {
    /// Distinct critical values, ascending.
    pub critical_values: Vec<F>,
    /// Probe levels: below the lowest, between consecutive, above the highest critical value.
    pub levels: Vec<F>,
    pub q: Vec<usize>,
    /// Whether the level set at each probe reaches the box boundary.
    pub touches_boundary: Vec<bool>,
}

/// Groups record indices by critical value; values within a relative `1e-9`
/// are taken as equal.
fn value_groups<F: Real>(records: &EnumerationResult<F>) -> Vec<(F, Vec<usize>)> {
    let mut idx: Vec<usize> = (0..records.records.len()).collect();
    idx.sort_by(|&a, &b| {
        records.records[a]
            .value
            .partial_cmp(&records.records[b].value)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut groups: Vec<(F, Vec<usize>)> = Vec::new();
    for i in idx {
        let v = records.records[i].value;
        match groups.last_mut() {
            Some((g, members)) if (v - *g).abs() <= F::lit(1e-9) * F::one().max(g.abs()) => members.push(i),
            _ => groups.push((v, vec![i])),
        }
    }
    groups
}

pub fn component_curve<F: Real>(grid: &LevelGrid<F>, records: &EnumerationResult<F>) -> ComponentCurve<F> {
    let critical_values: Vec<F> = value_groups(records).into_iter().map(|(v, _)| v).collect();
    let mut levels = Vec::with_capacity(critical_values.len() + 1);
    match (critical_values.first(), critical_values.last()) {
        (Some(&lo), Some(&hi)) => {
            levels.push(lo - F::one());
            for w in critical_values.windows(2) {
                levels.push((w[0] + w[1]) * F::lit(0.5));
            }
            levels.push(hi + F::one());
        }
        _ => levels.push(F::zero()),
    }
    let (q, touches_boundary) = levels.iter().map(|&a| grid.level_components(a)).unzip();
    ComponentCurve {
        critical_values,
        levels,
        q,
        touches_boundary,
    }
}

/// Change of component count across one critical value versus the bound the
/// classes of the points at that value allow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeCheck<F> {
    pub value: F,
    pub points: Vec<Vec<F>>,
    pub classes: Vec<PointClass>,
    pub observed: i64,
    /// Inclusive bounds; absent when a degenerate point sits at this value.
    pub bound: Option<(i64, i64)>,
    pub ok: Option<bool>,
    /// Several critical points share this value and are checked together.
    pub coinciding: bool,
}

/// Allowed change of `q` across a single critical point.
pub fn merge_bound(class: PointClass, n: usize, s: usize) -> Option<(i64, i64)> {
    match class {
        PointClass::LocalMin => Some((1, 1)),
        PointClass::SaddleTypeI => Some((-1, 0)),
        PointClass::SaddleTypeII => Some((-((n - s) as i64), 0)),
        PointClass::HigherSaddle => Some((0, 0)),
        PointClass::Degenerate | PointClass::NotStationary => None,
    }
}

/// One entry per distinct critical value. Points sharing a value are checked
/// against the sum of their bounds and flagged; perturbing the objective
/// separates them.
pub fn merge_bounds_check<F: Real>(prob: &Problem<F>, curve: &ComponentCurve<F>, records: &EnumerationResult<F>) -> Vec<MergeCheck<F>> {
    value_groups(records)
        .into_iter()
        .enumerate()
        .map(|(j, (value, members))| {
            let observed = curve.q[j + 1] as i64 - curve.q[j] as i64;
            let classes: Vec<PointClass> = members.iter().map(|&i| records.records[i].class).collect();
            let bound = classes.iter().try_fold((0i64, 0i64), |(lo, hi), &c| {
                merge_bound(c, prob.n(), prob.s()).map(|(a, b)| (lo + a, hi + b))
            });
            MergeCheck {
                value,
                points: members.iter().map(|&i| records.records[i].point.clone()).collect(),
                classes,
                observed,
                bound,
                ok: bound.map(|(lo, hi)| lo <= observed && observed <= hi),
                coinciding: members.len() > 1,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseReport<F> {
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub r_i: usize,
    pub r_ii: usize,
    /// `r_I + (n - s) r_II`
    pub relation_lhs: usize,
    /// `r - 1`
    pub relation_rhs: i64,
    pub relation_holds: bool,
    /// The level set at the top probe is connected.
    pub hypothesis_met: bool,
    pub degenerate_present: bool,
    pub properness_warning: bool,
    /// `Some(relation_holds)` only when the hypothesis is met, no degenerate
    /// point is present and no level set was truncated by the box.
    pub verdict: Option<bool>,
    pub merge_checks: Vec<MergeCheck<F>>,
    pub curve: ComponentCurve<F>,
    pub resolution: usize,
    pub warnings: Vec<String>,
}

/// Assemble the report from enumerated points on a grid of the given resolution.
pub fn morse_report<F: Real>(prob: &Problem<F>, records: &EnumerationResult<F>, resolution: usize) -> Result<MorseReport<F>> {
    let extra: Vec<Vec<F>> = records.records.iter().map(|r| r.point.clone()).collect();
    let grid = LevelGrid::new(prob, resolution, &extra)?;
    let curve = component_curve(&grid, records);
    let merge_checks = merge_bounds_check(prob, &curve, records);
    let Counts { r, r_i, r_ii, n_degenerate, .. } = records.counts;
    let n = prob.n();
    let s = prob.s();
    let relation_lhs = r_i + (n - s) * r_ii;
    let relation_rhs = r as i64 - 1;
    let relation_holds = relation_lhs as i64 >= relation_rhs;
    let hypothesis_met = curve.q.last() == Some(&1);
    let degenerate_present = n_degenerate > 0;
    let properness_warning = curve.touches_boundary.iter().any(|&t| t);

    let mut warnings = Vec::new();
    if degenerate_present {
        warnings.push(format!(
            "{n_degenerate} degenerate M-stationary point(s); the relation is not claimed"
        ));
    }
    if properness_warning {
        warnings.push("a probed level set reaches the box boundary; the objective may not be proper on the box".into());
    }
    if !hypothesis_met {
        warnings.push(format!(
            "the level set above all critical values has {} components, not 1",
            curve.q.last().copied().unwrap_or(0)
        ));
    }
    if merge_checks.iter().any(|m| m.coinciding) {
        warnings.push("critical values coincide; a small perturbation of the objective separates them".into());
    }
    if merge_checks.iter().any(|m| m.ok == Some(false)) {
        warnings.push("a component count change exceeds its bound; refine the grid".into());
    }
    let verdict = (hypothesis_met && !degenerate_present && !properness_warning).then_some(relation_holds);
    Ok(MorseReport {
        n,
        s,
        r,
        r_i,
        r_ii,
        relation_lhs,
        relation_rhs,
        relation_holds,
        hypothesis_met,
        degenerate_present,
        properness_warning,
        verdict,
        merge_checks,
        curve,
        resolution,
        warnings,
    })
}

/// Enumerate and assemble the report at the default resolution.
pub fn morse_relation<F: Real>(prob: &Problem<F>) -> Result<MorseReport<F>> {
    let records = crate::enumeration::enumerate_m_stationary(prob)?;
    morse_report(prob, &records, DEFAULT_RESOLUTION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{enumerate_m_stationary, perturb_problem};
    use crate::polyfun::parse_polynomial;
    use crate::stationarity::{Bounds, ToleranceSet};

    fn problem(expr: &str, n: usize, s: usize, half: f64) -> Problem<f64> {
        Problem::new(
            n,
            s,
            parse_polynomial(expr, n).unwrap(),
            vec![Bounds::symmetric(half); n],
            ToleranceSet::default(),
        )
        .unwrap()
    }

    const SHIFTED_SQUARES: &str = "(x1-1)^2 + (x2-1)^2";

    #[test]
    fn lattice_contains_origin_and_axes() {
        let p = problem(SHIFTED_SQUARES, 2, 1, 3.0);
        let g = LevelGrid::new(&p, 41, &[]).unwrap();
        assert_eq!(g.index_ranges(), &[(-20, 20), (-20, 20)]);
        // origin plus 40 nonzero points per axis
        assert_eq!(g.lattice_nodes(), 81);
        assert_eq!(g.edges().len(), 80);
        assert!((0..g.len()).any(|i| g.point(i) == [0.0, 0.0]));
    }

    #[test]
    fn level_components_examples() {
        let p = problem(SHIFTED_SQUARES, 2, 1, 3.0);
        let g = LevelGrid::new(&p, 41, &[]).unwrap();
        assert_eq!(components_at_level(&g, 1.5), 2);
        assert_eq!(components_at_level(&g, 2.5), 1);
        assert_eq!(components_at_level(&g, -0.5), 0);
    }

    #[test]
    fn curve_and_report_for_two_minimizers() {
        let p = problem(SHIFTED_SQUARES, 2, 1, 3.0);
        let e = enumerate_m_stationary(&p).unwrap();
        let rep = morse_report(&p, &e, 41).unwrap();
        assert_eq!(rep.curve.critical_values, vec![1.0, 2.0]);
        assert_eq!(rep.curve.q, vec![0, 2, 1]);
        assert_eq!((rep.relation_lhs, rep.relation_rhs), (1, 1));
        assert!(rep.relation_holds && rep.hypothesis_met);
        assert_eq!(rep.verdict, Some(true));
        assert!(rep.merge_checks.iter().all(|m| m.ok == Some(true)));
        let saddle = &rep.merge_checks[1];
        assert_eq!((saddle.observed, saddle.bound), (-1, Some((-1, 0))));
        assert!(rep.merge_checks[0].coinciding);
    }

    #[test]
    fn linear_objective_is_flagged_improper() {
        let p = problem("x1 + x2", 2, 1, 2.0);
        let rep = morse_relation(&p).unwrap();
        assert!(rep.properness_warning);
        assert_eq!(rep.verdict, None);
    }

    #[test]
    fn axis_valley_stays_connected() {
        let p = problem("x1^2", 2, 1, 3.0);
        let g = LevelGrid::new(&p, 41, &[]).unwrap();
        for a in [0.1, 1.0, 4.0] {
            assert_eq!(components_at_level(&g, a), 1);
        }
    }

    #[test]
    fn zero_sparsity_is_a_single_point() {
        let p = problem("(x1-1)^2 + x2^2", 2, 0, 3.0);
        let rep = morse_relation(&p).unwrap();
        assert_eq!((rep.r, rep.r_i, rep.r_ii, rep.relation_rhs), (1, 0, 0, 0));
        assert!(rep.relation_holds);
    }

    #[test]
    fn perturbed_minimizers_split_their_value() {
        let p = problem(SHIFTED_SQUARES, 2, 1, 3.0);
        let q = perturb_problem(&p, 0.01, 11).unwrap();
        let e = enumerate_m_stationary(&q).unwrap();
        let rep = morse_report(&q, &e, 41).unwrap();
        assert_eq!(rep.curve.q, vec![0, 1, 2, 1]);
        assert!(rep.merge_checks.iter().all(|m| !m.coinciding && m.ok == Some(true)));
    }
}
