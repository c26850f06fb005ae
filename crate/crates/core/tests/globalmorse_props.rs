mod common;

use proptest::prelude::*;
use scno_core::enumeration::enumerate_m_stationary;
use scno_core::globalmorse::{component_curve, components_at_level, morse_relation, morse_report, LevelGrid};
use scno_core::stationarity::Problem;

use common::*;

fn generic_instance(seed: u64) -> Problem<f64> {
    let n = 2 + (seed % 3) as usize;
    let s = (1 + (seed / 3 % 2) as usize).min(n - 1);
    random_generic_problem(seed, n, s)
}

/// Levels at a quarter and three quarters of each open interval between
/// critical values, plus one further out on each side.
fn interior_levels(critical: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    if let (Some(&lo), Some(&hi)) = (critical.first(), critical.last()) {
        out.push((0, lo - 0.5));
        for (j, w) in critical.windows(2).enumerate() {
            out.push((j + 1, w[0] + 0.25 * (w[1] - w[0])));
            out.push((j + 1, w[0] + 0.75 * (w[1] - w[0])));
        }
        out.push((critical.len(), hi + 2.0));
    }
    out
}

/// Largest change of `f` between a critical point and the lattice corners it
/// is joined to: critical values closer than this to a level are not
/// resolved by the grid.
fn value_resolution(grid: &LevelGrid<f64>) -> f64 {
    let lattice = grid.lattice_nodes() as u32;
    grid.edges()
        .iter()
        .filter(|&&(u, v)| u >= lattice || v >= lattice)
        .map(|&(u, v)| (grid.value(u as usize) - grid.value(v as usize)).abs())
        .fold(0.0, f64::max)
}

fn assert_constant_between_critical_values(prob: &Problem<f64>) -> usize {
    let mut compared = 0;
    let records = enumerate_m_stationary(prob).unwrap();
    let extra: Vec<Vec<f64>> = records.records.iter().map(|r| r.point.clone()).collect();
    let grids: Vec<LevelGrid<f64>> = [41, 81].iter().map(|&r| LevelGrid::new(prob, r, &extra).unwrap()).collect();
    let delta = value_resolution(&grids[0]);
    let resolved = |critical: &[f64], a: f64| critical.iter().all(|c| (a - c).abs() > delta);
    let curves: Vec<_> = grids.iter().map(|g| component_curve(g, &records)).collect();
    for (grid, curve) in grids.iter().zip(&curves) {
        let crit = &curve.critical_values;
        for (slot, a) in interior_levels(crit) {
            if resolved(crit, a) && resolved(crit, curve.levels[slot]) {
                compared += 1;
                assert_eq!(
                    components_at_level(grid, a),
                    curve.q[slot],
                    "resolution {}, level {a}, probe {}",
                    grid.resolution(),
                    curve.levels[slot]
                );
            }
        }
    }
    for (slot, &a) in curves[0].levels.iter().enumerate() {
        if resolved(&curves[0].critical_values, a) {
            assert_eq!(curves[0].q[slot], curves[1].q[slot], "probe {a}");
        }
    }
    compared
}

#[test]
fn worked_examples_are_constant_between_critical_values() {
    assert!(assert_constant_between_critical_values(&problem(SHIFTED_SQUARES, 2, 1, 3.0)) > 0);
    assert!(assert_constant_between_critical_values(&problem(SHIFTED_BOWL, 2, 1, 3.0)) > 0);
    assert!(assert_constant_between_critical_values(&problem(LINEAR, 2, 1, 2.0)) > 0);
}

#[test]
fn worked_example_curves() {
    let rep = morse_relation(&problem(SHIFTED_SQUARES, 2, 1, 3.0)).unwrap();
    assert_eq!(rep.curve.critical_values, vec![1.0, 2.0]);
    assert_eq!(rep.curve.q, vec![0, 2, 1]);
    assert_eq!((rep.r, rep.r_i, rep.r_ii), (2, 0, 1));
    assert_eq!(rep.verdict, Some(true));

    // a linear objective is unbounded below on the feasible set; the box truncates it
    let lin = morse_relation(&problem(LINEAR, 2, 1, 2.0)).unwrap();
    assert!(lin.properness_warning);
    assert_eq!(lin.verdict, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generic_curves_are_constant_between_critical_values(seed in 0u64..100_000) {
        prop_assert!(assert_constant_between_critical_values(&generic_instance(seed)) > 0);
    }

    #[test]
    fn sublevel_sets_grow_and_end_connected(seed in 0u64..100_000) {
        let prob = generic_instance(seed);
        let grid = LevelGrid::new(&prob, 21, &[]).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|i| grid.value(i)).collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(components_at_level(&grid, lo - 1.0), 0);
        // the feasible set is a union of subspaces through the origin
        prop_assert_eq!(components_at_level(&grid, hi + 1.0), 1);
        let mut covered = 0;
        for k in 0..=20 {
            let a = lo + (hi - lo) * k as f64 / 20.0;
            let now = values.iter().filter(|&&v| v <= a).count();
            prop_assert!(now >= covered);
            covered = now;
        }
    }

    #[test]
    fn relation_holds_when_the_hypothesis_does(seed in 0u64..100_000) {
        let prob = generic_instance(seed);
        let records = enumerate_m_stationary(&prob).unwrap();
        let rep = morse_report(&prob, &records, 41).unwrap();
        if rep.hypothesis_met && !rep.degenerate_present {
            prop_assert!(rep.relation_holds, "lhs {} rhs {}", rep.relation_lhs, rep.relation_rhs);
        }
    }
}
