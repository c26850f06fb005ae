mod common;

use scno_core::enumeration::{enumerate_m_stationary, perturb_problem};
use scno_core::polyfun::{parse_polynomial, Polynomial};
use scno_core::report::{analyze, classify, level_set, AnalysisOptions, ProblemFile, ToleranceOverrides};
use scno_core::stationarity::{classify_point, Bounds, PointClass, ToleranceSet};
use scno_core::{Error, Problem32};

use common::*;

const SHIFTED_SQUARES_FILE: &str = r#"{
  "n": 2,
  "s": 1,
  "objective": "(x1-1)^2 + (x2-1)^2",
  "box": [[-3, 3], [-3, 3]],
  "labels": {"name": "two shifted squares"}
}"#;

#[test]
fn problem_files_round_trip() {
    let file = ProblemFile::from_json(SHIFTED_SQUARES_FILE).unwrap();
    let prob = file.to_problem(&ToleranceOverrides::default()).unwrap();
    let again = ProblemFile::from_problem(&prob, file.tolerances, file.labels.clone());
    let back = ProblemFile::from_json(&again.to_json()).unwrap();
    let prob2 = back.to_problem(&ToleranceOverrides::default()).unwrap();
    assert_eq!(prob2.objective(), prob.objective());
    assert_eq!((prob2.n(), prob2.s()), (prob.n(), prob.s()));
    assert_eq!(prob2.bbox(), prob.bbox());
    assert_eq!(back.labels["name"], "two shifted squares");
}

#[test]
fn term_lists_and_expressions_must_agree() {
    let terms = r#"{"n": 1, "s": 0, "objective": [{"coeff": "1/2", "exps": [2]}], "box": [[-1, 1]]}"#;
    let prob = ProblemFile::from_json(terms).unwrap().to_problem(&ToleranceOverrides::default()).unwrap();
    assert_eq!(prob.objective(), &parse_polynomial("x1^2/2", 1).unwrap());

    let both = r#"{"n": 1, "s": 0, "objective": {"expression": "x1", "terms": [{"coeff": "2", "exps": [1]}]}, "box": [[-1, 1]]}"#;
    let err = ProblemFile::from_json(both).unwrap().to_problem(&ToleranceOverrides::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidProblem(_)), "{err}");
    assert!(err.is_input_error());

    let unknown = r#"{"n": 1, "s": 0, "objective": "x1", "box": [[-1, 1]], "colour": "red"}"#;
    assert!(ProblemFile::from_json(unknown).is_err());
}

#[test]
fn invalid_problems_are_input_errors() {
    for text in [
        r#"{"n": 2, "s": 2, "objective": "x1", "box": [[-1, 1], [-1, 1]]}"#,
        r#"{"n": 2, "s": 1, "objective": "x3", "box": [[-1, 1], [-1, 1]]}"#,
        r#"{"n": 2, "s": 1, "objective": "x1", "box": [[1, 2], [-1, 1]]}"#,
        r#"{"n": 2, "s": 1, "objective": "x1", "box": [[-1, 1]]}"#,
        r#"{"n": 2, "s": 1, "objective": "x1 +* x2", "box": [[-1, 1], [-1, 1]]}"#,
    ] {
        let err = ProblemFile::from_json(text)
            .and_then(|f| f.to_problem(&ToleranceOverrides::default()))
            .unwrap_err();
        assert!(err.is_input_error(), "{text}: {err}");
    }
}

#[test]
fn tolerance_overrides_stack() {
    let file = ProblemFile::from_json(
        r#"{"n": 1, "s": 0, "objective": "x1^2", "box": [[-1, 1]], "tolerances": {"zero_entry": 1e-6}}"#,
    )
    .unwrap();
    let cli = ToleranceOverrides {
        grad_zero: Some(1e-5),
        ..ToleranceOverrides::default()
    };
    let tol = file.tolerances(&cli);
    assert_eq!(tol.zero_entry, 1e-6);
    assert_eq!(tol.grad_zero, 1e-5);
    assert_eq!(tol.eig_zero, ToleranceSet::<f64>::default().eig_zero);
}

#[test]
fn analysis_is_reproducible() {
    let file = ProblemFile::from_json(SHIFTED_SQUARES_FILE).unwrap();
    let opts = AnalysisOptions {
        perturb: Some(0.05),
        seed: 11,
        ..AnalysisOptions::default()
    };
    let a = serde_json::to_string(&analyze(&file, &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&analyze(&file, &opts).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = AnalysisOptions { seed: 12, ..opts };
    assert_ne!(a, serde_json::to_string(&analyze(&file, &other).unwrap()).unwrap());
}

#[test]
fn analysis_of_the_first_example() {
    let report = analyze(&ProblemFile::from_json(SHIFTED_SQUARES_FILE).unwrap(), &AnalysisOptions::default()).unwrap();
    assert_eq!(report.enumeration.counts.r, 2);
    assert_eq!(report.morse.verdict, Some(true));
    assert!(report.topology.all_ok);
    let saddle = report.points.iter().find(|p| p.stationary.class == PointClass::SaddleTypeII).unwrap();
    let cells = saddle.attached_cells.as_ref().unwrap();
    // p = n - k = 2, q = s - k = 1: one cell of dimension q + QI = 1
    assert_eq!((cells.p, cells.q, cells.count, cells.dimension), (2, 1, 1, 1));
    for p in &report.points {
        assert_eq!(p.local_min_sampled, Some(p.stationary.class == PointClass::LocalMin));
    }
}

#[test]
fn classify_accepts_an_alternative_y() {
    let file = ProblemFile::from_json(SHIFTED_SQUARES_FILE).unwrap();
    let opts = AnalysisOptions::default();
    let r = classify(&file, &[0.0, 0.0], Some(&[1.0, 0.0]), &opts).unwrap();
    let alt = r.point.relaxation_alternative.unwrap();
    assert!(!alt.is_s_stationary);
    let canon = r.point.relaxation.unwrap();
    assert!(canon.is_s_stationary);

    // infeasible points are classified, not rejected
    let r = classify(&file, &[1.0, 1.0], None, &opts).unwrap();
    assert!(!r.point.stationary.feasible);
    assert_eq!(r.point.stationary.class, PointClass::NotStationary);

    let err = classify(&file, &[0.0, 0.0], Some(&[0.2, 0.2]), &opts).unwrap_err();
    assert!(err.is_input_error());
}

#[test]
fn level_set_report_lists_critical_points() {
    let r = level_set(&ProblemFile::from_json(SHIFTED_SQUARES_FILE).unwrap(), &AnalysisOptions::default()).unwrap();
    assert_eq!(r.critical_points.len(), 3);
    assert_eq!(r.curve.q, vec![0, 2, 1]);
    assert!(r.merge_checks.iter().all(|m| m.ok == Some(true)));
}

#[test]
fn steering_the_perturbation_recovers_the_shifted_example() {
    // x1^2 + x2^2 - 2e x1 - 2e x2 = (x1 - e)^2 + (x2 - e)^2 - 2e^2
    let base = parse_polynomial(ROUND_BOWL, 2).unwrap();
    let e = rat(1, 10);
    let linear = &Polynomial::variable(2, 0) + &Polynomial::variable(2, 1);
    let steered = &base + &linear.scale(&(rat(-2, 1) * &e));
    let shifted = parse_polynomial(SHIFTED_BOWL, 2).unwrap();
    let constant = Polynomial::constant(2, rat(2, 1) * &e * &e);
    assert_eq!(&steered + &constant, shifted);

    // the random perturbation separates the degenerate origin as well
    let prob = problem(ROUND_BOWL, 2, 1, 3.0);
    let perturbed = perturb_problem(&prob, 0.1, 5).unwrap();
    let res = enumerate_m_stationary(&perturbed).unwrap();
    assert!(res.records.iter().all(|r| r.is_nondegenerate()));
}

#[test]
fn single_precision_problems_classify_the_same_way() {
    let objective = parse_polynomial(SHIFTED_SQUARES, 2).unwrap();
    let prob = Problem32::new(2, 1, objective, vec![Bounds::symmetric(3.0f32); 2], ToleranceSet::default()).unwrap();
    let res = enumerate_m_stationary(&prob).unwrap();
    let classes: Vec<PointClass> = res.records.iter().map(|r| r.class).collect();
    assert_eq!(classes, vec![PointClass::SaddleTypeII, PointClass::LocalMin, PointClass::LocalMin]);
    assert_eq!(classify_point(&[1.0f32, 0.0], &prob).unwrap().class, PointClass::LocalMin);
}
