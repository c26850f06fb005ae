//! Problem files and the end-to-end analysis reports built on them.
//!
//! Reports are plain data: every number in them comes from the analysis
//! modules, and rendering only formats. Identical input, options and seed
//! give byte-identical JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::enumeration::{
    enumerate_m_stationary_with, perturb_problem, Counts, EnumerationOptions, Provenance,
};
use crate::error::{Error, Result};
use crate::globalmorse::{morse_report, ComponentCurve, MergeCheck, MorseReport, DEFAULT_RESOLUTION};
use crate::polyfun::{parse_polynomial, Polynomial, TermRecord};
use crate::relaxation::{canonical_y, kkt_analysis, nondeg_from_sosc, RelaxationRecord};
use crate::scalar::Rational;
use crate::stationarity::{
    classify_point, is_bf_vector, is_cw_minimum, is_local_min_sampled, local_sample_radius, Bounds, PointClass, Problem,
    StationaryRecord, ToleranceSet,
};
use crate::topology::{binomial, verify_normal_morse_data, NormalMorseReport};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Objective as an expression, a term list, or both (which must agree).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveSpec {
    Expression(String),
    Terms(Vec<TermRecord>),
    Both {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expression: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<Vec<TermRecord>>,
    },
}

impl ObjectiveSpec {
    pub fn to_polynomial(&self, n: usize) -> Result<Polynomial<Rational>> {
        match self {
            ObjectiveSpec::Expression(e) => Ok(parse_polynomial(e, n)?),
            ObjectiveSpec::Terms(t) => Polynomial::from_records(n, t),
            ObjectiveSpec::Both { expression, terms } => {
                let from_expr = expression.as_deref().map(|e| parse_polynomial(e, n)).transpose()?;
                let from_terms = terms.as_deref().map(|t| Polynomial::from_records(n, t)).transpose()?;
                match (from_expr, from_terms) {
                    (Some(a), Some(b)) if a != b => Err(Error::InvalidProblem(
                        "objective expression and term list disagree".into(),
                    )),
                    (Some(a), _) => Ok(a),
                    (None, Some(b)) => Ok(b),
                    (None, None) => Err(Error::InvalidProblem(
                        "objective needs an expression or a term list".into(),
                    )),
                }
            }
        }
    }
}

/// Partial tolerance overrides; missing entries keep their defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_entry: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_zero: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig_zero: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedupe_radius: Option<f64>,
}

impl ToleranceOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, mut t: ToleranceSet<f64>) -> ToleranceSet<f64> {
        if let Some(v) = self.zero_entry {
            t.zero_entry = v;
        }
        if let Some(v) = self.grad_zero {
            t.grad_zero = v;
        }
        if let Some(v) = self.eig_zero {
            t.eig_zero = v;
        }
        if let Some(v) = self.dedupe_radius {
            t.dedupe_radius = v;
        }
        t
    }

    /// Entries of `other` take precedence.
    pub fn merged(&self, other: &Self) -> Self {
        Self {
            zero_entry: other.zero_entry.or(self.zero_entry),
            grad_zero: other.grad_zero.or(self.grad_zero),
            eig_zero: other.eig_zero.or(self.eig_zero),
            dedupe_radius: other.dedupe_radius.or(self.dedupe_radius),
        }
    }
}

/// On-disk problem description (JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub s: usize,
    pub objective: ObjectiveSpec,
    #[serde(rename = "box")]
    pub bbox: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    pub fn tolerances(&self, overrides: &ToleranceOverrides) -> ToleranceSet<f64> {
        self.tolerances.merged(overrides).apply(ToleranceSet::default())
    }

    pub fn to_problem(&self, overrides: &ToleranceOverrides) -> Result<Problem<f64>> {
        let objective = self.objective.to_polynomial(self.n)?;
        let bbox = self.bbox.iter().map(|&[lo, hi]| Bounds::new(lo, hi)).collect();
        Problem::new(self.n, self.s, objective, bbox, self.tolerances(overrides))
    }

    /// A file describing `prob`, with both expression and term list.
    pub fn from_problem(prob: &Problem<f64>, tolerances: ToleranceOverrides, labels: BTreeMap<String, String>) -> Self {
        Self {
            n: prob.n(),
            s: prob.s(),
            objective: ObjectiveSpec::Both {
                expression: Some(prob.objective().to_string()),
                terms: Some(prob.objective().to_records()),
            },
            bbox: prob.bbox().iter().map(|b| [b.lower, b.upper]).collect(),
            tolerances,
            labels,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub tolerances: ToleranceOverrides,
    pub resolution: usize,
    pub perturb: Option<f64>,
    pub seed: u64,
    pub enumeration: EnumerationOptions,
    pub sample_radius: f64,
    pub samples: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tolerances: ToleranceOverrides::default(),
            resolution: DEFAULT_RESOLUTION,
            perturb: None,
            seed: 0,
            enumeration: EnumerationOptions::default(),
            sample_radius: 0.1,
            samples: 200,
        }
    }
}

/// Problem after applying tolerance overrides and the optional perturbation.
pub fn prepare_problem(file: &ProblemFile, opts: &AnalysisOptions) -> Result<Problem<f64>> {
    let prob = file.to_problem(&opts.tolerances)?;
    match opts.perturb {
        Some(eps) => perturb_problem(&prob, eps, opts.seed),
        None => Ok(prob),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

/// Cells of the normal Morse data at a nondegenerate point with `k` nonzeros:
/// `C(n-k-1, s-k)` cells, each of dimension `s - k + QI` after the tangential factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachedCells {
    pub p: usize,
    pub q: usize,
    pub count: usize,
    pub dimension: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub stationary: StationaryRecord<f64>,
    pub provenance: Option<Provenance<f64>>,
    /// Relaxation at the canonical `y` (absent for infeasible points).
    pub relaxation: Option<RelaxationRecord<f64>>,
    /// Relaxation at a user supplied `y`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_alternative: Option<RelaxationRecord<f64>>,
    pub bf_vector: Option<bool>,
    pub cw_minimum: Option<bool>,
    /// Sampled local minimality; withheld for degenerate points.
    pub local_min_sampled: Option<bool>,
    /// Sup-norm radius the sampling used.
    pub sample_radius: Option<f64>,
    /// Whether CC-SOSC at the canonical `y` implies a nondegenerate local
    /// minimizer here; only asked when the sparsity constraint is active.
    pub nondeg_from_sosc: Option<bool>,
    pub attached_cells: Option<AttachedCells>,
}

fn point_report(
    x: &[f64],
    prob: &Problem<f64>,
    opts: &AnalysisOptions,
    provenance: Option<Provenance<f64>>,
    alternative_y: Option<&[f64]>,
    others: &[Vec<f64>],
) -> Result<PointReport> {
    let stationary = classify_point(x, prob)?;
    if !stationary.feasible {
        return Ok(PointReport {
            stationary,
            provenance,
            relaxation: None,
            relaxation_alternative: None,
            bf_vector: None,
            cw_minimum: None,
            local_min_sampled: None,
            sample_radius: None,
            nondeg_from_sosc: None,
            attached_cells: None,
        });
    }
    let y = canonical_y(x, prob)?;
    let relaxation = Some(kkt_analysis(x, &y, prob)?);
    let relaxation_alternative = alternative_y.map(|y| kkt_analysis(x, y, prob)).transpose()?;
    let degenerate = stationary.class == PointClass::Degenerate;
    let sample_radius = (!degenerate).then(|| local_sample_radius(x, prob.tol(), opts.sample_radius, others));
    let local_min_sampled = sample_radius
        .map(|r| is_local_min_sampled(x, prob, r, opts.samples))
        .transpose()?;
    let k = stationary.support.k;
    let nondeg = if stationary.is_m_stationary && k == prob.s() {
        Some(nondeg_from_sosc(x, prob)?)
    } else {
        None
    };
    let attached_cells = stationary.qi.filter(|_| stationary.is_nondegenerate()).map(|qi| {
        let (p, q) = (prob.n() - k, prob.s() - k);
        AttachedCells {
            p,
            q,
            count: binomial(p - 1, q),
            dimension: q + qi,
        }
    });
    Ok(PointReport {
        bf_vector: Some(is_bf_vector(x, prob)?),
        cw_minimum: Some(is_cw_minimum(x, prob)?),
        stationary,
        provenance,
        relaxation,
        relaxation_alternative,
        local_min_sampled,
        sample_radius,
        nondeg_from_sosc: nondeg,
        attached_cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationSummary {
    pub counts: Counts,
    pub records: usize,
    pub supports_scheduled: usize,
    pub options: EnumerationOptions,
    pub completeness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySummary {
    /// Normal Morse data checks for every `(p, q)` met at a nondegenerate point.
    pub checks: Vec<NormalMorseReport>,
    pub all_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub seed: u64,
    pub perturbation: Option<f64>,
    /// The analysed problem, after any perturbation.
    pub problem: ProblemFile,
    pub tolerances: ToleranceSet<f64>,
    pub options: AnalysisOptions,
    pub enumeration: EnumerationSummary,
    pub points: Vec<PointReport>,
    pub morse: MorseReport<f64>,
    pub topology: TopologySummary,
}

pub fn analyze(file: &ProblemFile, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let prob = prepare_problem(file, opts)?;
    let enumeration = enumerate_m_stationary_with(&prob, &opts.enumeration)?;
    let all: Vec<Vec<f64>> = enumeration.records.iter().map(|r| r.point.clone()).collect();
    let points = enumeration
        .records
        .iter()
        .zip(&enumeration.provenance)
        .map(|(r, pv)| point_report(&r.point, &prob, opts, Some(pv.clone()), None, &all))
        .collect::<Result<Vec<_>>>()?;
    let morse = morse_report(&prob, &enumeration, opts.resolution)?;
    let mut pairs: Vec<(usize, usize)> = points
        .iter()
        .filter_map(|p| p.attached_cells.as_ref().map(|c| (c.p, c.q)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let checks = pairs
        .into_iter()
        .map(|(p, q)| verify_normal_morse_data(p, q))
        .collect::<Result<Vec<_>>>()?;
    let all_ok = checks.iter().all(|c| c.all_ok());
    let mut problem = ProblemFile::from_problem(&prob, file.tolerances, file.labels.clone());
    if opts.perturb.is_none() {
        problem.objective = file.objective.clone();
    }
    Ok(AnalysisReport {
        tool: ToolInfo::default(),
        seed: opts.seed,
        perturbation: opts.perturb,
        problem,
        tolerances: *prob.tol(),
        options: opts.clone(),
        enumeration: EnumerationSummary {
            counts: enumeration.counts,
            records: enumeration.records.len(),
            supports_scheduled: enumeration.supports_scheduled,
            options: enumeration.options,
            completeness: "exact critical points on one-dimensional supports; multistart Newton from a uniform grid on larger supports, where points whose basin misses all starts are not found".into(),
        },
        points,
        morse,
        topology: TopologySummary { checks, all_ok },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub tool: ToolInfo,
    pub tolerances: ToleranceSet<f64>,
    pub point: PointReport,
}

/// Full pointwise classification of `x`; infeasible points yield a record, not an error.
pub fn classify(file: &ProblemFile, x: &[f64], y: Option<&[f64]>, opts: &AnalysisOptions) -> Result<ClassifyReport> {
    let prob = prepare_problem(file, opts)?;
    Ok(ClassifyReport {
        tool: ToolInfo::default(),
        tolerances: *prob.tol(),
        point: point_report(x, &prob, opts, None, y, &[])?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: Vec<f64>,
    pub value: f64,
    pub class: PointClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub tool: ToolInfo,
    pub resolution: usize,
    pub critical_points: Vec<CriticalPoint>,
    pub curve: ComponentCurve<f64>,
    pub merge_checks: Vec<MergeCheck<f64>>,
    pub warnings: Vec<String>,
}

pub fn level_set(file: &ProblemFile, opts: &AnalysisOptions) -> Result<LevelSetReport> {
    let prob = prepare_problem(file, opts)?;
    let enumeration = enumerate_m_stationary_with(&prob, &opts.enumeration)?;
    let morse = morse_report(&prob, &enumeration, opts.resolution)?;
    Ok(LevelSetReport {
        tool: ToolInfo::default(),
        resolution: opts.resolution,
        critical_points: enumeration
            .records
            .iter()
            .map(|r| CriticalPoint {
                point: r.point.clone(),
                value: r.value,
                class: r.class,
            })
            .collect(),
        curve: morse.curve,
        merge_checks: morse.merge_checks,
        warnings: morse.warnings,
    })
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn class_name(c: PointClass) -> &'static str {
    match c {
        PointClass::LocalMin => "local minimizer",
        PointClass::SaddleTypeI => "saddle (type I)",
        PointClass::SaddleTypeII => "saddle (type II)",
        PointClass::HigherSaddle => "saddle (M-index >= 2)",
        PointClass::Degenerate => "degenerate",
        PointClass::NotStationary => "not M-stationary",
    }
}

fn write_point(out: &mut String, p: &PointReport) {
    let r = &p.stationary;
    let _ = writeln!(out, "point {}  f = {:.9}", fmt_point(&r.point), r.value);
    let _ = writeln!(
        out,
        "  class: {}  feasible: {}  k = {}  M-stationary: {}",
        class_name(r.class),
        r.feasible,
        r.support.k,
        r.is_m_stationary
    );
    let _ = writeln!(
        out,
        "  ND1: {:?}  ND2: {:?}  QI: {}  M-index: {}",
        r.nd1,
        r.nd2,
        fmt_opt(r.qi),
        fmt_opt(r.m_index)
    );
    for (label, rel) in [("relaxation", &p.relaxation), ("relaxation at given y", &p.relaxation_alternative)] {
        let Some(rel) = rel else { continue };
        let _ = writeln!(
            out,
            "  {label}: S-stationary {}  LICQ {}  KKT {}  strict complementarity {}  CC-SOSC {}",
            rel.is_s_stationary,
            rel.licq,
            rel.kkt_holds,
            rel.strict_complementarity,
            rel.cc_sosc.map_or("-".to_string(), |c| format!("{c:?}"))
        );
        if let (Some(mu), Some(lambda)) = (&rel.mu, &rel.lambda) {
            let _ = writeln!(out, "  multipliers: mu = {}  lambda = {}", fmt_point(mu), fmt_point(lambda));
        }
    }
    let _ = writeln!(
        out,
        "  BF: {}  CW: {}  sampled local min: {}{}  SOSC => nondegenerate min: {}",
        fmt_opt(p.bf_vector),
        fmt_opt(p.cw_minimum),
        fmt_opt(p.local_min_sampled),
        p.sample_radius.map_or(String::new(), |r| format!(" (radius {r:.2e})")),
        fmt_opt(p.nondeg_from_sosc)
    );
    if let Some(c) = &p.attached_cells {
        let _ = writeln!(out, "  attached cells: {} of dimension {}", c.count, c.dimension);
    }
}

pub fn render_classify_text(r: &ClassifyReport) -> String {
    let mut out = String::new();
    write_point(&mut out, &r.point);
    out
}

fn write_curve(out: &mut String, curve: &ComponentCurve<f64>, checks: &[MergeCheck<f64>]) {
    let _ = writeln!(out, "component curve:");
    for ((a, q), t) in curve.levels.iter().zip(&curve.q).zip(&curve.touches_boundary) {
        let _ = writeln!(out, "  a = {a:>12.6}  q = {q}{}", if *t { "  (reaches box boundary)" } else { "" });
    }
    for m in checks {
        let bound = m.bound.map_or("-".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"));
        let _ = writeln!(
            out,
            "  at f = {:.6}: dq = {:+}  bound {}  {}{}",
            m.value,
            m.observed,
            bound,
            match m.ok {
                Some(true) => "ok",
                Some(false) => "VIOLATED",
                None => "unchecked",
            },
            if m.coinciding { "  (coinciding values)" } else { "" }
        );
    }
}

pub fn render_analysis_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}  seed {}", r.tool.name, r.tool.version, r.seed);
    let _ = writeln!(out, "n = {}  s = {}  objective: {}", r.problem.n, r.problem.s, match &r.problem.objective {
        ObjectiveSpec::Expression(e) => e.clone(),
        ObjectiveSpec::Both { expression: Some(e), .. } => e.clone(),
        _ => "(term list)".into(),
    });
    if let Some(eps) = r.perturbation {
        let _ = writeln!(out, "perturbed with epsilon = {eps}");
    }
    let c = &r.enumeration.counts;
    let _ = writeln!(
        out,
        "{} M-stationary points: r = {}  r_I = {}  r_II = {}  higher = {}  degenerate = {}",
        r.enumeration.records, c.r, c.r_i, c.r_ii, c.n_higher, c.n_degenerate
    );
    for p in &r.points {
        write_point(&mut out, p);
    }
    let m = &r.morse;
    let _ = writeln!(
        out,
        "Morse relation: r_I + (n-s) r_II = {}  >=  r - 1 = {}  holds: {}",
        m.relation_lhs, m.relation_rhs, m.relation_holds
    );
    let _ = writeln!(
        out,
        "  connected top level set: {}  verdict: {}",
        m.hypothesis_met,
        match m.verdict {
            Some(true) => "confirmed",
            Some(false) => "VIOLATED",
            None => "not claimed",
        }
    );
    for w in &m.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
    write_curve(&mut out, &m.curve, &m.merge_checks);
    let _ = writeln!(out, "normal Morse data:");
    for t in &r.topology.checks {
        write_topology_row(&mut out, t);
    }
    out
}

pub fn render_level_set_text(r: &LevelSetReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "resolution {}", r.resolution);
    for c in &r.critical_points {
        let _ = writeln!(out, "critical {}  f = {:.9}  {}", fmt_point(&c.point), c.value, class_name(c.class));
    }
    write_curve(&mut out, &r.curve, &r.merge_checks);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn write_topology_row(out: &mut String, t: &NormalMorseReport) {
    let _ = writeln!(
        out,
        "  p = {:>2}  q = {:>2}  cells = {:>3}  count_ok = {}  contractible_ok = {}  minimal_ok = {}  collapsible = {}",
        t.p, t.q, t.cells, t.count_ok, t.contractible_ok, t.minimal_ok, t.collapsible
    );
}

pub fn render_topology_text(rows: &[NormalMorseReport]) -> String {
    let mut out = String::new();
    for t in rows {
        write_topology_row(&mut out, t);
    }
    let ok = rows.iter().filter(|t| t.all_ok()).count();
    let _ = writeln!(out, "{ok}/{} rows ok", rows.len());
    out
}
