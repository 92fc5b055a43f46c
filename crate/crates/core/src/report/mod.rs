//! Multi-point runs over one focal submanifold, the classification table,
//! and report output.

mod output;
mod table;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{family_from_key, IsoparFamily, Side};
use crate::geometry::{
    sample_focal_point, shape_operators_with, spectrum_check, FdMethod, DEFAULT_FD_STEP, FD_ERROR_LIMIT,
};
use crate::invariants::{
    classify_with, compute_invariants, decimal, ExpectedValues, InvariantReport, Verdict, ROUTE_AGREEMENT_TOL,
    SEMIPARALLEL_DEFECT_TOL, SEMIPARALLEL_NABLA_TOL,
};
use crate::numkit::seeded_rng;

pub use output::{emit, emit_table, render, render_table, CSV_HEADER};
pub use table::{
    classification_table, classification_table_with, parse_roster, roster, ClassificationRow, ClassificationTable,
    PublishedVerdict, RosterRow,
};

pub const REPORT_SCHEMA: &str = "focalforge-report/1";
pub const DEFAULT_NUM_POINTS: usize = 10;
/// Extra attempts per point after a failed sample.
pub const MAX_RETRIES: usize = 3;
pub const MIN_FD_STEP: f64 = 1e-5;
pub const MAX_FD_STEP: f64 = 1e-2;
/// Slack below published lower bounds.
pub const BOUND_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Text => "txt",
            other => other.as_str(),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" | "txt" => Ok(OutputFormat::Text),
            _ => Err(Error::Parse(format!("unknown output format `{s}` (json, csv or text)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Exact algebraic identities.
    #[serde(with = "decimal")]
    pub algebraic: f64,
    /// Quantities read off finite-difference shape operators.
    #[serde(with = "decimal")]
    pub fd: f64,
    #[serde(with = "decimal")]
    pub semiparallel_nabla: f64,
    #[serde(with = "decimal")]
    pub semiparallel_defect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-8,
            fd: FD_ERROR_LIMIT,
            semiparallel_nabla: SEMIPARALLEL_NABLA_TOL,
            semiparallel_defect: SEMIPARALLEL_DEFECT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub family_key: String,
    pub side: Side,
    pub num_points: usize,
    pub seed: u64,
    #[serde(with = "decimal")]
    pub fd_step: f64,
    pub tolerances: Tolerances,
    pub output_format: OutputFormat,
}

impl RunConfig {
    pub fn new(family_key: impl Into<String>, side: Side) -> Self {
        RunConfig {
            family_key: family_key.into(),
            side,
            num_points: DEFAULT_NUM_POINTS,
            seed: 0,
            fd_step: DEFAULT_FD_STEP,
            tolerances: Tolerances::default(),
            output_format: OutputFormat::Json,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points == 0 {
            return Err(Error::contract("num_points must be at least 1"));
        }
        if !(MIN_FD_STEP..=MAX_FD_STEP).contains(&self.fd_step) {
            return Err(Error::contract(format!(
                "fd_step {:e} outside [{MIN_FD_STEP:e}, {MAX_FD_STEP:e}]",
                self.fd_step
            )));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("algebraic", t.algebraic),
            ("fd", t.fd),
            ("semiparallel_nabla", t.semiparallel_nabla),
            ("semiparallel_defect", t.semiparallel_defect),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::contract(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Seed for attempt `attempt` of point `index`, drawn from its own ChaCha
/// stream so points never share randomness.
pub fn point_seed(base: u64, index: usize, attempt: usize) -> u64 {
    let mut rng = seeded_rng(base);
    rng.set_stream((index * (MAX_RETRIES + 1) + attempt) as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOutcome {
    pub index: usize,
    pub seed: u64,
    pub attempts: usize,
    #[serde(with = "decimal")]
    pub spectrum_deviation: f64,
    pub invariants: InvariantReport,
}

/// A point whose evaluation tripped a numerical-integrity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

/// Spread of one scalar over the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub name: String,
    #[serde(with = "decimal")]
    pub mean: f64,
    #[serde(with = "decimal")]
    pub min: f64,
    #[serde(with = "decimal")]
    pub max: f64,
    /// `max |value - mean|`.
    #[serde(with = "decimal")]
    pub max_deviation: f64,
}

/// One expected-versus-measured comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    #[serde(with = "decimal")]
    pub measured: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub schema: String,
    pub family_key: String,
    pub family_name: String,
    pub side: Side,
    pub g: usize,
    pub m1: usize,
    pub m2: usize,
    pub ambient_dim: usize,
    pub n: usize,
    pub p: usize,
    pub config: RunConfig,
    pub points: Vec<PointOutcome>,
    pub failures: Vec<PointFailure>,
    pub summary: Vec<ScalarSummary>,
    pub expected: ExpectedValues,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl FamilyReport {
    pub fn integrity_ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary_of(&self, name: &str) -> Option<&ScalarSummary> {
        self.summary.iter().find(|s| s.name == name)
    }
}

fn is_integrity(e: &Error) -> bool {
    matches!(e, Error::Integrity(_) | Error::Precision { .. } | Error::StepTooLarge { .. })
}

fn evaluate_point(family: &IsoparFamily, config: &RunConfig, seed: u64) -> Result<(f64, InvariantReport)> {
    let point = sample_focal_point(family, config.side, seed)?;
    let ops = shape_operators_with(family, &point, config.fd_step, FdMethod::RichardsonExtrapolated)?;
    let spectrum = spectrum_check(&ops, family.g, family.m1(), family.m2(), config.side)?;
    let mut inv = compute_invariants(&ops, family.g, family.m1(), family.m2(), config.side)?;
    let t = &config.tolerances;
    inv.verdict =
        classify_with(inv.nabla_b_sq_simons, inv.semiparallel_defect, t.semiparallel_nabla, t.semiparallel_defect);
    Ok((spectrum, inv))
}

fn run_point(family: &IsoparFamily, config: &RunConfig, index: usize) -> Result<PointOutcome> {
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let seed = point_seed(config.seed, index, attempt);
        match evaluate_point(family, config, seed) {
            Ok((spectrum_deviation, invariants)) => {
                return Ok(PointOutcome { index, seed, attempts: attempt + 1, spectrum_deviation, invariants })
            }
            Err(e @ (Error::Sampling(_) | Error::Degenerate(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    let cause = last.map(|e| e.to_string()).unwrap_or_default();
    Err(Error::Sampling(format!("point {index} failed after {MAX_RETRIES} retries: {cause}")))
}

fn summarize(name: &str, values: &[f64]) -> ScalarSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_deviation = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    ScalarSummary { name: name.to_string(), mean, min, max, max_deviation }
}

fn summaries(points: &[PointOutcome]) -> Vec<ScalarSummary> {
    let Some(first) = points.first() else { return Vec::new() };
    let mut names: Vec<&'static str> = first.invariants.scalars().iter().map(|(n, _)| *n).collect();
    names.extend(["gram_off_diagonal", "ot_identity_residual", "spectrum_deviation", "fd_error_estimate"]);
    names
        .into_iter()
        .map(|name| {
            let values: Vec<f64> = points.iter().map(|pt| point_scalar(pt, name)).collect();
            summarize(name, &values)
        })
        .collect()
}

/// A named scalar of one point; `NaN` if the point does not carry it.
pub(crate) fn point_scalar(pt: &PointOutcome, name: &str) -> f64 {
    let inv = &pt.invariants;
    match name {
        "gram_off_diagonal" => inv.gram_off_diagonal(),
        "ot_identity_residual" => inv.ot_identity_residuals.max(),
        "spectrum_deviation" => pt.spectrum_deviation,
        "fd_error_estimate" => inv.fd_error_estimate,
        _ => inv.scalars().into_iter().find(|(n, _)| *n == name).map_or(f64::NAN, |(_, v)| v),
    }
}

fn relative_gap(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs().max(1.0)
}

type Getter<'a> = &'a dyn Fn(&PointOutcome) -> f64;

fn worst(points: &[PointOutcome], get: Getter) -> f64 {
    points.iter().map(get).fold(0.0, f64::max)
}

fn mean(points: &[PointOutcome], get: Getter) -> f64 {
    points.iter().map(get).sum::<f64>() / points.len() as f64
}

fn exact_check(points: &[PointOutcome], name: &str, target: f64, tol: f64, get: Getter) -> Check {
    Check {
        name: name.to_string(),
        expected: format!("{target:.9}"),
        measured: mean(points, get),
        pass: worst(points, &|pt| relative_gap(get(pt), target)) < tol,
    }
}

fn bound_check(points: &[PointOutcome], name: &str, lower: f64, get: Getter) -> Check {
    let low = points.iter().map(get).fold(f64::INFINITY, f64::min);
    Check {
        name: name.to_string(),
        expected: format!(">= {lower:.9}"),
        measured: low,
        pass: low >= lower - BOUND_SLACK,
    }
}

fn small_check(points: &[PointOutcome], name: &str, limit: f64, get: Getter) -> Check {
    let w = worst(points, get);
    Check { name: name.to_string(), expected: format!("< {limit:.1e}"), measured: w, pass: w < limit }
}

fn build_checks(points: &[PointOutcome], expected: &ExpectedValues, tol: &Tolerances) -> Vec<Check> {
    let mut checks = Vec::new();
    if points.is_empty() {
        return checks;
    }
    if let Some(b) = expected.b_norm_sq {
        checks.push(exact_check(points, "b_norm_sq", b, tol.fd, &|pt| pt.invariants.b_norm_sq));
    }
    if let Some(d) = expected.gram_diagonal {
        let diag_gap = |pt: &PointOutcome| {
            let gm = &pt.invariants.gram;
            (0..gm.nrows()).map(|a| relative_gap(gm[(a, a)], d)).fold(0.0, f64::max)
        };
        checks.push(Check {
            name: "gram_diagonal".into(),
            expected: format!("{d:.9}"),
            measured: mean(points, &|pt| {
                let gm = &pt.invariants.gram;
                gm.trace() / gm.nrows().max(1) as f64
            }),
            pass: worst(points, &diag_gap) < tol.fd,
        });
    }
    if let Some(r) = expected.rho_perp_sq {
        checks.push(exact_check(points, "rho_perp_sq", r, tol.fd, &|pt| pt.invariants.rho_perp_sq));
    }
    if let Some(nb) = expected.nabla_b_sq {
        let limit = tol.semiparallel_nabla.max(tol.fd);
        let mut c = small_check(points, "nabla_b_sq", limit, &|pt| (pt.invariants.nabla_b_sq_simons - nb).abs());
        c.expected = format!("{nb:.9}");
        c.measured = mean(points, &|pt| pt.invariants.nabla_b_sq_simons);
        checks.push(c);
    }
    if let Some(lb) = expected.rho_perp_sq_lower_bound {
        checks.push(bound_check(points, "rho_perp_sq", lb, &|pt| pt.invariants.rho_perp_sq));
    }
    if let Some(lb) = expected.nabla_b_sq_lower_bound {
        checks.push(bound_check(points, "nabla_b_sq", lb, &|pt| pt.invariants.nabla_b_sq_simons));
    }
    checks.push(small_check(points, "gram_off_diagonal", tol.fd, &|pt| pt.invariants.gram_off_diagonal()));
    checks.push(small_check(points, "spectrum_deviation", tol.fd, &|pt| pt.spectrum_deviation));
    checks.push(small_check(points, "ot_identity_residual", tol.fd, &|pt| pt.invariants.ot_identity_residuals.max()));
    if points[0].invariants.nabla_b_sq_closed_g4.is_some() {
        checks.push(small_check(points, "closed_route_gap", ROUTE_AGREEMENT_TOL, &|pt| {
            let inv = &pt.invariants;
            inv.nabla_b_sq_closed_g4.map_or(f64::INFINITY, |c| (c - inv.nabla_b_sq_simons).abs())
        }));
    }
    checks
}

/// Samples `num_points` points, evaluates them in parallel and aggregates
/// the results in point order.
pub fn run_family(config: &RunConfig) -> Result<FamilyReport> {
    config.validate()?;
    let family = family_from_key(&config.family_key)?;
    run_family_on(&family, config)
}

/// [`run_family`] on an already built family.
pub fn run_family_on(family: &IsoparFamily, config: &RunConfig) -> Result<FamilyReport> {
    config.validate()?;
    let outcomes: Vec<Result<PointOutcome>> =
        (0..config.num_points).into_par_iter().map(|i| run_point(family, config, i)).collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(pt) => points.push(pt),
            Err(e) if is_integrity(&e) => {
                failures.push(PointFailure { index, seed: point_seed(config.seed, index, 0), message: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }

    let expected = points.first().map_or_else(
        || crate::invariants::expected_values(family.g, family.m1(), family.m2(), config.side),
        |pt| pt.invariants.expected.clone(),
    );
    let checks = build_checks(&points, &expected, &config.tolerances);
    let verdict = if failures.is_empty() {
        Verdict::combine(points.iter().map(|pt| pt.invariants.verdict))
    } else {
        Verdict::Indeterminate
    };
    Ok(FamilyReport {
        schema: REPORT_SCHEMA.to_string(),
        family_key: family.key.clone(),
        family_name: family.name.clone(),
        side: config.side,
        g: family.g,
        m1: family.m1(),
        m2: family.m2(),
        ambient_dim: family.ambient_dim,
        n: family.focal_dim(config.side),
        p: family.codim(config.side),
        config: config.clone(),
        summary: summaries(&points),
        points,
        failures,
        expected,
        checks,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new("grassmann22", Side::Plus);
        assert!(c.validate().is_ok());
        c.num_points = 0;
        assert!(matches!(c.validate(), Err(Error::Contract(_))));
        c.num_points = 1;
        c.fd_step = 0.1;
        assert!(matches!(c.validate(), Err(Error::Contract(_))));
        c.fd_step = 1e-3;
        c.tolerances.fd = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn point_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..8).flat_map(|i| (0..=MAX_RETRIES).map(move |a| point_seed(7, i, a))).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_eq!(point_seed(7, 3, 1), point_seed(7, 3, 1));
        assert_ne!(point_seed(7, 3, 1), point_seed(8, 3, 1));
    }

    #[test]
    fn unknown_family_is_an_error() {
        let c = RunConfig::new("nope", Side::Plus);
        assert!(matches!(run_family(&c), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn small_run_on_the_one_two_family() {
        let mut c = RunConfig::new("otfkm:m=1,k=4", Side::Minus);
        c.num_points = 3;
        c.seed = 11;
        let r = run_family(&c).unwrap();
        assert_eq!((r.g, r.m1, r.m2, r.n, r.p), (4, 1, 2, 4, 3));
        assert_eq!(r.points.len(), 3);
        assert!(r.integrity_ok());
        assert!(r.checks_pass(), "{:?}", r.checks);
        assert_eq!(r.verdict, Verdict::Yes);
        let b = r.summary_of("b_norm_sq").unwrap();
        assert!((b.mean - 6.0).abs() < 1e-6 && b.max_deviation < 1e-6);
    }

    #[test]
    fn output_format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!("txt".parse::<OutputFormat>().unwrap(), OutputFormat::Text);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
