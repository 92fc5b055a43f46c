//! The classification roster and table.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{run_family, FamilyReport, RunConfig, REPORT_SCHEMA};
use crate::error::{Error, Result};
use crate::families::Side;
use crate::invariants::{decimal, decimal_opt, Verdict};

const ROSTER: &str = include_str!("../../roster.toml");

/// Published verdict for a roster row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PublishedVerdict {
    Yes,
    No,
    OutOfScope,
}

impl PublishedVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PublishedVerdict::Yes => "yes",
            PublishedVerdict::No => "no",
            PublishedVerdict::OutOfScope => "out-of-scope",
        }
    }

    /// `None` when out of scope.
    pub fn agrees_with(self, measured: Verdict) -> Option<bool> {
        match self {
            PublishedVerdict::Yes => Some(measured == Verdict::Yes),
            PublishedVerdict::No => Some(measured == Verdict::No),
            PublishedVerdict::OutOfScope => None,
        }
    }
}

impl fmt::Display for PublishedVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterRow {
    pub key: String,
    pub side: Side,
    pub expected: PublishedVerdict,
    #[serde(default)]
    pub group: Option<String>,
}

#[derive(Deserialize)]
struct RosterFile {
    row: Vec<RosterRow>,
}

pub fn parse_roster(text: &str) -> Result<Vec<RosterRow>> {
    let file: RosterFile = toml::from_str(text).map_err(|e| Error::Parse(format!("roster: {e}")))?;
    Ok(file.row)
}

/// The checked-in roster.
pub fn roster() -> Result<Vec<RosterRow>> {
    parse_roster(ROSTER)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub family_key: String,
    pub side: Side,
    pub g: usize,
    pub m1: usize,
    pub m2: usize,
    #[serde(with = "decimal")]
    pub b_norm_sq: f64,
    #[serde(with = "decimal_opt")]
    pub b_norm_sq_expected: Option<f64>,
    #[serde(with = "decimal")]
    pub rho_perp_sq: f64,
    #[serde(with = "decimal_opt")]
    pub rho_perp_sq_expected: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub rho_perp_sq_lower_bound: Option<f64>,
    #[serde(with = "decimal")]
    pub nabla_b_sq: f64,
    #[serde(with = "decimal")]
    pub semiparallel_defect: f64,
    pub semiparallel_verdict: Verdict,
    pub published_verdict: PublishedVerdict,
    /// `true` for out-of-scope rows.
    pub agreement: bool,
    pub group: Option<String>,
    pub checks_pass: bool,
}

impl ClassificationRow {
    fn from_report(row: &RosterRow, report: &FamilyReport) -> Self {
        let mean = |name: &str| report.summary_of(name).map_or(f64::NAN, |s| s.mean);
        let max = |name: &str| report.summary_of(name).map_or(f64::NAN, |s| s.max);
        let verdict = report.verdict;
        ClassificationRow {
            family_key: report.family_key.clone(),
            side: report.side,
            g: report.g,
            m1: report.m1,
            m2: report.m2,
            b_norm_sq: mean("b_norm_sq"),
            b_norm_sq_expected: report.expected.b_norm_sq,
            rho_perp_sq: mean("rho_perp_sq"),
            rho_perp_sq_expected: report.expected.rho_perp_sq,
            rho_perp_sq_lower_bound: report.expected.rho_perp_sq_lower_bound,
            nabla_b_sq: max("nabla_b_sq_simons"),
            semiparallel_defect: max("semiparallel_defect"),
            semiparallel_verdict: verdict,
            published_verdict: row.expected,
            agreement: row.expected.agrees_with(verdict).unwrap_or(true),
            group: row.group.clone(),
            checks_pass: report.checks_pass() && report.integrity_ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub schema: String,
    pub seed: u64,
    pub num_points: usize,
    pub rows: Vec<ClassificationRow>,
    /// Groups whose rows do not contain exactly one measured "yes".
    pub group_failures: Vec<String>,
}

impl ClassificationTable {
    /// Every in-scope row agrees and every group has exactly one "yes".
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agreement) && self.group_failures.is_empty()
    }

    pub fn row(&self, key: &str, side: Side) -> Option<&ClassificationRow> {
        self.rows.iter().find(|r| r.family_key == key && r.side == side)
    }
}

/// Runs the checked-in roster.
pub fn classification_table(seed: u64) -> Result<ClassificationTable> {
    classification_table_with(&roster()?, seed, super::DEFAULT_NUM_POINTS)
}

pub fn classification_table_with(rows: &[RosterRow], seed: u64, num_points: usize) -> Result<ClassificationTable> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut config = RunConfig::new(row.key.clone(), row.side);
        config.seed = seed;
        config.num_points = num_points;
        let report = run_family(&config)?;
        out.push(ClassificationRow::from_report(row, &report));
    }
    let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &out {
        if let Some(g) = &r.group {
            *groups.entry(g.as_str()).or_default() += usize::from(r.semiparallel_verdict == Verdict::Yes);
        }
    }
    let group_failures = groups
        .into_iter()
        .filter(|(_, yes)| *yes != 1)
        .map(|(g, yes)| format!("{g}: {yes} rows semiparallel, expected exactly 1"))
        .collect();
    Ok(ClassificationTable { schema: REPORT_SCHEMA.to_string(), seed, num_points, rows: out, group_failures })
}
