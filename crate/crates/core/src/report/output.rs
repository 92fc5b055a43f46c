//! JSON, CSV and text rendering of reports and tables.

use std::fs;
use std::path::Path;

use super::{point_scalar, ClassificationTable, FamilyReport, OutputFormat};
use crate::error::{Error, Result};
use crate::invariants::decimal;

pub const CSV_HEADER: [&str; 18] = [
    "row",
    "index",
    "seed",
    "attempts",
    "status",
    "n",
    "p",
    "b_norm_sq",
    "rho_perp_sq",
    "nabla_b_sq_simons",
    "nabla_b_sq_closed_g4",
    "semiparallel_defect",
    "einstein_defect",
    "gram_off_diagonal",
    "ot_identity_residual",
    "spectrum_deviation",
    "fd_error_estimate",
    "verdict",
];

/// Columns 7..17 of [`CSV_HEADER`], as summary names.
const CSV_SCALARS: [&str; 10] = [
    "b_norm_sq",
    "rho_perp_sq",
    "nabla_b_sq_simons",
    "nabla_b_sq_closed_g4",
    "semiparallel_defect",
    "einstein_defect",
    "gram_off_diagonal",
    "ot_identity_residual",
    "spectrum_deviation",
    "fd_error_estimate",
];

const TABLE_HEADER: [&str; 15] = [
    "family_key",
    "side",
    "g",
    "m1",
    "m2",
    "b_norm_sq",
    "b_norm_sq_expected",
    "rho_perp_sq",
    "rho_perp_sq_expected",
    "rho_perp_sq_lower_bound",
    "nabla_b_sq",
    "semiparallel_defect",
    "semiparallel_verdict",
    "published_verdict",
    "agreement",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        decimal::format(v)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(format!("csv: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn report_csv(report: &FamilyReport) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(CSV_HEADER).map_err(csv_err)?;

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for pt in &report.points {
        let inv = &pt.invariants;
        let mut rec = vec![
            "point".to_string(),
            pt.index.to_string(),
            pt.seed.to_string(),
            pt.attempts.to_string(),
            "ok".to_string(),
            inv.n.to_string(),
            inv.p.to_string(),
        ];
        rec.extend(CSV_SCALARS.iter().map(|name| num(point_scalar(pt, name))));
        rec.push(inv.verdict.to_string());
        rows.push((pt.index, rec));
    }
    for f in &report.failures {
        let mut rec =
            vec!["point".to_string(), f.index.to_string(), f.seed.to_string(), String::new(), f.message.clone()];
        rec.resize(CSV_HEADER.len(), String::new());
        rows.push((f.index, rec));
    }
    rows.sort_by_key(|(i, _)| *i);
    for (_, rec) in rows {
        w.write_record(&rec).map_err(csv_err)?;
    }

    for (label, pick) in [("mean", 0), ("max_deviation", 1)] {
        let mut rec = vec![
            label.to_string(),
            String::new(),
            report.config.seed.to_string(),
            String::new(),
            if report.integrity_ok() { "ok".into() } else { "integrity-error".into() },
            report.n.to_string(),
            report.p.to_string(),
        ];
        rec.extend(CSV_SCALARS.iter().map(|name| {
            report.summary_of(name).map_or(String::new(), |s| num(if pick == 0 { s.mean } else { s.max_deviation }))
        }));
        rec.push(report.verdict.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish_csv(w)
}

/// Left-aligned columns separated by two spaces.
fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            line.extend(std::iter::repeat_n(' ', widths[c] - cell.chars().count()));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn short(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v:.6e}")
    }
}

fn mark(pass: bool) -> String {
    if pass { "pass" } else { "FAIL" }.to_string()
}

fn report_text(report: &FamilyReport) -> String {
    let mut out = format!(
        "{}  side {}\n{} (g={}, m1={}, m2={}), ambient R^{}, n={}, p={}\n{} of {} points, seed {}, fd step {:.1e}\n\n",
        report.family_key,
        report.side,
        report.family_name,
        report.g,
        report.m1,
        report.m2,
        report.ambient_dim,
        report.n,
        report.p,
        report.points.len(),
        report.config.num_points,
        report.config.seed,
        report.config.fd_step,
    );
    let mut rows = vec![vec!["check".to_string(), "expected".into(), "measured".into(), "status".into()]];
    for c in &report.checks {
        rows.push(vec![c.name.clone(), c.expected.clone(), short(c.measured), mark(c.pass)]);
    }
    out.push_str(&aligned(&rows));
    out.push('\n');

    let mut rows = vec![vec!["scalar".to_string(), "mean".into(), "min".into(), "max".into(), "max deviation".into()]];
    for s in &report.summary {
        rows.push(vec![s.name.clone(), short(s.mean), short(s.min), short(s.max), short(s.max_deviation)]);
    }
    out.push_str(&aligned(&rows));
    for f in &report.failures {
        out.push_str(&format!("\npoint {} (seed {}): {}", f.index, f.seed, f.message));
    }
    out.push_str(&format!("\nsemiparallel: {}\n", report.verdict));
    out
}

pub fn render(report: &FamilyReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        OutputFormat::Csv => report_csv(report),
        OutputFormat::Text => Ok(report_text(report)),
    }
}

fn table_csv(table: &ClassificationTable) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(TABLE_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.family_key.clone(),
            r.side.to_string(),
            r.g.to_string(),
            r.m1.to_string(),
            r.m2.to_string(),
            num(r.b_norm_sq),
            opt(r.b_norm_sq_expected),
            num(r.rho_perp_sq),
            opt(r.rho_perp_sq_expected),
            opt(r.rho_perp_sq_lower_bound),
            num(r.nabla_b_sq),
            num(r.semiparallel_defect),
            r.semiparallel_verdict.to_string(),
            r.published_verdict.to_string(),
            r.agreement.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn table_text(table: &ClassificationTable) -> String {
    let fixed = |v: f64| if v.is_nan() { "-".to_string() } else { format!("{v:.4}") };
    let mut rows = vec![[
        "family",
        "side",
        "(m1,m2)",
        "|B|^2",
        "expected",
        "rho_perp^2",
        "expected",
        "|nabla B|^2",
        "defect",
        "measured",
        "published",
        "",
    ]
    .map(String::from)
    .to_vec()];
    for r in &table.rows {
        let rho_expected = match (r.rho_perp_sq_expected, r.rho_perp_sq_lower_bound) {
            (Some(v), _) => fixed(v),
            (None, Some(b)) => format!(">= {}", fixed(b)),
            (None, None) => "-".into(),
        };
        rows.push(vec![
            r.family_key.clone(),
            r.side.to_string(),
            format!("({},{})", r.m1, r.m2),
            fixed(r.b_norm_sq),
            r.b_norm_sq_expected.map_or("-".into(), fixed),
            fixed(r.rho_perp_sq),
            rho_expected,
            format!("{:.3e}", r.nabla_b_sq),
            format!("{:.3e}", r.semiparallel_defect),
            r.semiparallel_verdict.to_string(),
            r.published_verdict.to_string(),
            if r.published_verdict == super::PublishedVerdict::OutOfScope {
                ""
            } else {
                if r.agreement {
                    "ok"
                } else {
                    "MISMATCH"
                }
            }
            .to_string(),
        ]);
    }
    let mut out = aligned(&rows);
    for g in &table.group_failures {
        out.push_str(&format!("group {g}\n"));
    }
    let agree = table.rows.iter().filter(|r| r.agreement).count();
    out.push_str(&format!(
        "\n{agree} of {} rows agree; {} points per row, seed {}\n",
        table.rows.len(),
        table.num_points,
        table.seed
    ));
    out
}

pub fn render_table(table: &ClassificationTable, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(table)? + "\n"),
        OutputFormat::Csv => table_csv(table),
        OutputFormat::Text => Ok(table_text(table)),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes `report` to `path` in `format`.
pub fn emit(report: &FamilyReport, format: OutputFormat, path: &Path) -> Result<()> {
    write(path, &render(report, format)?)
}

pub fn emit_table(table: &ClassificationTable, format: OutputFormat, path: &Path) -> Result<()> {
    write(path, &render_table(table, format)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Side;
    use crate::report::{run_family, RunConfig};

    fn small_report() -> FamilyReport {
        let mut c = RunConfig::new("geodesic2:p=2,q=1", Side::Minus);
        c.num_points = 3;
        run_family(&c).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let r = small_report();
        let text = render(&r, OutputFormat::Json).unwrap();
        let back: FamilyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(text.contains("\"schema\": \"focalforge-report/1\""));
    }

    #[test]
    fn csv_rows_have_the_header_width() {
        let text = render(&small_report(), OutputFormat::Csv).unwrap();
        assert!(!text.contains('\r'));
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap().len(), CSV_HEADER.len());
        let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3 + 2);
        assert!(rows.iter().all(|r| r.len() == CSV_HEADER.len()));
        assert_eq!(&rows[3][0], "mean");
    }

    #[test]
    fn text_marks_each_check() {
        let text = render(&small_report(), OutputFormat::Text).unwrap();
        assert!(text.contains("b_norm_sq") && text.contains("pass"));
        assert!(!text.contains("FAIL"));
        assert!(text.ends_with("semiparallel: yes\n"));
    }

    #[test]
    fn emit_reports_the_path_on_failure() {
        let r = small_report();
        let bad = Path::new("/nonexistent-dir/report.json");
        match emit(&r, OutputFormat::Json, bad) {
            Err(Error::Io { path, .. }) => assert_eq!(path, bad),
            other => panic!("expected an I/O error, got {other:?}"),
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render(&small_report(), OutputFormat::Csv).unwrap();
        let b = render(&small_report(), OutputFormat::Csv).unwrap();
        assert_eq!(a, b);
    }
}
