//! Algebraic invariants of a set of shape operators: `||B||^2`, the Gram
//! matrix, normal scalar curvature, both routes to `||nabla-bar B||^2`, the
//! semiparallelity tensor and the Ricci tensor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Side;
use crate::geometry::ShapeOperatorSet;
use crate::numkit::{commutator_norm_sq, within, Mat};

/// `nabla_b_sq_simons` below this (together with the defect) means
/// semiparallel.
pub const SEMIPARALLEL_NABLA_TOL: f64 = 1e-3;
pub const SEMIPARALLEL_DEFECT_TOL: f64 = 1e-4;
/// Gap factor between the "yes" and "no" bands.
pub const VERDICT_GAP: f64 = 10.0;
/// Tolerance of the two exact rearrangements checked internally.
pub const RHO_EXPANSION_TOL: f64 = 1e-6;
pub const ROUTE_AGREEMENT_TOL: f64 = 1e-4;

/// `sum_alpha tr(A_alpha^2)`.
pub fn b_norm_sq(ops: &ShapeOperatorSet) -> f64 {
    ops.ops.iter().map(|a| a.norm_squared()).sum()
}

/// `<A_alpha, A_beta> = tr(A_alpha A_beta)`.
pub fn gram(ops: &ShapeOperatorSet) -> Mat {
    let p = ops.p();
    let mut g = Mat::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = ops.ops[a].dot(&ops.ops[b]);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// `(rho-perp)^2 = sum_{alpha,beta} ||[A_alpha, A_beta]||^2`, checked against
/// `2 tr sum A_a^2 A_b^2 - 2 tr sum (A_a A_b)^2`.
pub fn rho_perp_sq(ops: &ShapeOperatorSet) -> Result<f64> {
    let mut direct = 0.0;
    let mut squares = 0.0;
    let mut products = 0.0;
    let sq: Vec<Mat> = ops.ops.iter().map(|a| a * a).collect();
    for (a, aa) in ops.ops.iter().enumerate() {
        for (b, bb) in ops.ops.iter().enumerate() {
            direct += commutator_norm_sq(aa, bb)?;
            squares += sq[a].dot(&sq[b]);
            let ab = aa * bb;
            products += ab.dot(&ab.transpose());
        }
    }
    let expansion = 2.0 * squares - 2.0 * products;
    if !within(direct, expansion, RHO_EXPANSION_TOL, squares.abs() + products.abs()) {
        return Err(Error::Integrity(format!(
            "normal curvature expansion mismatch: {direct:.15e} vs {expansion:.15e}"
        )));
    }
    Ok(direct)
}

/// Residuals of the algebraic identities satisfied by focal shape operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OtIdentityResiduals {
    /// `max ||A_a^3 - A_a||` and
    /// `max_{a != b} ||A_b^2 A_a + A_a A_b^2 + A_b A_a A_b - A_a||`.
    Quartic {
        #[serde(with = "decimal")]
        cube: f64,
        #[serde(with = "decimal")]
        mixed: f64,
    },
    /// `max_{a != b} ||A_a A_b + A_b A_a||` and `max ||A_a^2 - Id/3||`.
    Cubic {
        #[serde(with = "decimal")]
        anticommutator: f64,
        #[serde(with = "decimal")]
        square: f64,
    },
}

impl OtIdentityResiduals {
    pub fn max(&self) -> f64 {
        match *self {
            OtIdentityResiduals::Quartic { cube, mixed } => cube.max(mixed),
            OtIdentityResiduals::Cubic { anticommutator, square } => anticommutator.max(square),
        }
    }
}

/// Identity residuals for `g = 3` (cubic identities) or `g = 2, 4` (the
/// quartic ones, trivially zero when `g = 2`).
pub fn ot_identity_residuals(ops: &ShapeOperatorSet, g: usize) -> Result<OtIdentityResiduals> {
    let n = ops.n();
    let id = Mat::identity(n, n);
    let pairs = || (0..ops.p()).flat_map(move |a| (0..ops.p()).filter(move |&b| b != a).map(move |b| (a, b)));
    match g {
        2 | 4 => {
            let cube = ops.ops.iter().map(|a| (a * a * a - a).norm()).fold(0.0, f64::max);
            let mixed = pairs()
                .map(|(a, b)| {
                    let (x, y) = (&ops.ops[a], &ops.ops[b]);
                    let yy = y * y;
                    (&yy * x + x * &yy + y * x * y - x).norm()
                })
                .fold(0.0, f64::max);
            Ok(OtIdentityResiduals::Quartic { cube, mixed })
        }
        3 => {
            let anticommutator = pairs()
                .map(|(a, b)| {
                    let (x, y) = (&ops.ops[a], &ops.ops[b]);
                    (x * y + y * x).norm()
                })
                .fold(0.0, f64::max);
            let square = ops.ops.iter().map(|a| (a * a - &id / 3.0).norm()).fold(0.0, f64::max);
            Ok(OtIdentityResiduals::Cubic { anticommutator, square })
        }
        _ => Err(Error::contract(format!("identity residuals are defined for g in {{2,3,4}}, got {g}"))),
    }
}

/// Simons formula with constant `||B||^2`:
/// `sum <A_a,A_b>^2 + (rho-perp)^2 - n ||B||^2`.
pub fn nabla_b_sq_simons(n: usize, b_norm_sq: f64, gram: &Mat, rho_perp_sq: f64) -> f64 {
    gram.norm_squared() + rho_perp_sq - n as f64 * b_norm_sq
}

/// `6 tr((sum A_a^2)^2) - 6 m2 (m1+1)(m1+2)` on the plus side, indices
/// swapped on the minus side (`g = 4` only).
pub fn nabla_b_sq_closed_g4(ops: &ShapeOperatorSet, m1: usize, m2: usize, side: Side) -> f64 {
    let s = sum_of_squares(ops);
    let (a, b) = match side {
        Side::Plus => (m1 as f64, m2 as f64),
        Side::Minus => (m2 as f64, m1 as f64),
    };
    6.0 * s.norm_squared() - 6.0 * b * (a + 1.0) * (a + 2.0)
}

/// Closed `g = 4` value, required to agree with the Simons route.
pub fn nabla_b_sq_closed_g4_checked(
    ops: &ShapeOperatorSet,
    m1: usize,
    m2: usize,
    side: Side,
    simons: f64,
) -> Result<f64> {
    let closed = nabla_b_sq_closed_g4(ops, m1, m2, side);
    if !within(closed, simons, ROUTE_AGREEMENT_TOL, simons) {
        return Err(Error::Integrity(format!(
            "closed-form nabla B ({closed:.10e}) disagrees with the Simons route ({simons:.10e})"
        )));
    }
    Ok(closed)
}

/// `sum_alpha A_alpha^2`.
pub fn sum_of_squares(ops: &ShapeOperatorSet) -> Mat {
    let n = ops.n();
    let mut s = Mat::zeros(n, n);
    for a in &ops.ops {
        s += a * a;
    }
    s
}

/// Tangent curvature from the Gauss equation as the matrix
/// `K[k][m] = <R(e_i, e_j) e_k, e_m>`.
fn curvature_slice(ops: &ShapeOperatorSet, i: usize, j: usize) -> Mat {
    let n = ops.n();
    let mut k = Mat::zeros(n, n);
    k[(j, i)] += 1.0;
    k[(i, j)] -= 1.0;
    for a in &ops.ops {
        let ri = a.row(i).transpose();
        let rj = a.row(j).transpose();
        k.ger(1.0, &rj, &ri, 1.0);
        k.ger(-1.0, &ri, &rj, 1.0);
    }
    k
}

/// `sum_{i,j,k,l,beta} <(R(e_i,e_j) . B)(e_k, e_l), xi_beta>^2`, with the
/// tangent curvature from the Gauss equation and the normal curvature from
/// the Ricci equation `<R-perp(X,Y) xi_a, xi_b> = <[A_a, A_b] X, Y>`.
pub fn semiparallel_defect(ops: &ShapeOperatorSet) -> f64 {
    let n = ops.n();
    let p = ops.p();
    let comm: Vec<Vec<Mat>> =
        (0..p).map(|a| (0..p).map(|b| &ops.ops[a] * &ops.ops[b] - &ops.ops[b] * &ops.ops[a]).collect()).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let k = curvature_slice(ops, i, j);
            for b in 0..p {
                let ab = &ops.ops[b];
                let mut t = -(&k * ab) - ab * k.transpose();
                for a in 0..p {
                    t += &ops.ops[a] * comm[a][b][(j, i)];
                }
                total += t.norm_squared();
            }
        }
    }
    total
}

/// `Ric = (n-1) Id - sum A_a^2` and `||Ric - (tr Ric / n) Id||_F`.
pub fn ricci_and_einstein_defect(ops: &ShapeOperatorSet, n: usize) -> (Mat, f64) {
    let ric = Mat::identity(n, n) * (n as f64 - 1.0) - sum_of_squares(ops);
    let mean = ric.trace() / n as f64;
    let defect = (&ric - Mat::identity(n, n) * mean).norm();
    (ric, defect)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Indeterminate => "indeterminate",
        }
    }

    /// Combines per-point verdicts: any "no" decides, otherwise all must be
    /// "yes".
    pub fn combine<I: IntoIterator<Item = Verdict>>(verdicts: I) -> Verdict {
        let mut all_yes = true;
        let mut any = false;
        for v in verdicts {
            any = true;
            match v {
                Verdict::No => return Verdict::No,
                Verdict::Indeterminate => all_yes = false,
                Verdict::Yes => {}
            }
        }
        if any && all_yes {
            Verdict::Yes
        } else {
            Verdict::Indeterminate
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Semiparallel iff both quantities are below their thresholds; not
/// semiparallel iff both exceed ten times the thresholds.
pub fn classify(nabla_b_sq: f64, defect: f64) -> Verdict {
    classify_with(nabla_b_sq, defect, SEMIPARALLEL_NABLA_TOL, SEMIPARALLEL_DEFECT_TOL)
}

/// [`classify`] with explicit thresholds.
pub fn classify_with(nabla_b_sq: f64, defect: f64, nabla_tol: f64, defect_tol: f64) -> Verdict {
    if nabla_b_sq < nabla_tol && defect < defect_tol {
        Verdict::Yes
    } else if nabla_b_sq > VERDICT_GAP * nabla_tol && defect > VERDICT_GAP * defect_tol {
        Verdict::No
    } else {
        Verdict::Indeterminate
    }
}

/// Closed-form values and bounds for a family type and side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedValues {
    #[serde(with = "decimal_opt")]
    pub b_norm_sq: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub gram_diagonal: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub rho_perp_sq: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub rho_perp_sq_lower_bound: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub nabla_b_sq: Option<f64>,
    #[serde(with = "decimal_opt")]
    pub nabla_b_sq_lower_bound: Option<f64>,
    /// `false` for values recorded without a construction to test them on.
    pub verifiable: bool,
}

/// Expected values for `g in {2, 3, 4, 6}`; the `g = 6` entries are
/// documentation only (`verifiable = false`).
pub fn expected_values(g: usize, m1: usize, m2: usize, side: Side) -> ExpectedValues {
    let (a, b) = match side {
        Side::Plus => (m1 as f64, m2 as f64),
        Side::Minus => (m2 as f64, m1 as f64),
    };
    match g {
        2 => ExpectedValues {
            b_norm_sq: Some(0.0),
            gram_diagonal: Some(0.0),
            rho_perp_sq: Some(0.0),
            nabla_b_sq: Some(0.0),
            verifiable: true,
            ..Default::default()
        },
        3 => {
            let m = m1 as f64;
            ExpectedValues {
                b_norm_sq: Some(2.0 / 3.0 * m * (m + 1.0)),
                gram_diagonal: Some(2.0 * m / 3.0),
                rho_perp_sq: Some(8.0 / 9.0 * m * m * (m + 1.0)),
                nabla_b_sq: Some(0.0),
                verifiable: true,
                ..Default::default()
            }
        }
        4 => ExpectedValues {
            b_norm_sq: Some(2.0 * b * (a + 1.0)),
            gram_diagonal: Some(2.0 * b),
            rho_perp_sq_lower_bound: Some(2.0 * a * b * (a + 1.0)),
            nabla_b_sq_lower_bound: Some(6.0 * a * b * (a + 1.0) * (2.0 * b - a - 2.0) / (a + 2.0 * b)),
            verifiable: true,
            ..Default::default()
        },
        6 => {
            let m = m1 as f64;
            let c = m * m * (m + 1.0);
            let (rho, nabla) = match side {
                Side::Plus => ((72.0 + 8.0 / 9.0) * c, 84.0 * c),
                Side::Minus => (80.0 / 9.0 * c, 20.0 * c),
            };
            ExpectedValues {
                b_norm_sq: Some(20.0 / 3.0 * m * (m + 1.0)),
                gram_diagonal: Some(20.0 * m / 3.0),
                rho_perp_sq: Some(rho),
                nabla_b_sq: Some(nabla),
                verifiable: false,
                ..Default::default()
            }
        }
        _ => ExpectedValues::default(),
    }
}

/// All invariants at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub n: usize,
    pub p: usize,
    #[serde(with = "decimal")]
    pub b_norm_sq: f64,
    #[serde(with = "decimal_mat")]
    pub gram: Mat,
    #[serde(with = "decimal")]
    pub rho_perp_sq: f64,
    #[serde(with = "decimal")]
    pub nabla_b_sq_simons: f64,
    #[serde(with = "decimal_opt")]
    pub nabla_b_sq_closed_g4: Option<f64>,
    #[serde(with = "decimal")]
    pub semiparallel_defect: f64,
    #[serde(with = "decimal_mat")]
    pub ricci: Mat,
    #[serde(with = "decimal")]
    pub einstein_defect: f64,
    pub ot_identity_residuals: OtIdentityResiduals,
    #[serde(with = "decimal")]
    pub fd_error_estimate: f64,
    pub verdict: Verdict,
    pub expected: ExpectedValues,
}

impl InvariantReport {
    /// Every scalar invariant, in a fixed order, for point and gauge
    /// comparisons.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("b_norm_sq", self.b_norm_sq),
            ("rho_perp_sq", self.rho_perp_sq),
            ("nabla_b_sq_simons", self.nabla_b_sq_simons),
            ("semiparallel_defect", self.semiparallel_defect),
            ("einstein_defect", self.einstein_defect),
            ("gram_frobenius_sq", self.gram.norm_squared()),
        ];
        if let Some(c) = self.nabla_b_sq_closed_g4 {
            out.push(("nabla_b_sq_closed_g4", c));
        }
        out
    }

    /// Largest `|<A_a, A_b>|` with `a != b`.
    pub fn gram_off_diagonal(&self) -> f64 {
        let p = self.gram.nrows();
        let mut worst: f64 = 0.0;
        for a in 0..p {
            for b in 0..p {
                if a != b {
                    worst = worst.max(self.gram[(a, b)].abs());
                }
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Computes every invariant of a shape-operator set on side `side` of a
/// family with the given `g` and multiplicities.
pub fn compute_invariants(
    ops: &ShapeOperatorSet,
    g: usize,
    m1: usize,
    m2: usize,
    side: Side,
) -> Result<InvariantReport> {
    let n = ops.n();
    let b = b_norm_sq(ops);
    let gm = gram(ops);
    let rho = rho_perp_sq(ops)?;
    let simons = nabla_b_sq_simons(n, b, &gm, rho);
    let closed = if g == 4 { Some(nabla_b_sq_closed_g4_checked(ops, m1, m2, side, simons)?) } else { None };
    let defect = semiparallel_defect(ops);
    let (ricci, einstein_defect) = ricci_and_einstein_defect(ops, n);
    Ok(InvariantReport {
        n,
        p: ops.p(),
        b_norm_sq: b,
        gram: gm,
        rho_perp_sq: rho,
        nabla_b_sq_simons: simons,
        nabla_b_sq_closed_g4: closed,
        semiparallel_defect: defect,
        ricci,
        einstein_defect,
        ot_identity_residuals: ot_identity_residuals(ops, g)?,
        fd_error_estimate: ops.error_estimate,
        verdict: classify(simons, defect),
        expected: expected_values(g, m1, m2, side),
    })
}

/// Decimal strings with 15 significant digits.
pub mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(v: f64) -> String {
        format!("{v:.14e}")
    }

    pub fn parse(s: &str) -> Result<f64, String> {
        s.parse::<f64>().map_err(|e| format!("bad decimal `{s}`: {e}"))
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod decimal_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&super::decimal::format(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| super::decimal::parse(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

pub mod decimal_mat {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::numkit::Mat;

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| super::decimal::format(m[(r, c)])).collect()).collect();
        serde::Serialize::serialize(&rows, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        let mut m = Mat::zeros(nrows, ncols);
        for (r, row) in rows.iter().enumerate() {
            for (c, s) in row.iter().enumerate() {
                m[(r, c)] = super::decimal::parse(s).map_err(serde::de::Error::custom)?;
            }
        }
        Ok(m)
    }
}
