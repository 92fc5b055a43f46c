//! Computable descriptions of a focal submanifold.
//!
//! The focal sets are critical levels of `f`, so `grad f` vanishes there and
//! cannot provide normals. Each focal submanifold is instead described either
//! by regular constraints (with a Gauss–Newton projection) or by a chart
//! sampler together with a smooth retraction onto the set. Both kinds
//! provide the tangent and normal spaces at a point.

use serde::{Deserialize, Serialize};

use crate::clifford::CliffordSystem;
use crate::error::{Error, Result};
use crate::numkit::{
    complement_basis, eig_sym_lenient, gaussian_vector, orthonormalize, random_unit, span_basis, Frame, Mat, SeededRng,
    Vector,
};

use super::jordan::{HermitianCoords, Mat3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    /// Value of `f` on this focal submanifold.
    pub fn level(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "M+" => Ok(Side::Plus),
            "minus" | "-" | "M-" => Ok(Side::Minus),
            other => Err(Error::Parse(format!("unknown side `{other}` (expected plus|minus)"))),
        }
    }
}

/// Newton projection settings.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Constraint gradients with a smaller normalized singular value are
/// treated as degenerate.
pub const MIN_NORMAL_SINGULAR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `<Q x, x> = 0`.
    Quadratic(Mat),
    /// `<a, x> = 0`.
    Linear(Vector),
}

impl Constraint {
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Constraint::Quadratic(q) => x.dot(&(q * x)),
            Constraint::Linear(a) => a.dot(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match self {
            Constraint::Quadratic(q) => q * x * 2.0,
            Constraint::Linear(a) => a.clone(),
        }
    }
}

/// `{x : |x| = 1, c_k(x) = 0 for all k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    fn residual(&self, y: &Vector) -> Vector {
        let mut r = Vector::zeros(self.constraints.len() + 1);
        r[0] = y.norm_squared() - 1.0;
        for (k, c) in self.constraints.iter().enumerate() {
            r[k + 1] = c.value(y);
        }
        r
    }

    fn jacobian(&self, y: &Vector) -> Mat {
        let mut rows = Vec::with_capacity(self.constraints.len() + 1);
        rows.push((y * 2.0).transpose());
        for c in &self.constraints {
            rows.push(c.gradient(y).transpose());
        }
        Mat::from_rows(&rows)
    }

    fn gauss_newton_step(&self, y: &Vector, r: &Vector) -> Result<Vector> {
        let j = self.jacobian(y);
        let jjt = &j * j.transpose();
        let lambda = jjt
            .lu()
            .solve(r)
            .ok_or_else(|| Error::Sampling("singular constraint Jacobian in Newton projection".into()))?;
        Ok(j.transpose() * lambda)
    }

    /// Damped Gauss–Newton (minimum-norm steps) onto the constraint set.
    /// Once the residual drops below [`NEWTON_TOL`] one further full step is
    /// taken, which brings it to rounding level.
    pub fn newton_project(&self, y0: &Vector) -> Result<Vector> {
        let mut y = y0.clone();
        let mut r = self.residual(&y);
        for _ in 0..NEWTON_MAX_ITER {
            let rn = r.norm();
            if !rn.is_finite() {
                break;
            }
            if rn < NEWTON_TOL {
                let step = self.gauss_newton_step(&y, &r)?;
                return Ok(y - step);
            }
            let step = self.gauss_newton_step(&y, &r)?;
            let mut t = 1.0;
            loop {
                let cand = &y - &step * t;
                let rc = self.residual(&cand);
                if rc.norm() < rn || t < 1.0 / 64.0 {
                    y = cand;
                    r = rc;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::Sampling(format!(
            "Newton projection did not converge in {NEWTON_MAX_ITER} iterations (residual {:.3e})",
            r.norm()
        )))
    }

    fn normal_frame(&self, x: &Vector) -> Result<Frame> {
        let grads: Vec<Vector> = self
            .constraints
            .iter()
            .map(|c| {
                let g = c.gradient(x);
                let g = &g - x * g.dot(x);
                let n = g.norm();
                if n > 0.0 {
                    g / n
                } else {
                    g
                }
            })
            .collect();
        let stacked = Mat::from_columns(&grads);
        let smin = stacked.svd(false, false).singular_values.min();
        if smin < MIN_NORMAL_SINGULAR {
            return Err(Error::Degenerate(format!("constraint gradients nearly dependent (sigma_min = {smin:.3e})")));
        }
        orthonormalize(&grads)
    }
}

/// Chart-based presentations.
#[derive(Debug, Clone, PartialEq)]
pub enum Chart {
    /// Unit vectors in the `+1` eigenspace of `P(c)`, `c` a unit vector.
    CliffordEigenspace { system: CliffordSystem },
    /// `sign * sqrt(3/2) (x x^* - Id/3)` for unit `x` in `F^3`.
    Veronese { coords: HermitianCoords, sign: f64 },
    /// Unit decomposable 2-vectors `u ^ v` in `Lambda^2 R^5`.
    Plucker,
    /// `(a ^ b + c ^ d)/sqrt(2)` for orthonormal `a, b, c, d` in `R^5`.
    ComplexStructure,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresentationKind {
    RegularConstraints(ConstraintSet),
    Chart(Chart),
}

/// A focal submanifold of dimension `dim` and codimension `codim` (in the
/// sphere) inside `R^ambient`.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalPresentation {
    pub ambient: usize,
    pub dim: usize,
    pub codim: usize,
    pub kind: PresentationKind,
}

const SAMPLE_ATTEMPTS: usize = 20;

impl FocalPresentation {
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            PresentationKind::RegularConstraints(_) => "regular-constraints",
            PresentationKind::Chart(_) => "chart",
        }
    }

    /// Draws a point on the focal set.
    pub fn sample(&self, rng: &mut SeededRng) -> Result<Vector> {
        match &self.kind {
            PresentationKind::RegularConstraints(set) => {
                let mut last = None;
                for _ in 0..SAMPLE_ATTEMPTS {
                    let start = random_unit(rng, self.ambient);
                    match set.newton_project(&start).and_then(|x| set.normal_frame(&x).map(|_| x)) {
                        Ok(x) => return Ok(x),
                        Err(e) => last = Some(e),
                    }
                }
                Err(Error::Sampling(format!(
                    "no admissible point after {SAMPLE_ATTEMPTS} attempts: {}",
                    last.map(|e| e.to_string()).unwrap_or_default()
                )))
            }
            PresentationKind::Chart(chart) => Ok(chart.sample(rng)),
        }
    }

    /// Smooth map from a neighbourhood of the focal set onto it, equal to the
    /// identity on the set. `anchor` is a nearby focal point used to pick a
    /// chart where one is needed.
    pub fn retract(&self, anchor: &Vector, y: &Vector) -> Result<Vector> {
        match &self.kind {
            PresentationKind::RegularConstraints(set) => set.newton_project(y),
            PresentationKind::Chart(chart) => chart.retract(anchor, y),
        }
    }

    /// Orthonormal tangent and normal frames at a focal point `x`.
    pub fn frames(&self, x: &Vector) -> Result<(Frame, Frame)> {
        let radial = Frame::from_orthonormal_columns(Mat::from_column_slice(self.ambient, 1, x.as_slice()));
        let (tangent, normal) = match &self.kind {
            PresentationKind::RegularConstraints(set) => {
                let normal = set.normal_frame(x)?;
                let tangent = complement_basis(self.ambient, &[&radial, &normal])?;
                (tangent, normal)
            }
            PresentationKind::Chart(chart) => {
                let span: Vec<Vector> = chart.tangent_span(x)?.into_iter().map(|v| &v - x * v.dot(x)).collect();
                let tangent = span_basis(self.ambient, &span, self.dim)?;
                let normal = complement_basis(self.ambient, &[&radial, &tangent])?;
                (tangent, normal)
            }
        };
        if tangent.len() != self.dim || normal.len() != self.codim {
            return Err(Error::Integrity(format!(
                "frame sizes ({}, {}) differ from (dim, codim) = ({}, {})",
                tangent.len(),
                normal.len(),
                self.dim,
                self.codim
            )));
        }
        Ok((tangent, normal))
    }
}

impl Chart {
    fn sample(&self, rng: &mut SeededRng) -> Vector {
        match self {
            Chart::CliffordEigenspace { system } => {
                let c = random_unit(rng, system.m() + 1);
                let p = system.combination(c.as_slice());
                let g = gaussian_vector(rng, system.dim());
                let v = (&g + &p * &g) * 0.5;
                let n = v.norm();
                v / n
            }
            Chart::Veronese { coords, sign } => {
                let m = coords.algebra.dim();
                let mut x = [[0.0; 8]; 3];
                x[0][0] = gaussian_vector(rng, 1)[0].abs() + 0.1;
                for comp in x.iter_mut().skip(1) {
                    let g = gaussian_vector(rng, m);
                    comp[..m].copy_from_slice(g.as_slice());
                }
                veronese_point(coords, *sign, &x)
            }
            Chart::Plucker => {
                let f = random_orthonormal(rng, 5, 2);
                wedge(&f[0], &f[1])
            }
            Chart::ComplexStructure => {
                let f = random_orthonormal(rng, 5, 4);
                (wedge(&f[0], &f[1]) + wedge(&f[2], &f[3])) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    fn retract(&self, anchor: &Vector, y: &Vector) -> Result<Vector> {
        match self {
            Chart::CliffordEigenspace { system } => {
                let mut c = Vector::from_iterator(system.m() + 1, system.generators().iter().map(|p| y.dot(&(p * y))));
                let cn = c.norm();
                if !(cn > 1e-8) {
                    return Err(Error::Sampling("retraction left the tubular neighbourhood".into()));
                }
                c /= cn;
                let p = system.combination(c.as_slice());
                let v = (y + &p * y) * 0.5;
                let n = v.norm();
                Ok(v / n)
            }
            Chart::Veronese { coords, sign } => {
                let index = veronese_chart_index(coords, *sign, anchor);
                let x = veronese_lift(coords, *sign, y, index)?;
                Ok(veronese_point(coords, *sign, &x))
            }
            Chart::Plucker => {
                let w = skew_from_coords(y);
                let s = w.transpose() * &w;
                let eig = eig_sym_lenient(&s)?;
                let top = eig.vectors.matrix().columns(0, 2).into_owned();
                let q = &top * top.transpose();
                let proj = &q * &w * &q;
                let c = coords_from_skew(&proj);
                let n = c.norm();
                Ok(c / n)
            }
            Chart::ComplexStructure => {
                let w = skew_from_coords(y);
                let s = w.transpose() * &w;
                let eig = eig_sym_lenient(&s)?;
                let axis = eig.vectors.vector(4);
                let mut q = Mat::identity(5, 5);
                q.ger(-1.0, &axis, &axis, 1.0);
                let w4 = &q * &w * &q;
                let star = hodge_in_hyperplane(&w4, &axis);
                let self_dual = (&w4 + &star) * 0.5;
                let anti = (&w4 - &star) * 0.5;
                let pick = if self_dual.norm() >= anti.norm() { self_dual } else { anti };
                let c = coords_from_skew(&pick);
                let n = c.norm();
                Ok(c / n)
            }
        }
    }

    /// Vectors spanning the tangent space at `x` (possibly redundant, not
    /// yet orthogonal to `x`).
    fn tangent_span(&self, x: &Vector) -> Result<Vec<Vector>> {
        match self {
            Chart::CliffordEigenspace { system } => {
                let dim = system.dim();
                let mut c = Vector::from_iterator(system.m() + 1, system.generators().iter().map(|p| x.dot(&(p * x))));
                c /= c.norm();
                let p = system.combination(c.as_slice());
                let mut span = Vec::with_capacity(dim + system.m());
                for b in 0..dim {
                    let col = (p.column(b) * 0.5).into_owned();
                    let mut v = col;
                    v[b] += 0.5;
                    span.push(v);
                }
                let cf = Frame::from_orthonormal_columns(Mat::from_column_slice(system.m() + 1, 1, c.as_slice()));
                let perp = complement_basis(system.m() + 1, &[&cf])?;
                for u in perp.vectors() {
                    span.push(system.combination(u.as_slice()) * x);
                }
                Ok(span)
            }
            Chart::Veronese { coords, sign } => {
                let index = veronese_chart_index(coords, *sign, x);
                let lift = veronese_lift(coords, *sign, x, index)?;
                let m = coords.algebra.dim();
                let scale = *sign * 1.5f64.sqrt();
                let mut span = Vec::new();
                for slot in 0..3 {
                    let comps = if slot == index { 1 } else { m };
                    for t in 0..comps {
                        let mut dx = [[0.0; 8]; 3];
                        dx[slot][t] = 1.0;
                        let a = outer2(&dx, &lift);
                        span.push(coords.to_coords(&a) * scale);
                    }
                }
                Ok(span)
            }
            Chart::Plucker | Chart::ComplexStructure => {
                let w = skew_from_coords(x);
                let mut span = Vec::with_capacity(10);
                for a in 0..5 {
                    for b in (a + 1)..5 {
                        let mut e = Mat::zeros(5, 5);
                        e[(a, b)] = 1.0;
                        e[(b, a)] = -1.0;
                        span.push(coords_from_skew(&(&e * &w - &w * &e)));
                    }
                }
                Ok(span)
            }
        }
    }
}

fn random_orthonormal(rng: &mut SeededRng, dim: usize, count: usize) -> Vec<Vector> {
    loop {
        let vs: Vec<Vector> = (0..count).map(|_| gaussian_vector(rng, dim)).collect();
        if let Ok(f) = orthonormalize(&vs) {
            return f.vectors();
        }
    }
}

/// Index pairs `(i, j)`, `i < j`, of `Lambda^2 R^5` in coordinate order.
pub fn wedge_index_pairs() -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(10);
    for i in 0..5 {
        for j in (i + 1)..5 {
            out.push((i, j));
        }
    }
    out
}

pub fn wedge(u: &Vector, v: &Vector) -> Vector {
    Vector::from_iterator(10, wedge_index_pairs().into_iter().map(|(i, j)| u[i] * v[j] - u[j] * v[i]))
}

pub fn skew_from_coords(c: &Vector) -> Mat {
    let mut w = Mat::zeros(5, 5);
    for (k, (i, j)) in wedge_index_pairs().into_iter().enumerate() {
        w[(i, j)] = c[k];
        w[(j, i)] = -c[k];
    }
    w
}

pub fn coords_from_skew(w: &Mat) -> Vector {
    Vector::from_iterator(10, wedge_index_pairs().into_iter().map(|(i, j)| 0.5 * (w[(i, j)] - w[(j, i)])))
}

/// Hodge star inside the hyperplane orthogonal to the unit vector `axis`:
/// `(*w)_ij = 1/2 sum eps_ijklm w_kl axis_m`.
fn hodge_in_hyperplane(w: &Mat, axis: &Vector) -> Mat {
    let mut out = Mat::zeros(5, 5);
    let perms = permutations5();
    for (p, sign) in perms {
        let [i, j, k, l, m] = p;
        out[(i, j)] += 0.5 * sign * w[(k, l)] * axis[m];
    }
    out
}

fn permutations5() -> Vec<([usize; 5], f64)> {
    fn rec(prefix: &mut Vec<usize>, out: &mut Vec<([usize; 5], f64)>) {
        if prefix.len() == 5 {
            let mut inversions = 0;
            for a in 0..5 {
                for b in (a + 1)..5 {
                    if prefix[a] > prefix[b] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            out.push(([prefix[0], prefix[1], prefix[2], prefix[3], prefix[4]], sign));
            return;
        }
        for v in 0..5 {
            if !prefix.contains(&v) {
                prefix.push(v);
                rec(prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::with_capacity(120);
    rec(&mut Vec::new(), &mut out);
    out
}

fn veronese_point(coords: &HermitianCoords, sign: f64, x: &[[f64; 8]; 3]) -> Vector {
    let norm: f64 = x.iter().map(crate::division::norm_sq).sum::<f64>().sqrt();
    let xn = x.map(|c| crate::division::scale(&c, 1.0 / norm));
    coords.to_coords(&Mat3::outer(&xn)) * (sign * 1.5f64.sqrt())
}

/// Index of the largest diagonal entry of the rank-one projector behind a
/// Veronese point.
fn veronese_chart_index(coords: &HermitianCoords, sign: f64, point: &Vector) -> usize {
    let p = coords.to_matrix(&(point * (sign / 1.5f64.sqrt())));
    (0..3).max_by(|&a, &b| p.0[a][a][0].total_cmp(&p.0[b][b][0])).unwrap_or(0)
}

/// Recovers `x` (with `x_index` real and positive) from a point near the
/// Veronese image; `Y = x x^*`.
fn veronese_lift(coords: &HermitianCoords, sign: f64, y: &Vector, index: usize) -> Result<[[f64; 8]; 3]> {
    let mut proj = coords.to_matrix(&(y * (sign / 1.5f64.sqrt())));
    for i in 0..3 {
        proj.0[i][i][0] += 1.0 / 3.0;
    }
    let d = proj.0[index][index][0];
    if !(d > 1e-6) {
        return Err(Error::Sampling("Veronese chart left its domain".into()));
    }
    let root = d.sqrt();
    let mut x = [[0.0; 8]; 3];
    for j in 0..3 {
        x[j] = if j == index {
            let mut r = [0.0; 8];
            r[0] = root;
            r
        } else {
            crate::division::scale(&proj.0[j][index], 1.0 / root)
        };
    }
    let norm: f64 = x.iter().map(crate::division::norm_sq).sum::<f64>().sqrt();
    Ok(x.map(|c| crate::division::scale(&c, 1.0 / norm)))
}

/// `dx x^* + x dx^*`.
fn outer2(dx: &[[f64; 8]; 3], x: &[[f64; 8]; 3]) -> Mat3 {
    use crate::division::{add, conj, mul};
    let mut out = Mat3::zero();
    for i in 0..3 {
        for j in 0..3 {
            out.0[i][j] = add(&mul(&dx[i], &conj(&x[j])), &mul(&x[i], &conj(&dx[j])));
        }
    }
    out
}
