//! Points on focal submanifolds, shape operators by finite differences of
//! retracted curves, and a frame-transport oracle for covariant
//! derivatives of the second fundamental form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{FocalPresentation, IsoparFamily, Side};
use crate::numkit::{
    eig_sym_lenient, max_principal_angle, polar_factor, random_orthogonal, random_unit, seeded_rng, Frame, Mat, Vector,
};

pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Largest accepted finite-difference error estimate for shape operators.
pub const FD_ERROR_LIMIT: f64 = 1e-5;
/// Largest frame rotation accepted over one transport step.
pub const MAX_TRANSPORT_ANGLE: f64 = 0.5;
/// Number of random normal directions probed by [`spectrum_check`].
pub const SPECTRUM_DIRECTIONS: usize = 20;
pub const SPECTRUM_SEED: u64 = 0x5bec_7a11;

/// A point of a focal submanifold with orthonormal frames of its tangent and
/// normal spaces (normals taken inside the sphere).
#[derive(Debug, Clone, PartialEq)]
pub struct FocalPoint {
    pub x: Vector,
    pub side: Side,
    pub tangent: Frame,
    pub normal: Frame,
}

impl FocalPoint {
    pub fn n(&self) -> usize {
        self.tangent.len()
    }

    pub fn p(&self) -> usize {
        self.normal.len()
    }

    /// Checks the type invariants against the family.
    pub fn validate(&self, family: &IsoparFamily) -> Result<()> {
        let fail = |what: String| Err(Error::Integrity(format!("focal point: {what}")));
        if (self.x.norm() - 1.0).abs() > 1e-12 {
            return fail(format!("|x| - 1 = {:.3e}", self.x.norm() - 1.0));
        }
        if self.n() + self.p() + 1 != family.ambient_dim {
            return fail(format!("n + p + 1 = {} != {}", self.n() + self.p() + 1, family.ambient_dim));
        }
        let all = Mat::from_columns(
            &std::iter::once(self.x.clone())
                .chain(self.tangent.vectors())
                .chain(self.normal.vectors())
                .collect::<Vec<_>>(),
        );
        let gram = all.transpose() * &all;
        let dev = (gram - Mat::identity(all.ncols(), all.ncols())).amax();
        if dev > 1e-10 {
            return fail(format!("frames not orthonormal (deviation {dev:.3e})"));
        }
        let level = family.f(&self.x) - self.side.level();
        if level.abs() > 1e-10 {
            return fail(format!("f(x) differs from the focal level by {level:.3e}"));
        }
        Ok(())
    }

    /// Same point with the tangent and normal frames rotated by orthogonal
    /// matrices `qt` (`n x n`) and `qn` (`p x p`).
    pub fn remixed(&self, qt: &Mat, qn: &Mat) -> FocalPoint {
        FocalPoint { tangent: self.tangent.remix(qt), normal: self.normal.remix(qn), ..self.clone() }
    }
}

/// Attaches frames to a point already on the focal set.
pub fn focal_point_at(family: &IsoparFamily, side: Side, x: Vector) -> Result<FocalPoint> {
    let (tangent, normal) = family.presentation(side).frames(&x)?;
    let point = FocalPoint { x, side, tangent, normal };
    point.validate(family)?;
    Ok(point)
}

/// Deterministic sample from `(family, side, seed)`.
pub fn sample_focal_point(family: &IsoparFamily, side: Side, seed: u64) -> Result<FocalPoint> {
    let mut rng = seeded_rng(seed);
    let pres = family.presentation(side);
    let mut last = None;
    for _ in 0..8 {
        let x = pres.sample(&mut rng)?;
        match focal_point_at(family, side, x) {
            Ok(p) => return Ok(p),
            Err(e @ (Error::Degenerate(_) | Error::Sampling(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Sampling("no admissible sample".into())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdMethod {
    SecondDifference,
    RichardsonExtrapolated,
}

/// Shape operators `A_alpha[i][j] = <B(e_i, e_j), xi_alpha>` in the frames
/// of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeOperatorSet {
    pub ops: Vec<Mat>,
    pub fd_step: f64,
    pub method: FdMethod,
    pub error_estimate: f64,
}

impl ShapeOperatorSet {
    pub fn n(&self) -> usize {
        self.ops.first().map_or(0, |a| a.nrows())
    }

    pub fn p(&self) -> usize {
        self.ops.len()
    }

    /// `sum_alpha c_alpha A_alpha`.
    pub fn combination(&self, c: &[f64]) -> Mat {
        let n = self.n();
        let mut out = Mat::zeros(n, n);
        for (ci, a) in c.iter().zip(&self.ops) {
            out += a * *ci;
        }
        out
    }

    /// Operators expressed in rotated frames (`qt` tangent, `qn` normal).
    pub fn remixed(&self, qt: &Mat, qn: &Mat) -> ShapeOperatorSet {
        let ops = (0..self.p())
            .map(|beta| {
                let mut acc = Mat::zeros(self.n(), self.n());
                for (alpha, a) in self.ops.iter().enumerate() {
                    acc += a * qn[(alpha, beta)];
                }
                qt.transpose() * acc * qt
            })
            .collect();
        ShapeOperatorSet { ops, ..self.clone() }
    }
}

/// Normal component of `(Pi(x + h v) + Pi(x - h v) - 2x) / h^2`.
fn second_difference(pres: &FocalPresentation, x: &Vector, normal: &Mat, v: &Vector, h: f64) -> Result<Vector> {
    let plus = pres.retract(x, &(x + v * h))?;
    let minus = pres.retract(x, &(x - v * h))?;
    let sum = plus + minus - x * 2.0;
    Ok(normal.transpose() * sum / (h * h))
}

fn check_step(h: f64) -> Result<()> {
    if !(1e-5..=1e-2).contains(&h) {
        return Err(Error::contract(format!("finite-difference step {h:e} outside [1e-5, 1e-2]")));
    }
    Ok(())
}

/// Shape operators of an arbitrary point/frames triple.
pub fn shape_operators_in_frames(
    pres: &FocalPresentation,
    x: &Vector,
    tangent: &Frame,
    normal: &Frame,
    h: f64,
    method: FdMethod,
) -> Result<ShapeOperatorSet> {
    check_step(h)?;
    let n = tangent.len();
    let p = normal.len();
    let nm = normal.matrix();
    // b(v) for v = e_i (diagonal) and e_i + e_j (off-diagonal).
    let mut diag: Vec<Vector> = Vec::with_capacity(n);
    let mut estimate: f64 = 0.0;
    let mut eval = |v: &Vector| -> Result<Vector> {
        let coarse = second_difference(pres, x, nm, v, h)?;
        let fine = second_difference(pres, x, nm, v, h / 2.0)?;
        let (value, err) = match method {
            FdMethod::RichardsonExtrapolated => {
                let ext = (&fine * 4.0 - &coarse) / 3.0;
                let err = (&ext - &coarse).amax() / 7.0;
                (ext, err)
            }
            FdMethod::SecondDifference => {
                let err = (&fine - &coarse).amax() * 4.0 / 3.0;
                (fine, err)
            }
        };
        estimate = estimate.max(err);
        Ok(value)
    };
    for i in 0..n {
        diag.push(eval(&tangent.vector(i))?);
    }
    let mut ops = vec![Mat::zeros(n, n); p];
    for i in 0..n {
        for (a, op) in ops.iter_mut().enumerate() {
            op[(i, i)] = diag[i][a];
        }
        for j in (i + 1)..n {
            let b = eval(&(tangent.vector(i) + tangent.vector(j)))?;
            for (a, op) in ops.iter_mut().enumerate() {
                let value = 0.5 * (b[a] - diag[i][a] - diag[j][a]);
                op[(i, j)] = value;
                op[(j, i)] = value;
            }
        }
    }
    if estimate > FD_ERROR_LIMIT {
        return Err(Error::Precision { estimate, limit: FD_ERROR_LIMIT, step: h });
    }
    Ok(ShapeOperatorSet { ops, fd_step: h, method, error_estimate: estimate })
}

pub fn shape_operators_with(
    family: &IsoparFamily,
    point: &FocalPoint,
    h: f64,
    method: FdMethod,
) -> Result<ShapeOperatorSet> {
    shape_operators_in_frames(family.presentation(point.side), &point.x, &point.tangent, &point.normal, h, method)
}

/// Richardson-extrapolated shape operators at the default step.
pub fn shape_operators(family: &IsoparFamily, point: &FocalPoint) -> Result<ShapeOperatorSet> {
    shape_operators_with(family, point, DEFAULT_FD_STEP, FdMethod::RichardsonExtrapolated)
}

/// The principal curvatures `cot(k pi / g)`, `k = 1..g-1`, sorted
/// descending, with multiplicities `m2, m1, m2, ...` on the plus side and
/// `m1, m2, m1, ...` on the minus side.
pub fn expected_spectrum(g: usize, m1: usize, m2: usize, side: Side) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..g {
        let angle = k as f64 * std::f64::consts::PI / g as f64;
        let value = if 2 * k == g { 0.0 } else { angle.cos() / angle.sin() };
        let odd = k % 2 == 1;
        let mult = match (side, odd) {
            (Side::Plus, true) | (Side::Minus, false) => m2,
            (Side::Plus, false) | (Side::Minus, true) => m1,
        };
        out.extend(std::iter::repeat_n(value, mult));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Max deviation of the spectra of `sum c_alpha A_alpha` from the expected
/// multiset, over [`SPECTRUM_DIRECTIONS`] random unit `c` drawn from `seed`.
pub fn spectrum_check_seeded(
    ops: &ShapeOperatorSet,
    g: usize,
    m1: usize,
    m2: usize,
    side: Side,
    seed: u64,
) -> Result<f64> {
    let expected = expected_spectrum(g, m1, m2, side);
    if expected.len() != ops.n() {
        return Err(Error::contract(format!(
            "expected spectrum has {} entries but the operators are {}x{}",
            expected.len(),
            ops.n(),
            ops.n()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..SPECTRUM_DIRECTIONS {
        let c = random_unit(&mut rng, ops.p());
        let eig = eig_sym_lenient(&ops.combination(c.as_slice()))?;
        for (got, want) in eig.values.iter().zip(&expected) {
            worst = worst.max((got - want).abs());
        }
    }
    Ok(worst)
}

pub fn spectrum_check(ops: &ShapeOperatorSet, g: usize, m1: usize, m2: usize, side: Side) -> Result<f64> {
    spectrum_check_seeded(ops, g, m1, m2, side, SPECTRUM_SEED)
}

/// Finite-difference estimate of the normal connection: `s[i][(alpha,
/// beta)] = <d xi_alpha / d e_i, xi_beta>` in the transported frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalConnection {
    pub s: Vec<Mat>,
}

impl NormalConnection {
    /// Max of `|s_ab + s_ba|` over all directions.
    pub fn skew_defect(&self) -> f64 {
        self.s.iter().map(|s| (s + s.transpose()).amax()).fold(0.0, f64::max)
    }
}

/// Everything the transport oracle measures at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantDerivatives {
    /// `(nabla-bar_{e_i} A)_alpha` for each tangent direction `i`.
    pub nabla_a: Vec<Vec<Mat>>,
    /// `nabla_{e_i} Ric`.
    pub nabla_ric: Vec<Mat>,
    pub connection: NormalConnection,
    /// `||nabla-bar B||^2`.
    pub nabla_b_sq: f64,
    /// `||nabla Ric||^2`.
    pub ricci_parallel_defect: f64,
}

struct Transported {
    tangent: Mat,
    normal: Mat,
    ops: Vec<Mat>,
}

fn transport(pres: &FocalPresentation, point: &FocalPoint, v: &Vector, t: f64, h_shape: f64) -> Result<Transported> {
    let y = pres.retract(&point.x, &(&point.x + v * t))?;
    let (tangent, normal) = pres.frames(&y)?;
    let angle = max_principal_angle(&point.tangent, &tangent).max(max_principal_angle(&point.normal, &normal));
    if angle > MAX_TRANSPORT_ANGLE {
        return Err(Error::StepTooLarge { angle, step: t.abs() });
    }
    let e = polar_factor(&(tangent.projector() * point.tangent.matrix()))?;
    let nf = polar_factor(&(normal.projector() * point.normal.matrix()))?;
    let e = Frame::from_orthonormal_columns(e);
    let nf = Frame::from_orthonormal_columns(nf);
    let ops = shape_operators_in_frames(pres, &y, &e, &nf, h_shape, FdMethod::RichardsonExtrapolated)?.ops;
    Ok(Transported { tangent: e.matrix().clone(), normal: nf.matrix().clone(), ops })
}

fn ricci(ops: &[Mat], n: usize) -> Mat {
    let mut r = Mat::identity(n, n) * (n as f64 - 1.0);
    for a in ops {
        r -= a * a;
    }
    r
}

/// Richardson-extrapolated central first difference from values at
/// `-h, +h, -h/2, +h/2`.
fn first_derivative(m_h: &Mat, p_h: &Mat, m_half: &Mat, p_half: &Mat, h: f64) -> Mat {
    let coarse = (p_h - m_h) / (2.0 * h);
    let fine = (p_half - m_half) / h;
    (fine * 4.0 - coarse) / 3.0
}

/// Transport oracle: moves to `Pi(x +- t e_i)`, `t in {h, h/2}`, aligns the
/// frames there with the base frames by polar decomposition, and
/// differences the shape operators and the Ricci tensor.
pub fn fd_covariant_derivatives(family: &IsoparFamily, point: &FocalPoint, h: f64) -> Result<CovariantDerivatives> {
    check_step(h)?;
    let pres = family.presentation(point.side);
    let n = point.n();
    let p = point.p();
    let h_shape = DEFAULT_FD_STEP.min(h);
    let per_direction: Vec<Result<(Vec<Mat>, Mat, Mat)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v = point.tangent.vector(i);
            let samples: Vec<Transported> = [-h, h, -h / 2.0, h / 2.0]
                .iter()
                .map(|&t| transport(pres, point, &v, t, h_shape))
                .collect::<Result<_>>()?;
            let [m_h, p_h, m_half, p_half] = [&samples[0], &samples[1], &samples[2], &samples[3]];
            let w = point.tangent.matrix().transpose()
                * first_derivative(&m_h.tangent, &p_h.tangent, &m_half.tangent, &p_half.tangent, h);
            let dn = first_derivative(&m_h.normal, &p_h.normal, &m_half.normal, &p_half.normal, h);
            // s[(alpha, beta)] = <d xi_alpha, xi_beta>.
            let s = (point.normal.matrix().transpose() * dn).transpose();
            let dots: Vec<Mat> =
                (0..p).map(|a| first_derivative(&m_h.ops[a], &p_h.ops[a], &m_half.ops[a], &p_half.ops[a], h)).collect();
            let base: Vec<Mat> = (0..p)
                .map(|a| {
                    let parts = [&m_h.ops[a], &p_h.ops[a], &m_half.ops[a], &p_half.ops[a]];
                    // Value at t = 0 from the symmetric samples (fourth order).
                    (parts[2] + parts[3]) * (2.0 / 3.0) - (parts[0] + parts[1]) * (1.0 / 6.0)
                })
                .collect();
            let nabla: Vec<Mat> = (0..p)
                .map(|a| {
                    let mut d = &dots[a] - w.transpose() * &base[a] - &base[a] * &w;
                    for b in 0..p {
                        d -= &base[b] * s[(a, b)];
                    }
                    d
                })
                .collect();
            let ric = |t: &Transported| ricci(&t.ops, n);
            let ric_dot = first_derivative(&ric(m_h), &ric(p_h), &ric(m_half), &ric(p_half), h);
            let ric0 = ricci(&base, n);
            let nabla_ric = ric_dot - w.transpose() * &ric0 - &ric0 * &w;
            Ok((nabla, nabla_ric, s))
        })
        .collect();
    let mut nabla_a = Vec::with_capacity(n);
    let mut nabla_ric = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for r in per_direction {
        let (a, ric, conn) = r?;
        nabla_a.push(a);
        nabla_ric.push(ric);
        s.push(conn);
    }
    let nabla_b_sq = nabla_a.iter().flatten().map(|m| m.norm_squared()).sum();
    let ricci_parallel_defect = nabla_ric.iter().map(|m| m.norm_squared()).sum();
    Ok(CovariantDerivatives {
        nabla_a,
        nabla_ric,
        connection: NormalConnection { s },
        nabla_b_sq,
        ricci_parallel_defect,
    })
}

/// `||nabla-bar B||^2` by frame transport.
pub fn fd_nabla_b_sq(family: &IsoparFamily, point: &FocalPoint, h: f64) -> Result<f64> {
    Ok(fd_covariant_derivatives(family, point, h)?.nabla_b_sq)
}

/// `||nabla Ric||^2` by frame transport.
pub fn fd_ricci_parallel_defect(family: &IsoparFamily, point: &FocalPoint, h: f64) -> Result<f64> {
    Ok(fd_covariant_derivatives(family, point, h)?.ricci_parallel_defect)
}

/// Random orthogonal re-mixing matrices for the tangent and normal frames.
pub fn random_gauge(seed: u64, n: usize, p: usize) -> (Mat, Mat) {
    let mut rng = seeded_rng(seed);
    (random_orthogonal(&mut rng, n), random_orthogonal(&mut rng, p))
}
