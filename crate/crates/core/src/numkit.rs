//! Small dense real linear algebra.
//!
//! Everything here operates on matrices of dimension at most a few dozen:
//! shape operators, Clifford generators, projectors onto tangent and normal
//! spaces. Matrices are `nalgebra` dynamic matrices; this module adds the
//! contracts the rest of the crate relies on (sorted spectra with fixed
//! eigenvector signs, rank-checked orthonormalization, polar alignment) and
//! the seeded random helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type SeededRng = ChaCha8Rng;

/// Default residual tolerance for algebraic checks.
pub const ALGEBRAIC_TOL: f64 = 1e-10;

/// Maximum asymmetry accepted by the symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `|a - b| <= tol * (1 + scale)`.
pub fn within(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + scale.abs())
}

/// An ordered list of orthonormal vectors in some ambient space, stored as
/// the columns of an `ambient x count` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    columns: Mat,
}

impl Frame {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal_columns(columns: Mat) -> Self {
        Frame { columns }
    }

    pub fn empty(dim_ambient: usize) -> Self {
        Frame { columns: Mat::zeros(dim_ambient, 0) }
    }

    pub fn dim_ambient(&self) -> usize {
        self.columns.nrows()
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn vector(&self, i: usize) -> Vector {
        self.columns.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    pub fn matrix(&self) -> &Mat {
        &self.columns
    }

    /// Orthogonal projector onto the span, `F F^T`.
    pub fn projector(&self) -> Mat {
        &self.columns * self.columns.transpose()
    }

    /// Max entry of `|F^T F - I|`.
    pub fn gram_residual(&self) -> f64 {
        let g = self.columns.transpose() * &self.columns;
        let n = g.nrows();
        (g - Mat::identity(n, n)).amax()
    }

    /// Right-multiplies by an orthogonal `count x count` matrix (re-mixes the
    /// frame inside its own span).
    pub fn remix(&self, q: &Mat) -> Frame {
        Frame { columns: &self.columns * q }
    }
}

pub fn check_square(m: &Mat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::contract(format!("{what}: expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Max entry of `|M - M^T|`.
pub fn asymmetry(m: &Mat) -> f64 {
    (m - m.transpose()).amax()
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

fn check_symmetric(m: &Mat, what: &str) -> Result<()> {
    check_square(m, what)?;
    let asym = asymmetry(m);
    let scale = 1.0 + m.amax();
    if !(asym <= SYMMETRY_TOL * scale) {
        return Err(Error::contract(format!("{what}: asymmetry {asym:.3e} exceeds tolerance")));
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`, with its first
    /// non-negligible component positive.
    pub vectors: Frame,
}

/// Symmetric eigensolver with sorted spectrum and deterministic signs.
pub fn eig_sym(m: &Mat) -> Result<SymEigen> {
    check_symmetric(m, "eig_sym")?;
    Ok(eig_sym_unchecked(&symmetrize(m)))
}

/// Same as [`eig_sym`] but symmetrizes without checking first. Used on
/// matrices that are symmetric only up to finite-difference error.
pub fn eig_sym_lenient(m: &Mat) -> Result<SymEigen> {
    check_square(m, "eig_sym")?;
    Ok(eig_sym_unchecked(&symmetrize(m)))
}

fn eig_sym_unchecked(m: &Mat) -> SymEigen {
    let n = m.nrows();
    if n == 0 {
        return SymEigen { values: Vec::new(), vectors: Frame::empty(0) };
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let thresh = 1e-12 * v.amax();
        if let Some(first) = v.iter().find(|c| c.abs() > thresh) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(dst, &v);
    }
    SymEigen { values: order.iter().map(|&i| eig.eigenvalues[i]).collect(), vectors: Frame { columns: vectors } }
}

/// `-tr([A,B]^2)`, evaluated as `||AB - BA||_F^2`.
pub fn commutator_norm_sq(a: &Mat, b: &Mat) -> Result<f64> {
    check_square(a, "commutator_norm_sq")?;
    if a.shape() != b.shape() {
        return Err(Error::contract(format!(
            "commutator_norm_sq: dimension mismatch {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let c = a * b - b * a;
    Ok(c.norm_squared())
}

/// Modified Gram–Schmidt (with one re-orthogonalization sweep) in input
/// order. Rejects rank-deficient input: smallest singular value below
/// `1e-8` times the largest.
pub fn orthonormalize(vectors: &[Vector]) -> Result<Frame> {
    let Some(first) = vectors.first() else {
        return Err(Error::Degenerate("orthonormalize: no vectors".into()));
    };
    let dim = first.len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::contract("orthonormalize: vectors of different lengths"));
    }
    if vectors.len() > dim {
        return Err(Error::Degenerate(format!("orthonormalize: {} vectors in R^{dim}", vectors.len())));
    }
    let stacked = Mat::from_columns(vectors);
    let sv = stacked.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin < 1e-8 * smax {
        return Err(Error::Degenerate(format!(
            "orthonormalize: rank deficient (sigma_min/sigma_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = w.norm();
        w /= norm;
        out.push(w);
    }
    Ok(Frame { columns: Mat::from_columns(&out) })
}

/// Orthonormal basis of the span of `vectors`, which must have dimension
/// exactly `dim`. The basis is the top-`dim` eigenvectors of `sum v v^T`.
pub fn span_basis(ambient: usize, vectors: &[Vector], dim: usize) -> Result<Frame> {
    if dim == 0 {
        return Ok(Frame::empty(ambient));
    }
    let mut g = Mat::zeros(ambient, ambient);
    for v in vectors {
        if v.len() != ambient {
            return Err(Error::contract("span_basis: vector length mismatch"));
        }
        g.ger(1.0, v, v, 1.0);
    }
    let eig = eig_sym_unchecked(&symmetrize(&g));
    let top = eig.values[0];
    let kept = eig.values[dim - 1];
    let dropped = eig.values.get(dim).copied().unwrap_or(0.0);
    if !(top > 0.0) || kept < 1e-12 * top || dropped > 1e-12 * top {
        return Err(Error::Degenerate(format!(
            "span_basis: expected rank {dim}, spectrum ratio kept {:.3e}, dropped {:.3e}",
            kept / top,
            dropped / top
        )));
    }
    let cols = eig.vectors.columns.columns(0, dim).into_owned();
    Ok(Frame { columns: cols })
}

/// Orthonormal basis of the orthogonal complement of the union of the given
/// frames.
pub fn complement_basis(ambient: usize, frames: &[&Frame]) -> Result<Frame> {
    let mut p = Mat::identity(ambient, ambient);
    let mut used = 0;
    for f in frames {
        p -= f.projector();
        used += f.len();
    }
    if used > ambient {
        return Err(Error::contract("complement_basis: frames exceed ambient dimension"));
    }
    let dim = ambient - used;
    if dim == 0 {
        return Ok(Frame::empty(ambient));
    }
    let eig = eig_sym_unchecked(&symmetrize(&p));
    let kept = eig.values[dim - 1];
    let dropped = eig.values.get(dim).copied().unwrap_or(0.0);
    if (kept - 1.0).abs() > 1e-8 || dropped.abs() > 1e-8 {
        return Err(Error::Degenerate("complement_basis: input frames are not mutually orthogonal".into()));
    }
    Ok(Frame { columns: eig.vectors.columns.columns(0, dim).into_owned() })
}

/// Polar factor `U = C (C^T C)^{-1/2}` of a full-column-rank matrix, i.e.
/// the orthonormal frame nearest to `C`.
pub fn polar_factor(c: &Mat) -> Result<Mat> {
    let gram = symmetrize(&(c.transpose() * c));
    let eig = SymmetricEigen::new(gram);
    let smallest = eig.eigenvalues.min();
    if !(smallest > 1e-14) {
        return Err(Error::Degenerate(format!("polar_factor: rank deficient (min Gram eigenvalue {smallest:.3e})")));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let root = &eig.eigenvectors * Mat::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    Ok(c * root)
}

/// Largest principal angle between the spans of two orthonormal frames of
/// equal size.
pub fn max_principal_angle(a: &Frame, b: &Frame) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let m = a.columns.transpose() * &b.columns;
    let smin = m.svd(false, false).singular_values.min().clamp(-1.0, 1.0);
    smin.acos()
}

/// `sum_i |a_i|^2` with the terms accumulated in index order.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().fold(0.0, |acc, t| acc + t)
}

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Haar-ish random orthogonal matrix: Q factor of a Gaussian matrix with the
/// diagonal signs of R absorbed.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}
