//! Trace-free Hermitian 3x3 matrices over R, C, H or O.
//!
//! The space `h3(F)_0` is identified isometrically with `R^{3m+2}` for the
//! trace form `<X, Y> = Re tr(XY)`: two coordinates for the trace-free
//! diagonal and `sqrt(2)` times the components of the three upper
//! off-diagonal entries.

use crate::division::{self, DivisionAlgebra, Octonion};
use crate::numkit::Vector;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// A full 3x3 matrix with entries in the algebra (always stored as
/// octonions with a zero tail).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[Octonion; 3]; 3]);

impl Mat3 {
    pub fn zero() -> Self {
        Mat3([[[0.0; 8]; 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i][0] = 1.0;
        }
        m
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = [0.0; 8];
                for k in 0..3 {
                    acc = division::add(&acc, &division::mul(&self.0[i][k], &other.0[k][j]));
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    /// Jordan product `(XY + YX)/2`.
    pub fn jordan(&self, other: &Mat3) -> Mat3 {
        let a = self.mul(other);
        let b = other.mul(self);
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = division::scale(&division::add(&a.0[i][j], &b.0[i][j]), 0.5);
            }
        }
        out
    }

    pub fn re_trace(&self) -> f64 {
        (0..3).map(|i| self.0[i][i][0]).sum()
    }

    /// `x x^*` for a column vector `x` in `F^3`.
    pub fn outer(x: &[Octonion; 3]) -> Mat3 {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = division::mul(&x[i], &division::conj(&x[j]));
            }
        }
        out
    }
}

/// Coordinate map between `h3(F)_0` and `R^{3m+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianCoords {
    pub algebra: DivisionAlgebra,
}

/// Upper off-diagonal positions in coordinate order.
const OFF: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl HermitianCoords {
    pub fn new(algebra: DivisionAlgebra) -> Self {
        HermitianCoords { algebra }
    }

    pub fn dim(&self) -> usize {
        3 * self.algebra.dim() + 2
    }

    /// Hermitian, trace-free matrix with the given coordinates.
    pub fn to_matrix(&self, c: &Vector) -> Mat3 {
        let m = self.algebra.dim();
        debug_assert_eq!(c.len(), self.dim());
        let s6 = 6f64.sqrt();
        let d = [c[0] / SQRT2 + c[1] / s6, -c[0] / SQRT2 + c[1] / s6, -2.0 * c[1] / s6];
        let mut out = Mat3::zero();
        for i in 0..3 {
            out.0[i][i][0] = d[i];
        }
        for (slot, &(i, j)) in OFF.iter().enumerate() {
            let mut a = [0.0; 8];
            for t in 0..m {
                a[t] = c[2 + slot * m + t] / SQRT2;
            }
            out.0[i][j] = a;
            out.0[j][i] = division::conj(&a);
        }
        out
    }

    /// Coordinates of the orthogonal projection of a Hermitian matrix onto
    /// `h3(F)_0` (the trace part is dropped).
    pub fn to_coords(&self, x: &Mat3) -> Vector {
        let m = self.algebra.dim();
        let s6 = 6f64.sqrt();
        let d: [f64; 3] = std::array::from_fn(|i| x.0[i][i][0]);
        let mut c = Vector::zeros(self.dim());
        c[0] = (d[0] - d[1]) / SQRT2;
        c[1] = (d[0] + d[1] - 2.0 * d[2]) / s6;
        for (slot, &(i, j)) in OFF.iter().enumerate() {
            let a = division::scale(&division::add(&x.0[i][j], &division::conj(&x.0[j][i])), 0.5);
            for t in 0..m {
                c[2 + slot * m + t] = SQRT2 * a[t];
            }
        }
        c
    }

    /// `Re tr(X^3)`.
    pub fn cubic(&self, c: &Vector) -> f64 {
        let x = self.to_matrix(c);
        x.mul(&x).jordan(&x).re_trace()
    }

    /// Gradient of `Re tr(X^3)`: `3 X^2` projected onto `h3(F)_0`.
    pub fn cubic_gradient(&self, c: &Vector) -> Vector {
        let x = self.to_matrix(c);
        self.to_coords(&x.mul(&x)) * 3.0
    }

    /// Hessian of `Re tr(X^3)`: `Y -> 6 X o Y`.
    pub fn cubic_hessian(&self, c: &Vector) -> crate::numkit::Mat {
        let n = self.dim();
        let x = self.to_matrix(c);
        let mut h = crate::numkit::Mat::zeros(n, n);
        for b in 0..n {
            let mut e = Vector::zeros(n);
            e[b] = 1.0;
            let y = self.to_matrix(&e);
            let col = self.to_coords(&x.jordan(&y)) * 6.0;
            h.set_column(b, &col);
        }
        crate::numkit::symmetrize(&h)
    }
}
