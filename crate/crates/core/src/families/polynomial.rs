//! Homogeneous polynomials on `R^N` given as linear combinations of a few
//! structured terms, each with closed-form gradient and Hessian.

use crate::division::DivisionAlgebra;
use crate::numkit::{Mat, Vector};

use super::jordan::HermitianCoords;

#[derive(Debug, Clone, PartialEq)]
pub enum PolyTerm {
    /// `|x|^4`.
    RadiusFourth,
    /// `|x_I|^2` for the coordinate range `I = start..end`.
    BlockSquare { start: usize, end: usize },
    /// `sum_k (x^T Q_k x)^2` for symmetric `Q_k`.
    SquaredQuadrics { forms: Vec<Mat> },
    /// `Re tr(X^3)` on trace-free Hermitian 3x3 matrices over the algebra.
    JordanCubic { algebra: DivisionAlgebra },
}

impl PolyTerm {
    pub fn degree(&self) -> usize {
        match self {
            PolyTerm::RadiusFourth | PolyTerm::SquaredQuadrics { .. } => 4,
            PolyTerm::BlockSquare { .. } => 2,
            PolyTerm::JordanCubic { .. } => 3,
        }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            PolyTerm::RadiusFourth => x.norm_squared().powi(2),
            PolyTerm::BlockSquare { start, end } => x.rows(*start, end - start).norm_squared(),
            PolyTerm::SquaredQuadrics { forms } => forms
                .iter()
                .map(|q| {
                    let v = x.dot(&(q * x));
                    v * v
                })
                .sum(),
            PolyTerm::JordanCubic { algebra } => HermitianCoords::new(*algebra).cubic(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match self {
            PolyTerm::RadiusFourth => x * (4.0 * x.norm_squared()),
            PolyTerm::BlockSquare { start, end } => {
                let mut g = Vector::zeros(x.len());
                for i in *start..*end {
                    g[i] = 2.0 * x[i];
                }
                g
            }
            PolyTerm::SquaredQuadrics { forms } => {
                let mut g = Vector::zeros(x.len());
                for q in forms {
                    let qx = q * x;
                    g.axpy(4.0 * x.dot(&qx), &qx, 1.0);
                }
                g
            }
            PolyTerm::JordanCubic { algebra } => HermitianCoords::new(*algebra).cubic_gradient(x),
        }
    }

    pub fn hessian(&self, x: &Vector) -> Mat {
        let n = x.len();
        match self {
            PolyTerm::RadiusFourth => {
                let mut h = Mat::identity(n, n) * (4.0 * x.norm_squared());
                h.ger(8.0, x, x, 1.0);
                h
            }
            PolyTerm::BlockSquare { start, end } => {
                let mut h = Mat::zeros(n, n);
                for i in *start..*end {
                    h[(i, i)] = 2.0;
                }
                h
            }
            PolyTerm::SquaredQuadrics { forms } => {
                let mut h = Mat::zeros(n, n);
                for q in forms {
                    let qx = q * x;
                    h += q * (4.0 * x.dot(&qx));
                    h.ger(8.0, &qx, &qx, 1.0);
                }
                h
            }
            PolyTerm::JordanCubic { algebra } => HermitianCoords::new(*algebra).cubic_hessian(x),
        }
    }

    pub fn laplacian(&self, x: &Vector) -> f64 {
        match self {
            PolyTerm::RadiusFourth => (4.0 * x.len() as f64 + 8.0) * x.norm_squared(),
            PolyTerm::BlockSquare { start, end } => 2.0 * (end - start) as f64,
            _ => self.hessian(x).trace(),
        }
    }
}

/// `F = sum_j c_j T_j`, homogeneous of degree `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    degree: usize,
    coefficients: Vec<f64>,
    terms: Vec<PolyTerm>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, PolyTerm)>) -> Self {
        let degree = terms.first().map_or(0, |(_, t)| t.degree());
        assert!(terms.iter().all(|(_, t)| t.degree() == degree), "mixed degrees");
        let (coefficients, terms) = terms.into_iter().unzip();
        Polynomial { degree, coefficients, terms }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn with_coefficients(&self, coefficients: &[f64]) -> Self {
        assert_eq!(coefficients.len(), self.terms.len());
        Polynomial { coefficients: coefficients.to_vec(), ..self.clone() }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        self.coefficients.iter().zip(&self.terms).map(|(c, t)| c * t.eval(x)).sum()
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(x.len());
        for (c, t) in self.coefficients.iter().zip(&self.terms) {
            g.axpy(*c, &t.gradient(x), 1.0);
        }
        g
    }

    pub fn hessian(&self, x: &Vector) -> Mat {
        let n = x.len();
        let mut h = Mat::zeros(n, n);
        for (c, t) in self.coefficients.iter().zip(&self.terms) {
            h += t.hessian(x) * *c;
        }
        h
    }

    pub fn laplacian(&self, x: &Vector) -> f64 {
        self.coefficients.iter().zip(&self.terms).map(|(c, t)| c * t.laplacian(x)).sum()
    }
}
