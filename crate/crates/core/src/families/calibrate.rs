//! Fitting the free scalars of a polynomial template to the Cartan–Münzner
//! equations `|grad F|^2 = g^2 r^(2g-2)` and `Lap F = c r^(g-2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{random_unit, seeded_rng, Mat, SeededRng, Vector};

use super::polynomial::Polynomial;

/// Residual floor a calibrated template has to reach on a fresh sample.
pub const CALIBRATION_FLOOR: f64 = 1e-8;
const MAX_ITER: usize = 100;

/// Record of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSnapshot {
    pub family: String,
    pub coefficients: Vec<f64>,
    pub seed: u64,
    pub sample_count: usize,
    /// Max of both residuals over the fresh validation sample.
    pub residual: f64,
}

impl CalibrationSnapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `c = g^2 (m2 - m1) / 2`.
pub fn laplacian_constant(g: usize, m1: usize, m2: usize) -> f64 {
    (g * g) as f64 * (m2 as f64 - m1 as f64) / 2.0
}

/// Both Cartan–Münzner residuals of `poly` at `x` (absolute values).
pub fn cm_residual_of(poly: &Polynomial, g: usize, m1: usize, m2: usize, x: &Vector) -> (f64, f64) {
    let r2 = x.norm_squared();
    let grad = poly.gradient(x);
    let r1 = (grad.norm_squared() - (g * g) as f64 * r2.powi(g as i32 - 1)).abs();
    let target = laplacian_constant(g, m1, m2) * r2.sqrt().powi(g as i32 - 2);
    (r1, (poly.laplacian(x) - target).abs())
}

/// Random ambient points with norms spread over `[0.5, 2]`.
pub fn sample_points(rng: &mut SeededRng, dim: usize, count: usize) -> Vec<Vector> {
    use rand::Rng;
    (0..count)
        .map(|_| {
            let r: f64 = rng.random_range(0.5..2.0);
            random_unit(rng, dim) * r
        })
        .collect()
}

/// Gauss–Newton on the template coefficients, starting from the template's
/// current coefficients. The fitted polynomial is validated on a fresh
/// sample drawn from the same seed stream.
pub fn calibrate_coefficients(
    template: &Polynomial,
    g: usize,
    m1: usize,
    m2: usize,
    sample_count: usize,
    seed: u64,
) -> Result<(Polynomial, f64)> {
    let dim = ambient_dim_of(template)?;
    let mut rng = seeded_rng(seed);
    let points = sample_points(&mut rng, dim, sample_count);
    let terms = template.terms();
    let q = terms.len();
    let term_grads: Vec<Vec<Vector>> = points.iter().map(|x| terms.iter().map(|t| t.gradient(x)).collect()).collect();
    let term_laps: Vec<Vec<f64>> = points.iter().map(|x| terms.iter().map(|t| t.laplacian(x)).collect()).collect();
    let c = laplacian_constant(g, m1, m2);

    let mut coeffs = Vector::from_column_slice(template.coefficients());
    for _ in 0..MAX_ITER {
        let mut res = Vector::zeros(2 * points.len());
        let mut jac = Mat::zeros(2 * points.len(), q);
        for (s, x) in points.iter().enumerate() {
            let r2 = x.norm_squared();
            let mut grad = Vector::zeros(dim);
            for j in 0..q {
                grad.axpy(coeffs[j], &term_grads[s][j], 1.0);
            }
            // Each equation is divided by its natural scale so both weigh alike.
            let s1 = r2.powi(g as i32 - 1);
            let s2 = r2.sqrt().powi(g as i32 - 2);
            res[2 * s] = (grad.norm_squared() - (g * g) as f64 * s1) / s1;
            let lap: f64 = (0..q).map(|j| coeffs[j] * term_laps[s][j]).sum();
            res[2 * s + 1] = (lap - c * s2) / s2;
            for j in 0..q {
                jac[(2 * s, j)] = 2.0 * grad.dot(&term_grads[s][j]) / s1;
                jac[(2 * s + 1, j)] = term_laps[s][j] / s2;
            }
        }
        let step = jac
            .clone()
            .svd(true, true)
            .solve(&res, 1e-14)
            .map_err(|e| Error::Integrity(format!("calibration least squares: {e}")))?;
        coeffs -= &step;
        if step.amax() < 1e-15 * (1.0 + coeffs.amax()) || res.amax() < 1e-14 {
            break;
        }
    }

    let fitted = template.with_coefficients(coeffs.as_slice());
    let fresh = sample_points(&mut rng, dim, sample_count);
    let residual = fresh
        .iter()
        .map(|x| {
            let (r1, r2) = cm_residual_of(&fitted, g, m1, m2, x);
            r1.max(r2)
        })
        .fold(0.0, f64::max);
    if !(residual < CALIBRATION_FLOOR) {
        return Err(Error::Calibration { residual, floor: CALIBRATION_FLOOR });
    }
    Ok((fitted, residual))
}

fn ambient_dim_of(poly: &Polynomial) -> Result<usize> {
    use super::polynomial::PolyTerm;
    for t in poly.terms() {
        match t {
            PolyTerm::SquaredQuadrics { forms } if !forms.is_empty() => return Ok(forms[0].nrows()),
            PolyTerm::JordanCubic { algebra } => return Ok(3 * algebra.dim() + 2),
            _ => {}
        }
    }
    let end = poly
        .terms()
        .iter()
        .filter_map(|t| match t {
            PolyTerm::BlockSquare { end, .. } => Some(*end),
            _ => None,
        })
        .max();
    end.ok_or_else(|| Error::contract("calibration template does not determine its dimension"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::polynomial::PolyTerm;

    #[test]
    fn quadratic_template_recovers_unit_coefficients() {
        let template = Polynomial::new(vec![
            (0.7, PolyTerm::BlockSquare { start: 0, end: 3 }),
            (-1.3, PolyTerm::BlockSquare { start: 3, end: 7 }),
        ]);
        // m1 = q = 3, m2 = p = 2.
        let (fit, residual) = calibrate_coefficients(&template, 2, 3, 2, 32, 5).unwrap();
        assert!(residual < 1e-12);
        assert!((fit.coefficients()[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients()[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_template_is_rejected() {
        // A single block square cannot satisfy the gradient equation on R^5.
        let template = Polynomial::new(vec![(1.0, PolyTerm::BlockSquare { start: 0, end: 3 })]);
        let err = calibrate_coefficients(&template, 2, 1, 1, 16, 1).unwrap_err();
        assert!(matches!(err, Error::Calibration { .. }));
    }
}
